#pragma once

#include "pcgen/geometry.hpp"
#include "pcgen/model.hpp"
#include "pcgen/tape.hpp"

namespace pcgen {

// Diagonal Gaussian over the shape latent, parameterized by mean and
// log-variance so positivity needs no constraint.
struct LatentGaussian {
    std::vector<double> mean;
    std::vector<double> log_var;

    i64 dim() const { return static_cast<i64>(mean.size()); }
};

// Graph-side pair of (mean, log_var) variables, each B x d.
template <class T>
struct LatentVars {
    typename Tape<T>::Var mean;
    typename Tape<T>::Var log_var;
};

// Flattens clouds into a (B*N x 3) row matrix; all clouds must share N.
template <class T>
Tensor<T> clouds_to_rows(const std::vector<const PointCloud*>& clouds) {
    if (clouds.empty()) throw NumericError("clouds_to_rows: empty batch");
    const i64 n = clouds[0]->size();
    for (const auto* c : clouds)
        if (c->size() != n) throw NumericError("clouds_to_rows: ragged batch");
    Tensor<T> rows({static_cast<i64>(clouds.size()) * n, 3});
    i64 r = 0;
    for (const auto* c : clouds)
        for (const auto& p : c->points) {
            rows.v[r * 3 + 0] = static_cast<T>(p.x);
            rows.v[r * 3 + 1] = static_cast<T>(p.y);
            rows.v[r * 3 + 2] = static_cast<T>(p.z);
            ++r;
        }
    return rows;
}

template <class T>
Tensor<T> images_to_batch(const std::vector<const ImageTensor*>& images) {
    if (images.empty()) throw NumericError("images_to_batch: empty batch");
    const int h = images[0]->height, w = images[0]->width, c = images[0]->channels;
    for (const auto* im : images)
        if (im->height != h || im->width != w || im->channels != c)
            throw NumericError("images_to_batch: ragged batch");
    Tensor<T> x({static_cast<i64>(images.size()), c, h, w});
    i64 off = 0;
    for (const auto* im : images) {
        // HWC file layout to CHW.
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx)
                    x.v[off + (ch * h + y) * w + xx] = static_cast<T>(im->at(y, xx, ch));
        off += static_cast<i64>(c) * h * w;
    }
    return x;
}

// Shared per-point MLP, max-pool over each cloud's rows, affine head.
// Exactly permutation-invariant via the pool. Returns the raw head output
// (B x out_dim).
template <class T>
typename Tape<T>::Var point_encoder_trunk(Tape<T>& tape, ParamStore<T>& store,
                                          const std::string& prefix, const ModelConfig& cfg,
                                          typename Tape<T>::Var rows, i64 points_per_cloud,
                                          bool trainable) {
    auto P = [&](const std::string& n) {
        return trainable ? tape.param(store, prefix + n) : tape.frozen(store, prefix + n);
    };
    auto h = rows;
    for (size_t l = 0; l < cfg.point_widths.size(); ++l) {
        const std::string base = ".l" + std::to_string(l + 1);
        h = tape.relu(tape.affine(h, P(base + ".w"), P(base + ".b")));
    }
    auto pooled = tape.segment_max(h, points_per_cloud);
    return tape.affine(pooled, P(".head.w"), P(".head.b"));
}

// Strided conv blocks, global average pool, affine head (B x out_dim).
template <class T>
typename Tape<T>::Var image_encoder_trunk(Tape<T>& tape, ParamStore<T>& store,
                                          const std::string& prefix, const ModelConfig& cfg,
                                          typename Tape<T>::Var images, bool trainable) {
    const Tensor<T>& x = tape.value(images);
    if (x.ndim() != 4) throw NumericError("image encoder: expected BxCxHxW input");
    if (x.dim(2) < 8 || x.dim(3) < 8)
        throw NumericError("image encoder: image must be at least 8x8");
    auto P = [&](const std::string& n) {
        return trainable ? tape.param(store, prefix + n) : tape.frozen(store, prefix + n);
    };
    auto h = images;
    i64 in_ch = cfg.image_in_channels;
    for (size_t l = 0; l < cfg.image_channels.size(); ++l) {
        Conv2dSpec cs;
        cs.in_channels = in_ch;
        cs.out_channels = cfg.image_channels[l];
        const std::string base = ".c" + std::to_string(l + 1);
        h = tape.relu(tape.conv2d(h, P(base + ".w"), P(base + ".b"), cs));
        in_ch = cs.out_channels;
    }
    auto pooled = tape.global_avg_pool(h);
    return tape.affine(pooled, P(".head.w"), P(".head.b"));
}

template <class T>
LatentVars<T> split_gaussian_head(Tape<T>& tape, typename Tape<T>::Var head, i64 d) {
    std::vector<i64> mean_cols(static_cast<size_t>(d)), var_cols(static_cast<size_t>(d));
    for (i64 i = 0; i < d; ++i) {
        mean_cols[static_cast<size_t>(i)] = i;
        var_cols[static_cast<size_t>(i)] = d + i;
    }
    return {tape.select_cols(head, mean_cols), tape.select_cols(head, var_cols)};
}

// q_phi(z | X) for a batch of clouds flattened to rows.
template <class T>
LatentVars<T> encode_points_graph(Tape<T>& tape, ParamStore<T>& store, const ModelConfig& cfg,
                                  typename Tape<T>::Var rows, i64 points_per_cloud,
                                  bool trainable = true) {
    auto head = point_encoder_trunk(tape, store, "phi", cfg, rows, points_per_cloud, trainable);
    return split_gaussian_head(tape, head, cfg.latent_dim);
}

// p_psi(z | I) for an image batch.
template <class T>
LatentVars<T> encode_image_graph(Tape<T>& tape, ParamStore<T>& store, const ModelConfig& cfg,
                                 typename Tape<T>::Var images, bool trainable = true) {
    auto head = image_encoder_trunk(tape, store, "psi", cfg, images, trainable);
    return split_gaussian_head(tape, head, cfg.latent_dim);
}

// z = mean + exp(log_var / 2) * eps with eps given as a constant tensor, so
// gradients reach mean and log_var.
template <class T>
typename Tape<T>::Var reparam_graph(Tape<T>& tape, const LatentVars<T>& g,
                                    typename Tape<T>::Var eps) {
    auto sigma = tape.exp_(tape.scale(g.log_var, T(0.5)));
    return tape.add(g.mean, tape.mul(sigma, eps));
}

// Analytic diagonal-Gaussian KL(q || p), one scalar per batch row.
template <class T>
typename Tape<T>::Var kl_rows_graph(Tape<T>& tape, const LatentVars<T>& q,
                                    const LatentVars<T>& p) {
    auto dlv = tape.sub(q.log_var, p.log_var);          // log(sq^2 / sp^2)
    auto ratio = tape.exp_(dlv);                        // sq^2 / sp^2
    auto dm = tape.sub(q.mean, p.mean);
    auto m2 = tape.mul(tape.mul(dm, dm), tape.exp_(tape.neg(p.log_var)));
    auto inner = tape.sub(tape.add(ratio, m2), tape.add_scalar(dlv, T(1)));
    return tape.scale(tape.row_sum(inner), T(0.5));
}

// ----- plain (non-graph) operations -----------------------------------------

template <class T>
LatentGaussian encode_points(ParamStore<T>& store, const ModelConfig& cfg,
                             const PointCloud& cloud) {
    if (cloud.empty()) throw NumericError("encode_points: empty cloud");
    Tape<T> tape(false);
    auto rows = tape.constant(clouds_to_rows<T>({&cloud}));
    auto g = encode_points_graph(tape, store, cfg, rows, cloud.size(), false);
    LatentGaussian out;
    for (T v : tape.value(g.mean).v) out.mean.push_back(static_cast<double>(v));
    for (T v : tape.value(g.log_var).v) out.log_var.push_back(static_cast<double>(v));
    return out;
}

template <class T>
LatentGaussian encode_image(ParamStore<T>& store, const ModelConfig& cfg,
                            const ImageTensor& image) {
    Tape<T> tape(false);
    auto x = tape.constant(images_to_batch<T>({&image}));
    auto g = encode_image_graph(tape, store, cfg, x, false);
    LatentGaussian out;
    for (T v : tape.value(g.mean).v) out.mean.push_back(static_cast<double>(v));
    for (T v : tape.value(g.log_var).v) out.log_var.push_back(static_cast<double>(v));
    return out;
}

std::vector<double> reparam_sample(const LatentGaussian& g, Rng& rng);
double kl_gaussians(const LatentGaussian& q, const LatentGaussian& p);

}  // namespace pcgen
