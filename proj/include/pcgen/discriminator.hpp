#pragma once

#include "pcgen/encoders.hpp"
#include "pcgen/model.hpp"
#include "pcgen/tape.hpp"

namespace pcgen {

// Cross-modal critic: a point-set encoder E_X and an image encoder E_I each
// produce a feature vector; the concatenation goes through a 5-layer MLP
// head to one unbounded scalar per (image, cloud) pair. No output squashing;
// the least-squares loss regresses the raw value to 0/1.
template <class T>
typename Tape<T>::Var discriminator_graph(Tape<T>& tape, ParamStore<T>& store,
                                          const ModelConfig& cfg, typename Tape<T>::Var images,
                                          typename Tape<T>::Var cloud_rows, i64 points_per_cloud,
                                          bool trainable) {
    auto fx = tape.relu(point_encoder_trunk(tape, store, "disc.ex", cfg, cloud_rows,
                                            points_per_cloud, trainable));
    auto fi = tape.relu(image_encoder_trunk(tape, store, "disc.ei", cfg, images, trainable));
    auto h = tape.concat_cols(fi, fx);
    auto P = [&](const std::string& n) {
        return trainable ? tape.param(store, n) : tape.frozen(store, n);
    };
    const size_t depth = cfg.disc_head.size() + 1;
    for (size_t l = 1; l <= depth; ++l) {
        const std::string base = "disc.head.m" + std::to_string(l);
        h = tape.affine(h, P(base + ".w"), P(base + ".b"));
        if (l < depth) h = tape.relu(h);
    }
    return h;  // B x 1
}

// Critic objective on a batch: mean of 0.5 * [(D(I,X) - 1)^2 + D(I,X_fake)^2].
// Fake rows must be detached (constants) so no gradient reaches the
// generator from here.
template <class T>
typename Tape<T>::Var discriminator_loss_graph(Tape<T>& tape, ParamStore<T>& store,
                                               const ModelConfig& cfg,
                                               typename Tape<T>::Var images,
                                               typename Tape<T>::Var real_rows,
                                               typename Tape<T>::Var fake_rows,
                                               i64 points_per_cloud) {
    auto d_real = discriminator_graph(tape, store, cfg, images, real_rows, points_per_cloud, true);
    auto d_fake = discriminator_graph(tape, store, cfg, images, fake_rows, points_per_cloud, true);
    auto real_term = tape.mul(tape.add_scalar(d_real, T(-1)), tape.add_scalar(d_real, T(-1)));
    auto fake_term = tape.mul(d_fake, d_fake);
    return tape.scale(tape.mean_all(tape.add(real_term, fake_term)), T(0.5));
}

// ----- plain (non-graph) operations -----------------------------------------

template <class T>
double discriminate(ParamStore<T>& store, const ModelConfig& cfg, const ImageTensor& image,
                    const PointCloud& cloud) {
    if (cloud.empty()) throw NumericError("discriminate: empty cloud");
    Tape<T> tape(false);
    auto v = discriminator_graph(tape, store, cfg, tape.constant(images_to_batch<T>({&image})),
                                 tape.constant(clouds_to_rows<T>({&cloud})), cloud.size(), false);
    return tape.scalar(v);
}

template <class T>
double discriminator_loss(ParamStore<T>& store, const ModelConfig& cfg, const ImageTensor& image,
                          const PointCloud& real, const PointCloud& fake) {
    const double dr = discriminate(store, cfg, image, real);
    const double df = discriminate(store, cfg, image, fake);
    return 0.5 * ((dr - 1.0) * (dr - 1.0) + df * df);
}

}  // namespace pcgen
