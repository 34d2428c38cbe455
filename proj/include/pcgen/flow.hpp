#pragma once

#include "pcgen/encoders.hpp"
#include "pcgen/geometry.hpp"
#include "pcgen/model.hpp"
#include "pcgen/tape.hpp"

namespace pcgen {

// Conditional coupling-flow decoder over 3-d points. Forward mode pushes
// base-normal draws to data space for sampling; reverse mode pulls data
// points back to the base for exact log-likelihoods. The Jacobian of each
// layer is triangular, so the log-determinant is the sum of the (clamped)
// log-scales of the active coordinates.
//
// Graph-side variables: `rows` is (R x 3) with R = B * points_per_cloud and
// `z_batch` is (B x d); the conditioner input is the passive coordinates of
// each row plus that row's cloud latent.

template <class T>
struct FlowRows {
    typename Tape<T>::Var points;  // R x 3
    typename Tape<T>::Var logdet;  // R x 1, per-point log|det|
};

namespace detail {

template <class T>
struct CouplingNets {
    typename Tape<T>::Var s_hat;  // R x a, clamped log-scales
    typename Tape<T>::Var t;      // R x a, shifts
    typename Tape<T>::Var passive;
};

// Conditioner shared by both directions: reads the passive coordinates and
// z, emits clamped log-scales and shifts for the active coordinates.
template <class T>
CouplingNets<T> coupling_nets(Tape<T>& tape, ParamStore<T>& store, const ModelConfig& cfg,
                              i64 layer, typename Tape<T>::Var rows,
                              typename Tape<T>::Var z_batch, i64 points_per_cloud,
                              bool trainable) {
    char base[32];
    std::snprintf(base, sizeof base, "theta.l%02d", static_cast<int>(layer));
    const std::string bs(base);
    auto P = [&](const std::string& n) {
        return trainable ? tape.param(store, bs + n) : tape.frozen(store, bs + n);
    };
    const CouplingMask mask = coupling_mask(layer);
    const i64 a = static_cast<i64>(mask.active.size());

    auto passive = tape.select_cols(rows, mask.passive);
    // The z half of the first layer is computed per cloud and broadcast per
    // point inside the fused op; the d-wide product stays out of the
    // per-point hot path.
    auto zlin = tape.affine(z_batch, P(".wz"), P(".b1"));
    auto h1 = tape.relu_add_segment(tape.matmul(passive, P(".wp")), zlin, points_per_cloud);
    auto h2 = tape.relu(tape.affine(h1, P(".w2"), P(".b2")));
    auto st = tape.affine(h2, P(".w3"), P(".b3"));

    std::vector<i64> s_cols, t_cols;
    for (i64 j = 0; j < a; ++j) s_cols.push_back(j);
    for (i64 j = 0; j < a; ++j) t_cols.push_back(a + j);
    const T clamp = static_cast<T>(cfg.scale_clamp);
    auto s_raw = tape.select_cols(st, s_cols);
    auto s_hat = tape.scale(tape.tanh_(tape.scale(s_raw, T(1) / clamp)), clamp);
    return {s_hat, tape.select_cols(st, t_cols), passive};
}

}  // namespace detail

// One layer, base-to-data direction: active' = active * exp(s_hat) + t.
template <class T>
FlowRows<T> coupling_forward_graph(Tape<T>& tape, ParamStore<T>& store, const ModelConfig& cfg,
                                   i64 layer, typename Tape<T>::Var rows,
                                   typename Tape<T>::Var z_batch, i64 points_per_cloud,
                                   bool trainable) {
    const CouplingMask mask = coupling_mask(layer);
    auto nets = detail::coupling_nets(tape, store, cfg, layer, rows, z_batch, points_per_cloud,
                                      trainable);
    auto active = tape.select_cols(rows, mask.active);
    auto out_active = tape.add(tape.mul(active, tape.exp_(nets.s_hat)), nets.t);
    auto out = tape.assemble_cols(nets.passive, out_active, mask.passive, mask.active, 3);
    return {out, tape.row_sum(nets.s_hat)};
}

// One layer, data-to-base direction: active = (active' - t) * exp(-s_hat).
// The returned logdet is that of the inverse map, i.e. -sum(s_hat).
template <class T>
FlowRows<T> coupling_inverse_graph(Tape<T>& tape, ParamStore<T>& store, const ModelConfig& cfg,
                                   i64 layer, typename Tape<T>::Var rows,
                                   typename Tape<T>::Var z_batch, i64 points_per_cloud,
                                   bool trainable) {
    const CouplingMask mask = coupling_mask(layer);
    auto nets = detail::coupling_nets(tape, store, cfg, layer, rows, z_batch, points_per_cloud,
                                      trainable);
    auto active = tape.select_cols(rows, mask.active);
    auto out_active = tape.mul(tape.sub(active, nets.t), tape.exp_(tape.neg(nets.s_hat)));
    auto out = tape.assemble_cols(nets.passive, out_active, mask.passive, mask.active, 3);
    return {out, tape.neg(tape.row_sum(nets.s_hat))};
}

template <class T>
FlowRows<T> flow_forward_rows(Tape<T>& tape, ParamStore<T>& store, const ModelConfig& cfg,
                              typename Tape<T>::Var u_rows, typename Tape<T>::Var z_batch,
                              i64 points_per_cloud, bool trainable) {
    auto rows = u_rows;
    typename Tape<T>::Var logdet;
    for (i64 l = 0; l < cfg.flow_layers; ++l) {
        auto step = coupling_forward_graph(tape, store, cfg, l, rows, z_batch, points_per_cloud,
                                           trainable);
        rows = step.points;
        logdet = l == 0 ? step.logdet : tape.add(logdet, step.logdet);
    }
    return {rows, logdet};
}

template <class T>
FlowRows<T> flow_inverse_rows(Tape<T>& tape, ParamStore<T>& store, const ModelConfig& cfg,
                              typename Tape<T>::Var x_rows, typename Tape<T>::Var z_batch,
                              i64 points_per_cloud, bool trainable) {
    auto rows = x_rows;
    typename Tape<T>::Var logdet;
    for (i64 l = cfg.flow_layers - 1; l >= 0; --l) {
        auto step = coupling_inverse_graph(tape, store, cfg, l, rows, z_batch, points_per_cloud,
                                           trainable);
        rows = step.points;
        logdet = l == cfg.flow_layers - 1 ? step.logdet : tape.add(logdet, step.logdet);
    }
    return {rows, logdet};
}

// Per-point log p_theta(x | z) by change of variables: the base log-pdf of
// the pulled-back point plus the inverse log-determinant. (R x 1)
template <class T>
typename Tape<T>::Var log_prob_rows(Tape<T>& tape, ParamStore<T>& store, const ModelConfig& cfg,
                                    typename Tape<T>::Var x_rows, typename Tape<T>::Var z_batch,
                                    i64 points_per_cloud, bool trainable) {
    auto inv = flow_inverse_rows(tape, store, cfg, x_rows, z_batch, points_per_cloud, trainable);
    return tape.add(tape.std_normal_logpdf_rows(inv.points), inv.logdet);
}

// ----- plain (non-graph) operations -----------------------------------------

template <class T>
Tensor<T> latent_to_tensor(const std::vector<double>& z) {
    Tensor<T> t({1, static_cast<i64>(z.size())});
    for (size_t i = 0; i < z.size(); ++i) t.v[i] = static_cast<T>(z[i]);
    return t;
}

namespace detail {

template <class T, class StepFn>
std::pair<Vec3, double> run_point_step(Tape<T>& tape, const Vec3& p, const std::vector<double>& z,
                                       StepFn&& step) {
    Tensor<T> row({1, 3});
    row.v = {static_cast<T>(p.x), static_cast<T>(p.y), static_cast<T>(p.z)};
    FlowRows<T> res = step(tape.constant(row), tape.constant(latent_to_tensor<T>(z)));
    const auto& out = tape.value(res.points).v;
    return {{static_cast<double>(out[0]), static_cast<double>(out[1]),
             static_cast<double>(out[2])},
            static_cast<double>(tape.value(res.logdet).v[0])};
}

}  // namespace detail

// Single-point, single-layer steps.
template <class T>
std::pair<Vec3, double> coupling_forward(ParamStore<T>& store, const ModelConfig& cfg, i64 layer,
                                         const Vec3& y, const std::vector<double>& z) {
    Tape<T> tape(false);
    return detail::run_point_step(tape, y, z, [&](auto rows, auto zb) {
        return coupling_forward_graph(tape, store, cfg, layer, rows, zb, 1, false);
    });
}

template <class T>
std::pair<Vec3, double> coupling_inverse(ParamStore<T>& store, const ModelConfig& cfg, i64 layer,
                                         const Vec3& y, const std::vector<double>& z) {
    Tape<T> tape(false);
    return detail::run_point_step(tape, y, z, [&](auto rows, auto zb) {
        return coupling_inverse_graph(tape, store, cfg, layer, rows, zb, 1, false);
    });
}

// (point, logdet) through the full stack, one direction.
template <class T>
std::pair<Vec3, double> flow_forward(ParamStore<T>& store, const ModelConfig& cfg, const Vec3& u,
                                     const std::vector<double>& z) {
    Tape<T> tape(false);
    Tensor<T> row({1, 3});
    row.v = {static_cast<T>(u.x), static_cast<T>(u.y), static_cast<T>(u.z)};
    auto res = flow_forward_rows(tape, store, cfg, tape.constant(row),
                                 tape.constant(latent_to_tensor<T>(z)), 1, false);
    const auto& p = tape.value(res.points).v;
    return {{static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2])},
            static_cast<double>(tape.value(res.logdet).v[0])};
}

template <class T>
std::pair<Vec3, double> flow_inverse(ParamStore<T>& store, const ModelConfig& cfg, const Vec3& x,
                                     const std::vector<double>& z) {
    Tape<T> tape(false);
    Tensor<T> row({1, 3});
    row.v = {static_cast<T>(x.x), static_cast<T>(x.y), static_cast<T>(x.z)};
    auto res = flow_inverse_rows(tape, store, cfg, tape.constant(row),
                                 tape.constant(latent_to_tensor<T>(z)), 1, false);
    const auto& p = tape.value(res.points).v;
    return {{static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2])},
            static_cast<double>(tape.value(res.logdet).v[0])};
}

template <class T>
double log_prob_point(ParamStore<T>& store, const ModelConfig& cfg, const Vec3& x,
                      const std::vector<double>& z) {
    Tape<T> tape(false);
    Tensor<T> row({1, 3});
    row.v = {static_cast<T>(x.x), static_cast<T>(x.y), static_cast<T>(x.z)};
    auto lp = log_prob_rows(tape, store, cfg, tape.constant(row),
                            tape.constant(latent_to_tensor<T>(z)), 1, false);
    return static_cast<double>(tape.value(lp).v[0]);
}

// n i.i.d. base draws pushed through the forward flow; any n >= 1 regardless
// of the resolution the model was trained at.
template <class T>
PointCloud sample_cloud(ParamStore<T>& store, const ModelConfig& cfg,
                        const std::vector<double>& z, i64 n, Rng& rng) {
    if (n < 1) throw NumericError("sample_cloud: n must be >= 1");
    Tape<T> tape(false);
    Tensor<T> u({n, 3});
    for (auto& v : u.v) v = static_cast<T>(rng.normal());
    auto res = flow_forward_rows(tape, store, cfg, tape.constant(u),
                                 tape.constant(latent_to_tensor<T>(z)), n, false);
    const Tensor<T>& pts = tape.value(res.points);
    PointCloud cloud;
    cloud.points.reserve(static_cast<size_t>(n));
    for (i64 i = 0; i < n; ++i)
        cloud.points.push_back({static_cast<double>(pts.v[i * 3 + 0]),
                                static_cast<double>(pts.v[i * 3 + 1]),
                                static_cast<double>(pts.v[i * 3 + 2])});
    return cloud;
}

}  // namespace pcgen
