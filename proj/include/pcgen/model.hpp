#pragma once

#include <string>
#include <vector>

#include "pcgen/params.hpp"

namespace pcgen {

// Architecture of the generator (point encoder phi, image encoder psi,
// coupling-flow decoder theta) and the cross-modal discriminator.
//
// Defaults are the desk-scale configuration; latent_dim=512 / flow_layers=63
// reproduce the full-scale sizes when resources allow.
struct ModelConfig {
    i64 latent_dim = 64;
    i64 flow_layers = 16;
    i64 cond_hidden = 128;      // conditioner MLP width, two hidden layers
    double scale_clamp = 2.0;   // |log-scale| bound via clamp * tanh(s / clamp)

    std::vector<i64> point_widths = {64, 128, 256};   // shared per-point MLP
    std::vector<i64> image_channels = {16, 32, 64, 128};  // strided conv blocks
    i64 image_in_channels = 1;

    i64 disc_feature = 128;                         // per-modality feature width
    std::vector<i64> disc_head = {256, 128, 64, 32};  // hidden widths; 5 affine layers total

    void validate() const;

    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

// Parameter naming: "phi.*" point encoder, "psi.*" image encoder, "theta.*"
// flow, "disc.*" discriminator. Inference needs only psi.* and theta.*.
inline bool is_generator_param(const std::string& name) {
    return name.rfind("phi.", 0) == 0 || name.rfind("psi.", 0) == 0 ||
           name.rfind("theta.", 0) == 0;
}
inline bool is_discriminator_param(const std::string& name) { return name.rfind("disc.", 0) == 0; }
inline bool is_inference_param(const std::string& name) {
    return name.rfind("psi.", 0) == 0 || name.rfind("theta.", 0) == 0;
}

// Passive/active coordinate split of one coupling layer. The six proper
// subsets of {x,y,z} cycle with depth, so every coordinate is transformed
// at least once in any six consecutive layers.
struct CouplingMask {
    std::vector<i64> passive;
    std::vector<i64> active;
};
CouplingMask coupling_mask(i64 layer_index);

template <class T>
void init_point_encoder(ParamStore<T>& store, const std::string& prefix, const ModelConfig& cfg,
                        i64 out_dim, Rng& rng) {
    i64 in = 3;
    for (size_t l = 0; l < cfg.point_widths.size(); ++l) {
        const i64 out = cfg.point_widths[l];
        const std::string base = prefix + ".l" + std::to_string(l + 1);
        store.create(base + ".w", xavier_uniform<T>({in, out}, in, out, rng));
        store.create(base + ".b", Tensor<T>({out}));
        in = out;
    }
    store.create(prefix + ".head.w", xavier_uniform<T>({in, out_dim}, in, out_dim, rng));
    store.create(prefix + ".head.b", Tensor<T>({out_dim}));
}

template <class T>
void init_image_encoder(ParamStore<T>& store, const std::string& prefix, const ModelConfig& cfg,
                        i64 out_dim, Rng& rng) {
    i64 in_ch = cfg.image_in_channels;
    for (size_t l = 0; l < cfg.image_channels.size(); ++l) {
        const i64 out_ch = cfg.image_channels[l];
        const std::string base = prefix + ".c" + std::to_string(l + 1);
        const i64 fan_in = in_ch * 9, fan_out = out_ch * 9;
        store.create(base + ".w", xavier_uniform<T>({out_ch, in_ch, 3, 3}, fan_in, fan_out, rng));
        store.create(base + ".b", Tensor<T>({out_ch}));
        in_ch = out_ch;
    }
    store.create(prefix + ".head.w", xavier_uniform<T>({in_ch, out_dim}, in_ch, out_dim, rng));
    store.create(prefix + ".head.b", Tensor<T>({out_dim}));
}

// Conditioner of one coupling layer; the output layer starts at zero so the
// whole flow begins as the identity map.
template <class T>
void init_flow(ParamStore<T>& store, const ModelConfig& cfg, Rng& rng) {
    const i64 d = cfg.latent_dim, h = cfg.cond_hidden;
    for (i64 l = 0; l < cfg.flow_layers; ++l) {
        const CouplingMask mask = coupling_mask(l);
        const i64 p = static_cast<i64>(mask.passive.size());
        const i64 a = static_cast<i64>(mask.active.size());
        char base[32];
        std::snprintf(base, sizeof base, "theta.l%02d", static_cast<int>(l));
        const std::string bs(base);
        store.create(bs + ".wp", xavier_uniform<T>({p, h}, p + d, h, rng));
        store.create(bs + ".wz", xavier_uniform<T>({d, h}, p + d, h, rng));
        store.create(bs + ".b1", Tensor<T>({h}));
        store.create(bs + ".w2", xavier_uniform<T>({h, h}, h, h, rng));
        store.create(bs + ".b2", Tensor<T>({h}));
        store.create(bs + ".w3", Tensor<T>({h, 2 * a}));
        store.create(bs + ".b3", Tensor<T>({2 * a}));
    }
}

template <class T>
void init_generator(ParamStore<T>& store, const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    init_point_encoder(store, "phi", cfg, 2 * cfg.latent_dim, rng);
    init_image_encoder(store, "psi", cfg, 2 * cfg.latent_dim, rng);
    init_flow(store, cfg, rng);
}

template <class T>
void init_discriminator(ParamStore<T>& store, const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    init_point_encoder(store, "disc.ex", cfg, cfg.disc_feature, rng);
    init_image_encoder(store, "disc.ei", cfg, cfg.disc_feature, rng);
    i64 in = 2 * cfg.disc_feature;
    for (size_t l = 0; l < cfg.disc_head.size(); ++l) {
        const i64 out = cfg.disc_head[l];
        const std::string base = "disc.head.m" + std::to_string(l + 1);
        store.create(base + ".w", xavier_uniform<T>({in, out}, in, out, rng));
        store.create(base + ".b", Tensor<T>({out}));
        in = out;
    }
    // Final layer starts at zero: the untrained critic scores everything 0.
    const std::string last = "disc.head.m" + std::to_string(cfg.disc_head.size() + 1);
    store.create(last + ".w", Tensor<T>({in, 1}));
    store.create(last + ".b", Tensor<T>({1}));
}

template <class T>
void init_model(ParamStore<T>& store, const ModelConfig& cfg, Rng& rng) {
    init_generator(store, cfg, rng);
    init_discriminator(store, cfg, rng);
}

}  // namespace pcgen
