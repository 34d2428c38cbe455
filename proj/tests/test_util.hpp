#pragma once

#include <filesystem>
#include <string>

#include "pcgen/encoders.hpp"
#include "pcgen/model.hpp"

namespace pcgen::testutil {

// Small architecture for gradient checks and mini training runs.
inline ModelConfig tiny_model(i64 d = 4, i64 flow_layers = 4) {
    ModelConfig cfg;
    cfg.latent_dim = d;
    cfg.flow_layers = flow_layers;
    cfg.cond_hidden = 12;
    cfg.point_widths = {8, 12, 16};
    cfg.image_channels = {4, 6, 8, 8};
    cfg.disc_feature = 8;
    cfg.disc_head = {16, 12, 8, 6};
    return cfg;
}

inline PointCloud random_cloud(i64 n, Rng& rng, double scale = 1.0) {
    PointCloud c;
    c.points.reserve(static_cast<size_t>(n));
    for (i64 i = 0; i < n; ++i)
        c.points.push_back({rng.uniform(-scale, scale), rng.uniform(-scale, scale),
                            rng.uniform(-scale, scale)});
    return c;
}

inline ImageTensor random_image(int res, Rng& rng) {
    ImageTensor img(res, res, 1);
    for (auto& v : img.values) v = rng.uniform();
    return img;
}

// Adds N(0, sigma) noise to every parameter; keeps flows invertible but
// away from the identity.
template <class T>
void perturb_params(ParamStore<T>& store, double sigma, Rng& rng) {
    for (auto& e : store.entries())
        for (auto& v : e.value.v) v += static_cast<T>(rng.normal() * sigma);
}

inline std::string fresh_dir(const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path p = fs::temp_directory_path() / ("pcgen_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

}  // namespace pcgen::testutil
