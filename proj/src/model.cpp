#include "pcgen/model.hpp"

#include <algorithm>

#include <json.hpp>

namespace pcgen {

using json = nlohmann::ordered_json;

void ModelConfig::validate() const {
    if (latent_dim < 1) throw ConfigError("model: latent_dim must be positive");
    if (flow_layers < 1) throw ConfigError("model: flow_layers must be >= 1");
    if (cond_hidden < 1) throw ConfigError("model: cond_hidden must be positive");
    if (!(scale_clamp > 0.0)) throw ConfigError("model: scale_clamp must be positive");
    if (point_widths.empty() || image_channels.empty())
        throw ConfigError("model: encoder widths must be non-empty");
    if (image_in_channels != 1 && image_in_channels != 3)
        throw ConfigError("model: image_in_channels must be 1 or 3");
    if (disc_feature < 1) throw ConfigError("model: disc_feature must be positive");
    if (disc_head.size() != 4)
        throw ConfigError("model: disc_head needs 4 hidden widths (5 affine layers total)");
}

std::string ModelConfig::to_json() const {
    json j = {{"latent_dim", latent_dim},
              {"flow_layers", flow_layers},
              {"cond_hidden", cond_hidden},
              {"scale_clamp", scale_clamp},
              {"point_widths", point_widths},
              {"image_channels", image_channels},
              {"image_in_channels", image_in_channels},
              {"disc_feature", disc_feature},
              {"disc_head", disc_head}};
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad model config json: ") + e.what());
    }
    ModelConfig cfg;
    cfg.latent_dim = j.value("latent_dim", cfg.latent_dim);
    cfg.flow_layers = j.value("flow_layers", cfg.flow_layers);
    cfg.cond_hidden = j.value("cond_hidden", cfg.cond_hidden);
    cfg.scale_clamp = j.value("scale_clamp", cfg.scale_clamp);
    if (j.contains("point_widths")) cfg.point_widths = j["point_widths"].get<std::vector<i64>>();
    if (j.contains("image_channels"))
        cfg.image_channels = j["image_channels"].get<std::vector<i64>>();
    cfg.image_in_channels = j.value("image_in_channels", cfg.image_in_channels);
    cfg.disc_feature = j.value("disc_feature", cfg.disc_feature);
    if (j.contains("disc_head")) cfg.disc_head = j["disc_head"].get<std::vector<i64>>();
    cfg.validate();
    return cfg;
}

CouplingMask coupling_mask(i64 layer_index) {
    // Six proper subsets of the three coordinates, one or two passive.
    static const std::vector<std::vector<i64>> kPassive = {{0}, {1}, {2}, {1, 2}, {0, 2}, {0, 1}};
    const auto& passive = kPassive[static_cast<size_t>(layer_index % 6)];
    CouplingMask m;
    m.passive = passive;
    for (i64 c = 0; c < 3; ++c)
        if (std::find(passive.begin(), passive.end(), c) == passive.end()) m.active.push_back(c);
    return m;
}

}  // namespace pcgen
