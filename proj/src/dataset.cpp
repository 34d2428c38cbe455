#include "pcgen/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include <json.hpp>

#include "pcgen/io.hpp"

namespace pcgen {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr ShapeFamily kFamilyOrder[4] = {ShapeFamily::Ellipsoid, ShapeFamily::Box,
                                         ShapeFamily::CylinderComposite, ShapeFamily::Cross};

std::string sample_id(ShapeFamily fam, int shape_idx, int view_idx) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s_%04d_v%d", shape_family_name(fam), shape_idx, view_idx);
    return buf;
}

}  // namespace

std::vector<ManifestRecord> build_dataset(const DatasetConfig& config, const std::string& out_dir) {
    if (config.categories < 1 || config.categories > 4)
        throw ConfigError("dataset: categories must be in [1, 4]");
    if (config.shapes_per_category < 1 || config.views_per_shape < 1 || config.cloud_points < 1)
        throw ConfigError("dataset: counts must be positive");
    if (config.train_fraction < 0.0 || config.train_fraction > 1.0)
        throw ConfigError("dataset: train_fraction must be in [0, 1]");
    if (config.image_resolution < 8) throw ConfigError("dataset: image_resolution must be >= 8");

    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "clouds", ec);
    fs::create_directories(fs::path(out_dir) / "images", ec);
    if (ec) throw DataError("cannot create dataset directories under " + out_dir);

    std::vector<ManifestRecord> manifest;
    json shapes = json::object();

    const int train_shapes =
        static_cast<int>(std::lround(config.train_fraction * config.shapes_per_category));
    for (int c = 0; c < config.categories; ++c) {
        const ShapeFamily fam = kFamilyOrder[c];
        for (int s = 0; s < config.shapes_per_category; ++s) {
            Rng shape_rng(derive_seed(config.seed, {0x5a, static_cast<std::uint64_t>(c),
                                                    static_cast<std::uint64_t>(s)}));
            const ShapeSpec spec = random_shape_spec(fam, c, shape_rng);
            // Split by shape instance: all views of a shape share the split.
            const std::string split = s < train_shapes ? "train" : "test";

            Rng cloud_rng(derive_seed(config.seed, {0xc1, static_cast<std::uint64_t>(c),
                                                    static_cast<std::uint64_t>(s)}));
            const PointCloud cloud = sample_shape_surface(spec, config.cloud_points, cloud_rng);

            for (int v = 0; v < config.views_per_shape; ++v) {
                Rng view_rng(derive_seed(config.seed, {0xe4, static_cast<std::uint64_t>(c),
                                                       static_cast<std::uint64_t>(s),
                                                       static_cast<std::uint64_t>(v)}));
                const double azimuth = view_rng.uniform(0.0, 6.283185307179586);
                const double elevation = view_rng.uniform(-1.0471975511965976, 1.0471975511965976);

                ManifestRecord rec;
                rec.id = sample_id(fam, s, v);
                rec.category = c;
                rec.split = split;
                rec.cloud_path = "clouds/" + rec.id + ".pcb";
                rec.image_path = "images/" + rec.id + ".pgm";
                rec.azimuth = azimuth;
                rec.elevation = elevation;

                write_cloud_binary((fs::path(out_dir) / rec.cloud_path).string(), cloud);
                const ImageTensor img =
                    render_silhouette(spec, azimuth, elevation, config.image_resolution);
                write_image((fs::path(out_dir) / rec.image_path).string(), img);

                shapes[rec.id] = {{"family", shape_family_name(fam)},
                                  {"params", spec.params},
                                  {"category", c}};
                manifest.push_back(std::move(rec));
            }
        }
    }

    std::sort(manifest.begin(), manifest.end(),
              [](const ManifestRecord& a, const ManifestRecord& b) { return a.id < b.id; });

    json marr = json::array();
    for (const auto& r : manifest) {
        marr.push_back({{"id", r.id},
                        {"category", r.category},
                        {"split", r.split},
                        {"cloud_path", r.cloud_path},
                        {"image_path", r.image_path},
                        {"azimuth", r.azimuth},
                        {"elevation", r.elevation}});
    }
    write_text_file((fs::path(out_dir) / "manifest.json").string(), marr.dump(2) + "\n");
    write_text_file((fs::path(out_dir) / "shapes.json").string(), shapes.dump(2) + "\n");
    return manifest;
}

std::vector<ManifestRecord> load_manifest(const std::string& manifest_path) {
    json doc;
    try {
        doc = json::parse(read_text_file(manifest_path));
    } catch (const json::exception& e) {
        throw DataError("bad manifest json " + manifest_path + ": " + e.what());
    }
    if (!doc.is_array()) throw DataError("manifest is not an array: " + manifest_path);
    std::vector<ManifestRecord> out;
    for (const auto& j : doc) {
        ManifestRecord r;
        try {
            r.id = j.at("id").get<std::string>();
            r.category = j.at("category").get<int>();
            r.split = j.at("split").get<std::string>();
            r.cloud_path = j.at("cloud_path").get<std::string>();
            r.image_path = j.at("image_path").get<std::string>();
            r.azimuth = j.at("azimuth").get<double>();
            r.elevation = j.at("elevation").get<double>();
        } catch (const json::exception& e) {
            throw DataError("bad manifest record in " + manifest_path + ": " + e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

ShapeSpec load_shape_spec(const std::string& manifest_path, const std::string& sample_id) {
    const std::string shapes_path =
        (fs::path(manifest_dir(manifest_path)) / "shapes.json").string();
    json doc;
    try {
        doc = json::parse(read_text_file(shapes_path));
    } catch (const json::exception& e) {
        throw DataError("bad shapes json " + shapes_path + ": " + e.what());
    }
    if (!doc.contains(sample_id)) throw DataError("no shape spec for sample " + sample_id);
    const auto& j = doc[sample_id];
    ShapeSpec spec;
    spec.family = shape_family_from_name(j.at("family").get<std::string>());
    spec.params = j.at("params").get<std::vector<double>>();
    spec.category_id = j.at("category").get<int>();
    spec.validate();
    return spec;
}

std::vector<DatasetSample> load_samples(const std::string& manifest_path,
                                        const std::string& split) {
    const auto manifest = load_manifest(manifest_path);
    const fs::path dir = manifest_dir(manifest_path);
    std::vector<DatasetSample> out;
    for (const auto& r : manifest) {
        if (!split.empty() && r.split != split) continue;
        DatasetSample s;
        s.id = r.id;
        s.category = r.category;
        s.azimuth = r.azimuth;
        s.elevation = r.elevation;
        s.cloud = read_cloud((dir / r.cloud_path).string());
        s.image = read_image((dir / r.image_path).string());
        out.push_back(std::move(s));
    }
    if (out.empty()) throw DataError("no samples for split '" + split + "' in " + manifest_path);
    return out;
}

std::string manifest_dir(const std::string& manifest_path) {
    const fs::path p(manifest_path);
    auto d = p.parent_path();
    return d.empty() ? std::string(".") : d.string();
}

std::string resolve_manifest_path(const std::string& data_path) {
    const fs::path p(data_path);
    if (fs::is_directory(p)) {
        const fs::path m = p / "manifest.json";
        if (!fs::exists(m)) throw DataError("no manifest.json in " + data_path);
        return m.string();
    }
    if (!fs::exists(p)) throw DataError("no such dataset: " + data_path);
    return data_path;
}

}  // namespace pcgen
