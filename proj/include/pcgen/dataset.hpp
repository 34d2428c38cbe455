#pragma once

#include <string>
#include <vector>

#include "pcgen/geometry.hpp"
#include "pcgen/shapes.hpp"

namespace pcgen {

// One image/cloud pair: the silhouette rendered from the same shape and
// viewpoint as the normalized ground-truth cloud.
struct DatasetSample {
    std::string id;
    ImageTensor image;
    PointCloud cloud;
    int category = 0;
    double azimuth = 0.0;
    double elevation = 0.0;
};

struct ManifestRecord {
    std::string id;
    int category = 0;
    std::string split;  // "train" or "test"
    std::string cloud_path;
    std::string image_path;
    double azimuth = 0.0;
    double elevation = 0.0;
};

struct DatasetConfig {
    int categories = 3;  // families used, in order: ellipsoid, box, cylinder_composite, cross
    int shapes_per_category = 200;
    int views_per_shape = 1;
    double train_fraction = 0.8;
    int cloud_points = 2500;  // stored ground-truth resolution; training subsamples
    int image_resolution = 32;
    std::uint64_t seed = 1;
};

// Writes clouds/, images/, manifest.json and shapes.json under out_dir.
// Deterministic in the seed: a re-run reproduces every byte. Returns the
// manifest, ordered by sample id.
std::vector<ManifestRecord> build_dataset(const DatasetConfig& config, const std::string& out_dir);

std::vector<ManifestRecord> load_manifest(const std::string& manifest_path);

// Shape specs recorded next to the manifest (shapes.json), keyed by sample id.
ShapeSpec load_shape_spec(const std::string& manifest_path, const std::string& sample_id);

// Loads image+cloud data for every record with the given split ("" for all).
// Paths in the manifest are relative to its directory.
std::vector<DatasetSample> load_samples(const std::string& manifest_path, const std::string& split);

std::string manifest_dir(const std::string& manifest_path);

// Accepts either the dataset directory or the manifest.json path itself.
std::string resolve_manifest_path(const std::string& data_path);

}  // namespace pcgen
