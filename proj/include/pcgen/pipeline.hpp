#pragma once

#include <string>
#include <vector>

#include "pcgen/dataset.hpp"
#include "pcgen/metrics.hpp"

namespace pcgen {

// Single-image inference and the evaluation/benchmark harness. Only the
// image encoder and the flow decoder are loaded from checkpoints here; the
// critic is training-only and ignored even when present.

struct InferOptions {
    i64 n = 2500;
    std::string latent_mode = "mean";  // "mean" or "sample"
    std::uint64_t seed = 0;
};

PointCloud infer(const std::string& checkpoint_path, const ImageTensor& image,
                 const InferOptions& opt);

struct EvalRunSpec {
    std::string checkpoint;
    std::string data;  // dataset directory or manifest path
    i64 n = 2500;
    i64 repetitions = 1;
    double tau = 0.001;
    std::uint64_t seed = 0;
    std::string latent_mode = "mean";
    std::string split = "test";
};

struct EvalResult {
    MetricReport overall;                    // mean over repetitions
    MetricReport overall_std;                // std over repetitions (0 when r = 1)
    std::vector<int> category_ids;
    std::vector<MetricReport> per_category;  // mean over repetitions
    std::vector<MetricReport> per_repetition;
    i64 samples = 0;
    i64 repetitions = 1;

    std::string to_json() const;
    std::string to_text() const;
};

// Reconstruct every split sample from its image, normalize both clouds, and
// average CD/EMD/F1 per category and overall. Repetition r uses sub-seed
// (seed XOR r) for the cloud sampling; the latent is the encoder mean by
// default, so repetitions differ only in the point draws.
EvalResult evaluate(const EvalRunSpec& spec);

// Independent n-point resample of each ground-truth surface scored against
// the stored cloud: the ceiling any generator could reach on this data.
EvalResult oracle_baseline(const std::string& data, i64 n, double tau, std::uint64_t seed);

struct BenchResult {
    double samples_per_sec = 0.0;
    i64 samples = 0;
    double seconds = 0.0;
    i64 n = 0;
    i64 batch = 0;
    int threads = 0;
    std::string hardware;

    std::string to_json() const;
};

// Wall-clock throughput of the full inference path (image encode + n-point
// sampling); warmup batches are excluded.
BenchResult bench_speed(const std::string& checkpoint_path, const std::string& data, i64 n,
                        i64 batch, double min_seconds, i64 warmup_batches = 3);

struct AblationSpec {
    std::string data;
    std::string ckpt_with_adv;     // architecture comparison rows
    std::string ckpt_without_adv;
    std::vector<i64> n_values = {256, 1024, 4096};
    i64 table5_n = 2500;
    i64 repetitions = 5;
    double tau = 0.001;
    std::uint64_t seed = 0;
};

struct AblationResult {
    std::string text;
    std::string json;
};

// The three comparison tables: with/without the critic, variable sampling
// resolution, and repeated-sampling stability (mean +- std).
AblationResult ablation_tables(const AblationSpec& spec);

}  // namespace pcgen
