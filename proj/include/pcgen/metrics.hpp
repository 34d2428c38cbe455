#pragma once

#include <string>
#include <vector>

#include "pcgen/geometry.hpp"

namespace pcgen {

// Evaluation metrics between point clouds, with the reporting scales used
// throughout: CD x 10^3, EMD x 10^2, F1 as a percentage.

// Symmetric sum of the two directed means of squared nearest-neighbor
// distances. Uses the kd-tree; matches an exhaustive scan exactly.
double chamfer(const PointCloud& a, const PointCloud& b);

// Optimal one-to-one matching between equal-size clouds.
struct AssignmentPlan {
    std::vector<int> permutation;  // index into b for each point of a
    double cost = 0.0;             // total Euclidean cost under the matching
};

// Exact solver (Jonker-Volgenant style shortest augmenting paths) on the
// dense cost matrix; returns the mean per-point transport distance.
// Refuses clouds above `limit` points.
std::pair<double, AssignmentPlan> emd_exact(const PointCloud& a, const PointCloud& b,
                                            i64 limit = 512);

struct AuctionParams {
    double eps_start = -1.0;   // <= 0: start at max-cost / 8
    double eps_final = 1e-4;   // final slack; mean cost is within eps_final of optimal
    double eps_scale = 4.0;    // divisor between scaling phases
    i64 max_bids = 50'000'000; // total bid cap across phases
};

// Epsilon-scaling auction assignment. Feasible, hence >= emd_exact, and at
// most eps_final above it on the mean cost.
double emd_approx(const PointCloud& a, const PointCloud& b, const AuctionParams& params = {});

struct F1Result {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// tau thresholds the squared nearest-neighbor distance.
F1Result f1_score(const PointCloud& pred, const PointCloud& gt, double tau);

struct MetricReport {
    double cd = 0.0;   // raw
    double emd = 0.0;  // raw
    double f1 = 0.0;   // in [0, 1]

    double cd_e3() const { return cd * 1e3; }
    double emd_e2() const { return emd * 1e2; }
    double f1_pct() const { return f1 * 1e2; }

    std::string to_json() const;
};

// Formats reports as an aligned text table; one row per label.
std::string metric_table(const std::vector<std::string>& labels,
                         const std::vector<MetricReport>& rows);

// Per-pair CD/EMD/F1 averaged over the set. Both clouds of each pair are
// normalized to [-1,1]^3 first. EMD uses the exact solver up to its limit
// and the auction above it; unequal sizes are reconciled by a deterministic
// uniform subsample of the larger cloud.
MetricReport evaluate_pairs(const std::vector<PointCloud>& preds,
                            const std::vector<PointCloud>& gts, double tau);

// EMD between arbitrary-size clouds: subsamples the larger side to match
// (seeded, deterministic), then dispatches on size.
double emd_dispatch(const PointCloud& a, const PointCloud& b, std::uint64_t subsample_seed = 0);

}  // namespace pcgen
