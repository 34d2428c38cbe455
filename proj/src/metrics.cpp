#include "pcgen/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "pcgen/kdtree.hpp"

namespace pcgen {

namespace {

// Pairwise (tree) summation: order-independent aggregation for parallel use.
double pairwise_sum(std::vector<double>& xs, size_t lo, size_t hi) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (size_t i = lo; i < hi; ++i) s += xs[i];
        return s;
    }
    const size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(xs, lo, mid) + pairwise_sum(xs, mid, hi);
}

double pairwise_mean(std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return pairwise_sum(xs, 0, xs.size()) / static_cast<double>(xs.size());
}

std::vector<double> euclidean_cost_matrix(const PointCloud& a, const PointCloud& b) {
    const i64 n = a.size();
    std::vector<double> cost(static_cast<size_t>(n) * n);
    for (i64 i = 0; i < n; ++i)
        for (i64 j = 0; j < n; ++j)
            cost[static_cast<size_t>(i) * n + j] = std::sqrt(sq_dist(a[i], b[j]));
    return cost;
}

// Shortest-augmenting-path assignment with potentials (Jonker-Volgenant
// flavor), exact on the dense cost matrix.
std::vector<int> solve_assignment(const std::vector<double>& cost, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[static_cast<size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(static_cast<size_t>(n));
    for (int j = 1; j <= n; ++j) row_to_col[static_cast<size_t>(p[j] - 1)] = j - 1;
    return row_to_col;
}

PointCloud subsample(const PointCloud& cloud, i64 n, std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0x5b5, static_cast<std::uint64_t>(cloud.size())}));
    std::vector<i64> idx(static_cast<size_t>(cloud.size()));
    std::iota(idx.begin(), idx.end(), 0);
    for (i64 i = cloud.size() - 1; i > 0; --i)
        std::swap(idx[static_cast<size_t>(i)],
                  idx[static_cast<size_t>(rng.uniform_index(static_cast<std::uint64_t>(i + 1)))]);
    PointCloud out;
    out.points.reserve(static_cast<size_t>(n));
    for (i64 i = 0; i < n; ++i) out.points.push_back(cloud[idx[static_cast<size_t>(i)]]);
    return out;
}

void check_nonempty(const PointCloud& a, const PointCloud& b, const char* op) {
    if (a.empty() || b.empty()) throw NumericError(std::string(op) + ": empty cloud");
}

}  // namespace

double chamfer(const PointCloud& a, const PointCloud& b) {
    check_nonempty(a, b, "chamfer");
    const KdTree3 tb(b), ta(a);
    double sa = 0.0, sb = 0.0;
    for (const auto& p : a.points) sa += tb.nearest_sq(p);
    for (const auto& q : b.points) sb += ta.nearest_sq(q);
    return sa / static_cast<double>(a.size()) + sb / static_cast<double>(b.size());
}

std::pair<double, AssignmentPlan> emd_exact(const PointCloud& a, const PointCloud& b, i64 limit) {
    check_nonempty(a, b, "emd_exact");
    if (a.size() != b.size())
        throw NumericError("emd_exact: size mismatch " + std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()));
    if (a.size() > limit)
        throw NumericError("emd_exact: " + std::to_string(a.size()) + " points exceeds limit " +
                           std::to_string(limit) + "; use emd_approx");
    const int n = static_cast<int>(a.size());
    const auto cost = euclidean_cost_matrix(a, b);
    AssignmentPlan plan;
    plan.permutation = solve_assignment(cost, n);
    for (int i = 0; i < n; ++i)
        plan.cost += cost[static_cast<size_t>(i) * n + plan.permutation[static_cast<size_t>(i)]];
    return {plan.cost / n, plan};
}

double emd_approx(const PointCloud& a, const PointCloud& b, const AuctionParams& params) {
    check_nonempty(a, b, "emd_approx");
    if (a.size() != b.size())
        throw NumericError("emd_approx: size mismatch " + std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()));
    const i64 n = a.size();
    const auto cost = euclidean_cost_matrix(a, b);

    double max_cost = 0.0;
    for (double c : cost) max_cost = std::max(max_cost, c);
    double eps = params.eps_start > 0.0 ? params.eps_start : std::max(max_cost / 8.0, params.eps_final);

    std::vector<double> price(static_cast<size_t>(n), 0.0);
    std::vector<i64> owner(static_cast<size_t>(n), -1);   // object -> person
    std::vector<i64> object(static_cast<size_t>(n), -1);  // person -> object
    i64 bids = 0;

    for (;;) {
        std::fill(owner.begin(), owner.end(), -1);
        std::fill(object.begin(), object.end(), -1);
        std::vector<i64> queue(static_cast<size_t>(n));
        std::iota(queue.begin(), queue.end(), 0);
        size_t head = 0;
        // Queue semantics keep the bidding order deterministic.
        while (head < queue.size()) {
            const i64 person = queue[head++];
            if (object[static_cast<size_t>(person)] >= 0) continue;
            const double* crow = cost.data() + static_cast<size_t>(person) * n;
            double best = -std::numeric_limits<double>::infinity();
            double second = best;
            i64 best_j = 0;
            for (i64 j = 0; j < n; ++j) {
                const double value = -crow[j] - price[static_cast<size_t>(j)];
                if (value > best) {
                    second = best;
                    best = value;
                    best_j = j;
                } else if (value > second) {
                    second = value;
                }
            }
            if (!std::isfinite(second)) second = best;  // n == 1
            price[static_cast<size_t>(best_j)] += best - second + eps;
            const i64 prev = owner[static_cast<size_t>(best_j)];
            if (prev >= 0) {
                object[static_cast<size_t>(prev)] = -1;
                queue.push_back(prev);
            }
            owner[static_cast<size_t>(best_j)] = person;
            object[static_cast<size_t>(person)] = best_j;
            if (++bids > params.max_bids)
                throw NumericError("emd_approx: bid cap exceeded at eps=" + std::to_string(eps));
        }
        if (eps <= params.eps_final) break;
        eps = std::max(eps / params.eps_scale, params.eps_final);
    }

    double total = 0.0;
    for (i64 i = 0; i < n; ++i)
        total += cost[static_cast<size_t>(i) * n + static_cast<size_t>(object[static_cast<size_t>(i)])];
    return total / static_cast<double>(n);
}

F1Result f1_score(const PointCloud& pred, const PointCloud& gt, double tau) {
    check_nonempty(pred, gt, "f1_score");
    if (!(tau > 0.0)) throw NumericError("f1_score: tau must be positive");
    const KdTree3 tg(gt), tp(pred);
    i64 hit_p = 0, hit_g = 0;
    for (const auto& p : pred.points)
        if (tg.nearest_sq(p) <= tau) ++hit_p;
    for (const auto& q : gt.points)
        if (tp.nearest_sq(q) <= tau) ++hit_g;
    F1Result r;
    r.precision = static_cast<double>(hit_p) / static_cast<double>(pred.size());
    r.recall = static_cast<double>(hit_g) / static_cast<double>(gt.size());
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
}

double emd_dispatch(const PointCloud& a, const PointCloud& b, std::uint64_t subsample_seed) {
    const PointCloud* pa = &a;
    const PointCloud* pb = &b;
    PointCloud tmp;
    if (a.size() != b.size()) {
        if (a.size() > b.size()) {
            tmp = subsample(a, b.size(), subsample_seed);
            pa = &tmp;
        } else {
            tmp = subsample(b, a.size(), subsample_seed);
            pb = &tmp;
        }
    }
    if (pa->size() <= 512) return emd_exact(*pa, *pb).first;
    return emd_approx(*pa, *pb);
}

MetricReport evaluate_pairs(const std::vector<PointCloud>& preds,
                            const std::vector<PointCloud>& gts, double tau) {
    if (preds.size() != gts.size())
        throw NumericError("evaluate_pairs: list length mismatch");
    if (preds.empty()) throw NumericError("evaluate_pairs: empty input");
    std::vector<double> cds, emds, f1s;
    for (size_t i = 0; i < preds.size(); ++i) {
        try {
            const auto [np, tp] = normalize_to_box(preds[i]);
            const auto [ng, tg] = normalize_to_box(gts[i]);
            cds.push_back(chamfer(np, ng));
            emds.push_back(emd_dispatch(np, ng, static_cast<std::uint64_t>(i)));
            f1s.push_back(f1_score(np, ng, tau).f1);
        } catch (const std::exception& e) {
            throw NumericError("pair " + std::to_string(i) + ": " + e.what());
        }
    }
    MetricReport rep;
    rep.cd = pairwise_mean(cds);
    rep.emd = pairwise_mean(emds);
    rep.f1 = pairwise_mean(f1s);
    return rep;
}

std::string MetricReport::to_json() const {
    nlohmann::ordered_json j = {{"cd_raw", cd},       {"emd_raw", emd},    {"f1_raw", f1},
                                {"cd_e3", cd_e3()},   {"emd_e2", emd_e2()}, {"f1_pct", f1_pct()}};
    return j.dump();
}

std::string metric_table(const std::vector<std::string>& labels,
                         const std::vector<MetricReport>& rows) {
    size_t w = 8;
    for (const auto& l : labels) w = std::max(w, l.size());
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-*s  %10s %10s %10s\n", static_cast<int>(w), "", "CD(x1e3)",
                  "EMD(x1e2)", "F1(%)");
    out += buf;
    for (size_t i = 0; i < rows.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%-*s  %10.3f %10.3f %10.2f\n", static_cast<int>(w),
                      labels[i].c_str(), rows[i].cd_e3(), rows[i].emd_e2(), rows[i].f1_pct());
        out += buf;
    }
    return out;
}

}  // namespace pcgen
