#include <doctest.h>

#include "pcgen/flow.hpp"
#include "pcgen/gradcheck.hpp"
#include "test_util.hpp"

using namespace pcgen;
using namespace pcgen::testutil;

namespace {

template <class T>
ParamStore<T> flow_store(const ModelConfig& cfg, std::uint64_t seed, double perturb = 0.0) {
    ParamStore<T> store;
    Rng rng(seed);
    init_flow(store, cfg, rng);
    if (perturb > 0.0) {
        Rng prng(seed ^ 0xff);
        perturb_params(store, perturb, prng);
    }
    return store;
}

std::vector<double> random_latent(i64 d, Rng& rng) {
    std::vector<double> z(static_cast<size_t>(d));
    for (auto& v : z) v = rng.normal();
    return z;
}

}  // namespace

TEST_CASE("zero-initialized conditioner gives the identity map") {
    const ModelConfig cfg = tiny_model(4, 6);
    auto store = flow_store<double>(cfg, 3);
    Rng rng(5);
    const auto z = random_latent(cfg.latent_dim, rng);
    for (int iter = 0; iter < 10; ++iter) {
        const Vec3 y{rng.normal(), rng.normal(), rng.normal()};
        auto [fwd, ld] = coupling_forward(store, cfg, 0, y, z);
        CHECK(fwd.x == y.x);
        CHECK(fwd.y == y.y);
        CHECK(fwd.z == y.z);
        CHECK(ld == 0.0);

        auto [full, ld_full] = flow_forward(store, cfg, y, z);
        CHECK(full.x == y.x);
        CHECK(ld_full == 0.0);

        auto [inv, ld_inv] = flow_inverse(store, cfg, y, z);
        CHECK(inv.x == y.x);
        CHECK(ld_inv == 0.0);
    }
}

TEST_CASE("coupling roundtrip to 1e-10 in double") {
    const ModelConfig cfg = tiny_model(4, 6);
    auto store = flow_store<double>(cfg, 7, 0.3);
    Rng rng(9);
    const auto z = random_latent(cfg.latent_dim, rng);
    for (i64 layer = 0; layer < cfg.flow_layers; ++layer) {
        for (int iter = 0; iter < 20; ++iter) {
            const Vec3 y{rng.normal(), rng.normal(), rng.normal()};
            auto [mid, ld_f] = coupling_forward(store, cfg, layer, y, z);
            auto [back, ld_i] = coupling_inverse(store, cfg, layer, mid, z);
            CHECK(std::fabs(back.x - y.x) < 1e-10);
            CHECK(std::fabs(back.y - y.y) < 1e-10);
            CHECK(std::fabs(back.z - y.z) < 1e-10);
            CHECK(std::fabs(ld_f + ld_i) < 1e-12);
        }
    }
}

TEST_CASE("forced log-scale ln 2 doubles the active coordinate") {
    const ModelConfig cfg = tiny_model(4, 6);
    auto store = flow_store<double>(cfg, 11);
    // Layer 3 has passive {y, z} and the single active coordinate x.
    const i64 layer = 3;
    const double ln2 = std::log(2.0);
    const double s_raw = cfg.scale_clamp * std::atanh(ln2 / cfg.scale_clamp);
    const double shift = 0.25;
    store.at("theta.l03.w3").fill(0.0);
    auto& b3 = store.at("theta.l03.b3");
    REQUIRE(b3.numel() == 2);
    b3.v = {s_raw, shift};

    Rng rng(13);
    const auto z = random_latent(cfg.latent_dim, rng);
    const Vec3 y{0.8, -0.4, 0.6};
    auto [fwd, ld] = coupling_forward(store, cfg, layer, y, z);
    CHECK(fwd.x == doctest::Approx(y.x * 2.0 + shift).epsilon(1e-12));
    CHECK(fwd.y == y.y);
    CHECK(fwd.z == y.z);
    CHECK(ld == doctest::Approx(ln2).epsilon(1e-12));

    auto [back, ld_inv] = coupling_inverse(store, cfg, layer, fwd, z);
    CHECK(back.x == doctest::Approx(y.x).epsilon(1e-12));
    CHECK(ld_inv == doctest::Approx(-ln2).epsilon(1e-12));
}

TEST_CASE("full-stack bijectivity at F=16 and F=63") {
    for (i64 layers : {16, 63}) {
        ModelConfig cfg = tiny_model(6, layers);
        auto store = flow_store<double>(cfg, 17, 0.1);
        Rng rng(19);
        for (int zi = 0; zi < 4; ++zi) {
            const auto z = random_latent(cfg.latent_dim, rng);
            for (int iter = 0; iter < 50; ++iter) {
                const Vec3 u{rng.normal(), rng.normal(), rng.normal()};
                auto [x, ld_f] = flow_forward(store, cfg, u, z);
                auto [back, ld_i] = flow_inverse(store, cfg, x, z);
                CHECK(std::fabs(back.x - u.x) < 1e-6);
                CHECK(std::fabs(back.y - u.y) < 1e-6);
                CHECK(std::fabs(back.z - u.z) < 1e-6);
                CHECK(std::fabs(ld_f + ld_i) < 1e-9);
            }
        }
    }
}

TEST_CASE("single-precision roundtrip within 1e-4 at F=63") {
    ModelConfig cfg = tiny_model(6, 63);
    // Milder perturbation than the double-precision invariant: float error
    // compounds with the per-layer scale factors across 63 layers.
    auto store = flow_store<float>(cfg, 23, 0.05);
    Rng rng(29);
    const auto z = random_latent(cfg.latent_dim, rng);
    for (int iter = 0; iter < 100; ++iter) {
        const Vec3 u{rng.normal(), rng.normal(), rng.normal()};
        auto [x, ld_f] = flow_forward(store, cfg, u, z);
        auto [back, ld_i] = flow_inverse(store, cfg, x, z);
        CHECK(std::fabs(back.x - u.x) < 1e-4);
        CHECK(std::fabs(back.y - u.y) < 1e-4);
        CHECK(std::fabs(back.z - u.z) < 1e-4);
    }
}

TEST_CASE("accumulated log-det matches the numerical jacobian") {
    const ModelConfig cfg = tiny_model(4, 8);
    auto store = flow_store<double>(cfg, 31, 0.2);
    Rng rng(37);
    const double h = 1e-5;
    for (int iter = 0; iter < 50; ++iter) {
        const auto z = random_latent(cfg.latent_dim, rng);
        const Vec3 u{rng.normal(), rng.normal(), rng.normal()};
        auto [x, ld] = flow_forward(store, cfg, u, z);

        double J[3][3];
        for (int j = 0; j < 3; ++j) {
            Vec3 up = u, dn = u;
            (j == 0 ? up.x : j == 1 ? up.y : up.z) += h;
            (j == 0 ? dn.x : j == 1 ? dn.y : dn.z) -= h;
            const Vec3 xu = flow_forward(store, cfg, up, z).first;
            const Vec3 xd = flow_forward(store, cfg, dn, z).first;
            J[0][j] = (xu.x - xd.x) / (2 * h);
            J[1][j] = (xu.y - xd.y) / (2 * h);
            J[2][j] = (xu.z - xd.z) / (2 * h);
        }
        const double det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                           J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                           J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
        const double num_ld = std::log(std::fabs(det));
        CHECK(std::fabs(ld - num_ld) / std::max(1e-8, std::fabs(ld) + std::fabs(num_ld)) < 1e-4);
    }
}

TEST_CASE("log_prob of the identity model is the standard normal log-pdf") {
    const ModelConfig cfg = tiny_model(4, 6);
    auto store = flow_store<double>(cfg, 41);
    Rng rng(43);
    const auto z = random_latent(cfg.latent_dim, rng);
    static constexpr double kLog2Pi = 1.8378770664093454835606594728112;

    CHECK(log_prob_point(store, cfg, {0, 0, 0}, z) == doctest::Approx(-1.5 * kLog2Pi));
    CHECK(log_prob_point(store, cfg, {0, 0, 0}, z) == doctest::Approx(-2.756815).epsilon(1e-6));
    for (int iter = 0; iter < 10; ++iter) {
        const Vec3 x{rng.normal(), rng.normal(), rng.normal()};
        const double expect = -0.5 * (x.x * x.x + x.y * x.y + x.z * x.z) - 1.5 * kLog2Pi;
        CHECK(log_prob_point(store, cfg, x, z) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("density integrates to one under importance sampling") {
    const ModelConfig cfg = tiny_model(4, 4);
    auto store = flow_store<double>(cfg, 47, 0.1);
    Rng rng(53);
    const auto z = random_latent(cfg.latent_dim, rng);

    // Proposal N(0, sigma^2 I) with heavier tails than the near-identity flow.
    const double sigma = 2.0;
    static constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    const i64 m = 100000;

    // Batch the evaluation for speed.
    Tensor<double> xs({m, 3});
    for (auto& v : xs.v) v = rng.normal() * sigma;
    Tape<double> tape(false);
    auto lp = log_prob_rows(tape, store, cfg, tape.constant(xs),
                            tape.constant(latent_to_tensor<double>(z)), m, false);
    const auto& lpv = tape.value(lp).v;

    double total = 0.0;
    for (i64 i = 0; i < m; ++i) {
        const double x0 = xs.v[i * 3], x1 = xs.v[i * 3 + 1], x2 = xs.v[i * 3 + 2];
        const double logq = -0.5 * (x0 * x0 + x1 * x1 + x2 * x2) / (sigma * sigma) -
                            1.5 * (kLog2Pi + 2.0 * std::log(sigma));
        total += std::exp(lpv[i] - logq);
    }
    const double integral = total / static_cast<double>(m);
    CHECK(integral > 0.95);
    CHECK(integral < 1.05);
}

TEST_CASE("sample_cloud shapes, moments, determinism") {
    const ModelConfig cfg = tiny_model(4, 6);
    auto store = flow_store<double>(cfg, 59);
    Rng rng(61);
    const auto z = random_latent(cfg.latent_dim, rng);

    Rng s1(7);
    CHECK(sample_cloud(store, cfg, z, 1, s1).size() == 1);
    Rng s0(7);
    CHECK_THROWS_AS(sample_cloud(store, cfg, z, 0, s0), NumericError);

    // Identity model pushes the base density through unchanged.
    Rng s2(11);
    PointCloud big = sample_cloud(store, cfg, z, 100000, s2);
    Vec3 mean{0, 0, 0};
    for (const auto& p : big.points) mean = mean + p;
    mean = mean / static_cast<double>(big.size());
    CHECK(std::fabs(mean.x) < 0.02);
    CHECK(std::fabs(mean.y) < 0.02);
    CHECK(std::fabs(mean.z) < 0.02);
    double var = 0;
    for (const auto& p : big.points) var += sq_dist(p, mean);
    var /= 3.0 * static_cast<double>(big.size());
    CHECK(std::fabs(var - 1.0) < 0.05);

    for (i64 n : {1024, 2500, 4096}) {
        Rng sn(n);
        CHECK(sample_cloud(store, cfg, z, n, sn).size() == n);
    }

    Rng d1(99), d2(99);
    const PointCloud c1 = sample_cloud(store, cfg, z, 64, d1);
    const PointCloud c2 = sample_cloud(store, cfg, z, 64, d2);
    for (i64 i = 0; i < 64; ++i) CHECK(c1[i].x == c2[i].x);
}

TEST_CASE("points within a sampled cloud are exchangeable") {
    const ModelConfig cfg = tiny_model(4, 4);
    auto store = flow_store<double>(cfg, 67, 0.1);
    Rng rng(71);
    const auto z = random_latent(cfg.latent_dim, rng);
    // The same map applied to i.i.d. draws: per-index statistics agree.
    const int runs = 400, n = 16;
    std::vector<double> mean_by_index(n, 0.0);
    for (int r = 0; r < runs; ++r) {
        Rng srng(derive_seed(1000, {static_cast<std::uint64_t>(r)}));
        const PointCloud c = sample_cloud(store, cfg, z, n, srng);
        for (int i = 0; i < n; ++i) mean_by_index[static_cast<size_t>(i)] += c[i].x;
    }
    for (auto& m : mean_by_index) m /= runs;
    const double first = mean_by_index[0];
    for (double m : mean_by_index) CHECK(std::fabs(m - first) < 0.25);
}

TEST_CASE("log-likelihood gradients reach conditioner parameters and z") {
    const ModelConfig cfg = tiny_model(3, 4);
    ParamStore<double> store = flow_store<double>(cfg, 73, 0.15);
    Rng rng(79);
    // Treat z as a parameter so the same check covers conditioning gradients.
    store.create("z", random_normal<double>({1, cfg.latent_dim}, rng));
    PointCloud cloud = random_cloud(6, rng);
    const Tensor<double> rows = clouds_to_rows<double>({&cloud});
    auto build = [&](Tape<double>& t, ParamStore<double>& s) {
        auto lp = log_prob_rows(t, s, cfg, t.constant(rows), t.param(s, "z"), cloud.size(), true);
        return t.mean_all(lp);
    };
    CHECK(grad_check<double>(store, build, 1e-4) < 1e-5);
}

TEST_CASE("mask schedule activates every coordinate within six layers") {
    for (i64 start = 0; start < 6; ++start) {
        bool active_seen[3] = {false, false, false};
        for (i64 l = start; l < start + 6; ++l)
            for (i64 c : coupling_mask(l).active) active_seen[c] = true;
        CHECK(active_seen[0]);
        CHECK(active_seen[1]);
        CHECK(active_seen[2]);
    }
    for (i64 l = 0; l < 12; ++l) {
        const CouplingMask m = coupling_mask(l);
        CHECK(m.passive.size() >= 1);
        CHECK(m.active.size() >= 1);
        CHECK(m.passive.size() + m.active.size() == 3);
    }
}
