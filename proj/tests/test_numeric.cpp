#include <doctest.h>

#include <fstream>

#include "pcgen/checkpoint.hpp"
#include "pcgen/gradcheck.hpp"
#include "pcgen/tape.hpp"
#include "test_util.hpp"

using namespace pcgen;

namespace {

// Naive reference product for the kernel oracle.
template <class T>
Tensor<T> naive_matmul(const Tensor<T>& a, const Tensor<T>& b) {
    const i64 m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor<T> c({m, n});
    for (i64 i = 0; i < m; ++i)
        for (i64 p = 0; p < k; ++p)
            for (i64 j = 0; j < n; ++j) c.v[i * n + j] += a.v[i * k + p] * b.v[p * n + j];
    return c;
}

}  // namespace

TEST_CASE("gemm kernels match the naive oracle") {
    Rng rng(11);
    for (int iter = 0; iter < 20; ++iter) {
        const i64 m = 1 + static_cast<i64>(rng.uniform_index(40));
        const i64 k = 1 + static_cast<i64>(rng.uniform_index(40));
        const i64 n = 1 + static_cast<i64>(rng.uniform_index(70));
        auto A = random_normal<double>({m, k}, rng);
        auto B = random_normal<double>({k, n}, rng);
        auto ref = naive_matmul(A, B);

        Tensor<double> C({m, n});
        gemm_nn(A.data(), B.data(), C.data(), m, k, n);
        for (i64 i = 0; i < C.numel(); ++i)
            CHECK(C.v[i] == doctest::Approx(ref.v[i]).epsilon(1e-12));

        // nt: A(m x k) * Bt^T with Bt of shape (n x k).
        auto Bt = random_normal<double>({n, k}, rng);
        Tensor<double> Cnt({m, n});
        gemm_nt(A.data(), Bt.data(), Cnt.data(), m, k, n);
        Tensor<double> BtT({k, n});
        for (i64 p = 0; p < n; ++p)
            for (i64 j = 0; j < k; ++j) BtT.v[j * n + p] = Bt.v[p * k + j];
        auto ref2 = naive_matmul(A, BtT);
        for (i64 i = 0; i < Cnt.numel(); ++i)
            CHECK(Cnt.v[i] == doctest::Approx(ref2.v[i]).epsilon(1e-12));

        // tn: A^T * B2 with B2 of shape (m x n).
        auto B2 = random_normal<double>({m, n}, rng);
        Tensor<double> Ctn({k, n});
        gemm_tn(A.data(), B2.data(), Ctn.data(), m, k, n);
        Tensor<double> At({k, m});
        for (i64 i = 0; i < m; ++i)
            for (i64 p = 0; p < k; ++p) At.v[p * m + i] = A.v[i * k + p];
        auto ref3 = naive_matmul(At, B2);
        for (i64 i = 0; i < Ctn.numel(); ++i)
            CHECK(Ctn.v[i] == doctest::Approx(ref3.v[i]).epsilon(1e-12));
    }
}

TEST_CASE("identity graph passes the upstream seed through") {
    Tape<double> tape(true);
    auto x = tape.input(Tensor<double>({2, 3}, {1, 2, 3, 4, 5, 6}), true);
    auto loss = tape.sum_all(x);
    tape.backward(loss);
    for (double g : tape.grad(x).v) CHECK(g == 1.0);
}

TEST_CASE("sum of squares value and gradient") {
    Tape<double> tape(true);
    auto x = tape.input(Tensor<double>({1, 3}, {1, 2, 3}), true);
    auto loss = tape.sum_all(tape.mul(x, x));
    CHECK(tape.scalar(loss) == doctest::Approx(14.0));
    tape.backward(loss);
    CHECK(tape.grad(x).v == std::vector<double>{2, 4, 6});
}

TEST_CASE("three-layer mlp against central differences") {
    Rng rng(5);
    ParamStore<double> store;
    store.create("w1", xavier_uniform<double>({4, 8}, 4, 8, rng));
    store.create("b1", random_normal<double>({8}, rng, 0.1));
    store.create("w2", xavier_uniform<double>({8, 8}, 8, 8, rng));
    store.create("b2", random_normal<double>({8}, rng, 0.1));
    store.create("w3", xavier_uniform<double>({8, 2}, 8, 2, rng));
    store.create("b3", random_normal<double>({2}, rng, 0.1));
    auto x = random_normal<double>({5, 4}, rng);
    auto build = [&](Tape<double>& t, ParamStore<double>& s) {
        auto h = t.tanh_(t.affine(t.constant(x), t.param(s, "w1"), t.param(s, "b1")));
        h = t.relu(t.affine(h, t.param(s, "w2"), t.param(s, "b2")));
        h = t.affine(h, t.param(s, "w3"), t.param(s, "b3"));
        return t.mean_all(t.mul(h, h));
    };
    CHECK(grad_check<double>(store, build, 1e-4) < 1e-5);
}

TEST_CASE("grad_check examples: linear, tanh mlp, set-max") {
    Rng rng(17);
    SUBCASE("linear layer") {
        ParamStore<double> store;
        store.create("w", xavier_uniform<double>({6, 3}, 6, 3, rng));
        store.create("b", random_normal<double>({3}, rng, 0.2));
        auto x = random_normal<double>({7, 6}, rng);
        auto build = [&](Tape<double>& t, ParamStore<double>& s) {
            return t.mean_all(t.affine(t.constant(x), t.param(s, "w"), t.param(s, "b")));
        };
        CHECK(grad_check<double>(store, build, 1e-4) < 1e-6);
    }
    SUBCASE("tanh mlp") {
        ParamStore<double> store;
        store.create("w1", xavier_uniform<double>({3, 10}, 3, 10, rng));
        store.create("w2", xavier_uniform<double>({10, 1}, 10, 1, rng));
        auto x = random_normal<double>({9, 3}, rng);
        auto build = [&](Tape<double>& t, ParamStore<double>& s) {
            auto h = t.tanh_(t.matmul(t.constant(x), t.param(s, "w1")));
            return t.sum_all(t.tanh_(t.matmul(h, t.param(s, "w2"))));
        };
        CHECK(grad_check<double>(store, build, 1e-4) < 1e-5);
    }
    SUBCASE("graph containing set-max, ties nudged away") {
        ParamStore<double> store;
        Tensor<double> x({6, 2});
        for (i64 i = 0; i < x.numel(); ++i)
            x.v[i] = 0.13 * static_cast<double>(i + 1) * (i % 2 ? 1 : -1);
        store.create("w", xavier_uniform<double>({2, 4}, 2, 4, rng));
        auto build = [&](Tape<double>& t, ParamStore<double>& s) {
            auto h = t.matmul(t.constant(x), t.param(s, "w"));
            auto pooled = t.segment_max(h, 3);  // two segments of three rows
            return t.mean_all(t.mul(pooled, pooled));
        };
        CHECK(grad_check<double>(store, build, 1e-4) < 1e-5);
    }
}

TEST_CASE("every primitive matches finite differences on random values") {
    Rng rng(23);
    auto check_unary = [&](const char* name,
                           std::function<Tape<double>::Var(Tape<double>&, Tape<double>::Var)> op) {
        ParamStore<double> store;
        Tensor<double> init = random_normal<double>({5, 6}, rng);
        for (auto& v : init.v) v += (v >= 0 ? 0.11 : -0.11);  // keep clear of relu kinks
        store.create("x", init);
        auto build = [&](Tape<double>& t, ParamStore<double>& s) {
            auto y = op(t, t.param(s, "x"));
            Rng prj(99);
            Tensor<double> proj = random_normal<double>(t.value(y).shape, prj);
            return t.sum_all(t.mul(y, t.constant(proj)));
        };
        INFO(name);
        CHECK(grad_check<double>(store, build, 1e-5) < 1e-5);
    };

    check_unary("relu", [](Tape<double>& t, Tape<double>::Var x) { return t.relu(x); });
    check_unary("tanh", [](Tape<double>& t, Tape<double>::Var x) { return t.tanh_(x); });
    check_unary("softplus", [](Tape<double>& t, Tape<double>::Var x) { return t.softplus(x); });
    check_unary("exp", [](Tape<double>& t, Tape<double>::Var x) { return t.exp_(x); });
    check_unary("scale", [](Tape<double>& t, Tape<double>::Var x) { return t.scale(x, 1.7); });
    check_unary("add_scalar",
                [](Tape<double>& t, Tape<double>::Var x) { return t.add_scalar(x, 0.3); });
    check_unary("row_sum", [](Tape<double>& t, Tape<double>::Var x) { return t.row_sum(x); });
    check_unary("select_cols",
                [](Tape<double>& t, Tape<double>::Var x) { return t.select_cols(x, {4, 0, 2}); });
    check_unary("rows_repeat",
                [](Tape<double>& t, Tape<double>::Var x) { return t.rows_repeat(x, 3); });
    check_unary("logpdf",
                [](Tape<double>& t, Tape<double>::Var x) { return t.std_normal_logpdf_rows(x); });

    SUBCASE("binary ops and concat/assemble") {
        ParamStore<double> store;
        store.create("a", random_normal<double>({4, 3}, rng));
        store.create("b", random_normal<double>({4, 3}, rng));
        auto build = [&](Tape<double>& t, ParamStore<double>& s) {
            auto a = t.param(s, "a"), b = t.param(s, "b");
            auto y = t.concat_cols(t.add(a, b), t.mul(t.sub(a, b), b));
            auto z = t.assemble_cols(t.select_cols(y, {0, 5}), t.select_cols(y, {1, 2, 3, 4}),
                                     {0, 5}, {1, 2, 3, 4}, 6);
            Rng prj(7);
            Tensor<double> proj = random_normal<double>({4, 6}, prj);
            return t.mean_all(t.mul(z, t.constant(proj)));
        };
        CHECK(grad_check<double>(store, build, 1e-5) < 1e-5);
    }

    SUBCASE("conv2d and global_avg_pool") {
        ParamStore<double> store;
        store.create("w", random_normal<double>({3, 2, 3, 3}, rng, 0.4));
        store.create("b", random_normal<double>({3}, rng, 0.1));
        store.create("x", random_normal<double>({2, 2, 9, 9}, rng));
        auto build = [&](Tape<double>& t, ParamStore<double>& s) {
            Conv2dSpec cs;
            cs.in_channels = 2;
            cs.out_channels = 3;
            auto y = t.global_avg_pool(
                t.conv2d(t.param(s, "x"), t.param(s, "w"), t.param(s, "b"), cs));
            Rng prj(13);
            Tensor<double> proj = random_normal<double>({2, 3}, prj);
            return t.sum_all(t.mul(y, t.constant(proj)));
        };
        CHECK(grad_check<double>(store, build, 1e-5) < 1e-5);
    }

    SUBCASE("segment_max with nudged ties") {
        ParamStore<double> store;
        Tensor<double> x({8, 3});
        for (i64 i = 0; i < x.numel(); ++i) x.v[i] = std::sin(static_cast<double>(i) * 1.7) * 2.0;
        store.create("x", x);
        auto build = [&](Tape<double>& t, ParamStore<double>& s) {
            auto pooled = t.segment_max(t.param(s, "x"), 4);
            Rng prj(21);
            Tensor<double> proj = random_normal<double>({2, 3}, prj);
            return t.sum_all(t.mul(pooled, t.constant(proj)));
        };
        CHECK(grad_check<double>(store, build, 1e-5) < 1e-5);
    }
}

TEST_CASE("set-max is permutation invariant and routes to the lowest tied index") {
    Tape<double> tape(true);
    // Column 0 ties between rows 0 and 2 of the single segment.
    auto x = tape.input(Tensor<double>({3, 2}, {5.0, 1.0, 2.0, 7.0, 5.0, 3.0}), true);
    auto pooled = tape.segment_max(x, 3);
    CHECK(tape.value(pooled).v == std::vector<double>{5.0, 7.0});
    tape.backward(tape.sum_all(pooled));
    CHECK(tape.grad(x).v == std::vector<double>{1, 0, 0, 1, 0, 0});

    Tape<double> t2(false);
    auto xp = t2.input(Tensor<double>({3, 2}, {5.0, 3.0, 5.0, 1.0, 2.0, 7.0}), false);
    CHECK(t2.value(t2.segment_max(xp, 3)).v == std::vector<double>{5.0, 7.0});
}

TEST_CASE("forward_backward is deterministic") {
    auto run = [&]() {
        Rng rng(31);
        ParamStore<float> store;
        store.create("w", xavier_uniform<float>({6, 6}, 6, 6, rng));
        Tape<float> tape(true);
        auto x = tape.constant(random_normal<float>({12, 6}, rng));
        auto w = tape.param(store, "w");
        auto loss = tape.mean_all(tape.tanh_(tape.matmul(x, w)));
        tape.backward(loss);
        return std::make_pair(tape.scalar(loss), tape.grad(w).v);
    };
    auto [l1, g1] = run();
    auto [l2, g2] = run();
    CHECK(l1 == l2);
    CHECK(g1 == g2);
}

TEST_CASE("shape mismatch errors name the primitive") {
    Tape<double> tape(false);
    auto a = tape.constant(Tensor<double>({2, 3}));
    auto b = tape.constant(Tensor<double>({3, 2}));
    CHECK_THROWS_WITH_AS(tape.add(a, b), doctest::Contains("add"), NumericError);
    auto w = tape.constant(Tensor<double>({4, 2}));
    CHECK_THROWS_WITH_AS(tape.matmul(a, w), doctest::Contains("matmul"), NumericError);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    ParamStore<double> store;
    store.create("p", Tensor<double>({3}, {1.0, -2.0, 0.5}));
    Tensor<double> zero({3});
    store.adam_step({{"p", &zero}}, AdamHyper{});
    CHECK(store.at("p").v == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("adam: first bias-corrected step has magnitude ~ lr") {
    ParamStore<double> store;
    store.create("p", Tensor<double>({1}, {0.0}));
    Tensor<double> g({1}, {1.0});
    AdamHyper h;
    h.lr = 0.1;
    store.adam_step({{"p", &g}}, h);
    CHECK(std::fabs(store.at("p").v[0] + 0.1) < 1e-6);
}

TEST_CASE("adam: identical inputs give bit-identical states") {
    auto run = [&]() {
        ParamStore<double> store;
        store.create("p", Tensor<double>({2}, {0.3, -0.7}));
        AdamHyper h;
        for (int i = 0; i < 5; ++i) {
            Tensor<double> g({2}, {0.1 * i, -0.2});
            store.adam_step({{"p", &g}}, h);
        }
        return std::make_tuple(store.at("p").v, store.entry("p").m.v, store.entry("p").v.v);
    };
    CHECK(run() == run());
}

TEST_CASE("adam: misaligned gradient shape is an error") {
    ParamStore<double> store;
    store.create("p", Tensor<double>({3}));
    Tensor<double> g({2});
    CHECK_THROWS_AS(store.adam_step({{"p", &g}}, AdamHyper{}), NumericError);
}

TEST_CASE("learning-rate schedule") {
    CHECK(lr_at(0, 2.56e-4) == doctest::Approx(2.56e-4));
    CHECK(lr_at(19, 2.56e-4) == doctest::Approx(2.56e-4));
    CHECK(lr_at(20, 2.56e-4) == doctest::Approx(6.4e-5));
    CHECK(lr_at(25, 2.56e-4) == doctest::Approx(6.4e-5));
}

TEST_CASE("checkpoint round trip with adam state") {
    using namespace pcgen::testutil;
    Rng rng(41);
    ParamStore<float> store;
    store.create("alpha.w", random_normal<float>({4, 3}, rng));
    store.create("beta.b", random_normal<float>({5}, rng));
    Tensor<float> g = random_normal<float>({4, 3}, rng);
    store.adam_step({{"alpha.w", &g}}, AdamHyper{});

    const std::string dir = fresh_dir("ckpt");
    const std::string path = dir + "/test.fgck";
    CheckpointMeta meta;
    meta.dtype = "f32";
    meta.step = 7;
    meta.epoch = 2;
    meta.seed = 99;
    save_checkpoint(path, store, meta, true);

    CheckpointMeta back;
    ParamStore<float> loaded = load_checkpoint<float>(path, &back);
    CHECK(back.step == 7);
    CHECK(back.epoch == 2);
    CHECK(back.seed == 99);
    CHECK(back.has_adam);
    CHECK(loaded.at("alpha.w").v == store.at("alpha.w").v);
    CHECK(loaded.entry("alpha.w").m.v == store.entry("alpha.w").m.v);
    CHECK(loaded.entry("alpha.w").step == 1);
    CHECK(loaded.at("beta.b").v == store.at("beta.b").v);

    CHECK_THROWS_AS(load_checkpoint<double>(path), DataError);

    const std::string stripped = dir + "/stripped.fgck";
    strip_checkpoint(path, stripped,
                     [](const std::string& n) { return n.rfind("alpha.", 0) == 0; });
    CheckpointMeta smeta;
    ParamStore<float> sub = load_checkpoint<float>(stripped, &smeta);
    CHECK(sub.size() == 1);
    CHECK_FALSE(smeta.has_adam);
    CHECK(sub.at("alpha.w").v == store.at("alpha.w").v);
}

TEST_CASE("checkpoint rejects bad magic") {
    using namespace pcgen::testutil;
    const std::string dir = fresh_dir("badckpt");
    const std::string path = dir + "/bad.fgck";
    {
        std::ofstream f(path, std::ios::binary);
        f << "NOPE1234";
    }
    CHECK_THROWS_AS(read_checkpoint_meta(path), DataError);
}
