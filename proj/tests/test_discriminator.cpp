#include <doctest.h>

#include <algorithm>

#include "pcgen/discriminator.hpp"
#include "pcgen/shapes.hpp"
#include "pcgen/flow.hpp"
#include "pcgen/gradcheck.hpp"
#include "test_util.hpp"

using namespace pcgen;
using namespace pcgen::testutil;

namespace {

template <class T>
ParamStore<T> disc_store(const ModelConfig& cfg, std::uint64_t seed, double perturb = 0.0) {
    ParamStore<T> store;
    Rng rng(seed);
    init_model(store, cfg, rng);
    if (perturb > 0.0) {
        Rng prng(seed ^ 0x77);
        perturb_params(store, perturb, prng);
    }
    return store;
}

}  // namespace

TEST_CASE("critic value is permutation invariant in the cloud") {
    const ModelConfig cfg = tiny_model(4, 3);
    auto store = disc_store<double>(cfg, 3, 0.1);
    Rng rng(5);
    PointCloud cloud = random_cloud(20, rng);
    ImageTensor image = random_image(12, rng);
    const double v1 = discriminate(store, cfg, image, cloud);

    PointCloud shuffled = cloud;
    for (i64 i = shuffled.size() - 1; i > 0; --i)
        std::swap(shuffled.points[static_cast<size_t>(i)],
                  shuffled.points[rng.uniform_index(static_cast<std::uint64_t>(i + 1))]);
    CHECK(discriminate(store, cfg, image, shuffled) == v1);

    CHECK_THROWS_AS(discriminate(store, cfg, image, PointCloud{}), NumericError);
}

TEST_CASE("zero-initialized output layer scores everything zero") {
    const ModelConfig cfg = tiny_model(4, 3);
    auto store = disc_store<double>(cfg, 7);  // default init: last layer at zero
    Rng rng(9);
    for (int iter = 0; iter < 5; ++iter) {
        PointCloud cloud = random_cloud(8 + iter, rng);
        ImageTensor image = random_image(12, rng);
        CHECK(discriminate(store, cfg, image, cloud) == 0.0);
    }
}

TEST_CASE("critic loss at forced outputs") {
    const ModelConfig cfg = tiny_model(4, 3);
    auto store = disc_store<double>(cfg, 11);
    Rng rng(13);
    PointCloud real = random_cloud(10, rng);
    PointCloud fake = random_cloud(10, rng);
    ImageTensor image = random_image(12, rng);

    auto& lastw = store.at("disc.head.m5.w");
    auto& lastb = store.at("disc.head.m5.b");
    lastw.fill(0.0);

    lastb.v[0] = 1.0;  // D == 1 everywhere
    CHECK(discriminator_loss(store, cfg, image, real, fake) == doctest::Approx(0.5));
    lastb.v[0] = 0.5;  // D == 1/2 everywhere
    CHECK(discriminator_loss(store, cfg, image, real, fake) == doctest::Approx(0.25));
}

TEST_CASE("critic gradients match finite differences") {
    const ModelConfig cfg = tiny_model(3, 3);
    // Seed keeps the pool argmax and relu signs stable under the fd step.
    auto store = disc_store<double>(cfg, 20, 0.08);
    Rng rng(19);
    PointCloud real = random_cloud(6, rng);
    PointCloud fake = random_cloud(6, rng);
    ImageTensor image = random_image(10, rng);
    const Tensor<double> imgs = images_to_batch<double>({&image});
    const Tensor<double> rrows = clouds_to_rows<double>({&real});
    const Tensor<double> frows = clouds_to_rows<double>({&fake});

    auto build = [&](Tape<double>& t, ParamStore<double>& s) {
        return discriminator_loss_graph(t, s, cfg, t.constant(imgs), t.constant(rrows),
                                        t.constant(frows), 6);
    };
    CHECK(grad_check<double>(store, build, 1e-4) < 1e-5);

    // Only critic parameters are trainable in this graph.
    Tape<double> tape(true);
    build(tape, store);
    CHECK(tape.bindings().size() > 0);
    for (const auto& bind : tape.bindings()) CHECK(is_discriminator_param(bind.name));
}

TEST_CASE("training the critic alone separates real from generated clouds") {
    const ModelConfig cfg = tiny_model(4, 3);
    auto store = disc_store<double>(cfg, 23);
    Rng rng(29);

    // Frozen generator: the identity flow emits gaussian blobs, while real
    // clouds are thin shape surfaces.
    ShapeSpec spec = random_shape_spec(ShapeFamily::Ellipsoid, 0, rng);
    const i64 n = 24, batch = 4;
    std::vector<PointCloud> real_clouds;
    std::vector<ImageTensor> images;
    for (i64 i = 0; i < batch; ++i) {
        real_clouds.push_back(sample_shape_surface(spec, n, rng));
        images.push_back(render_silhouette(spec, rng.uniform(0, 6.28), 0.4, 12));
    }
    std::vector<const PointCloud*> rc;
    std::vector<const ImageTensor*> ic;
    for (i64 i = 0; i < batch; ++i) {
        rc.push_back(&real_clouds[static_cast<size_t>(i)]);
        ic.push_back(&images[static_cast<size_t>(i)]);
    }
    const Tensor<double> rrows = clouds_to_rows<double>(rc);
    const Tensor<double> imgs = images_to_batch<double>(ic);

    AdamHyper hyper;
    hyper.lr = 2e-3;
    double loss_val = 1.0;
    for (int step = 0; step < 500 && loss_val >= 0.1; ++step) {
        Tensor<double> fake({batch * n, 3});
        for (auto& v : fake.v) v = rng.normal();
        Tape<double> tape(true);
        auto loss = discriminator_loss_graph(tape, store, cfg, tape.constant(imgs),
                                             tape.constant(rrows), tape.constant(fake), n);
        loss_val = tape.scalar(loss);
        tape.backward(loss);
        tape.materialize_param_grads();
        for (const auto& bind : tape.bindings())
            store.adam_update(store.entry(bind.name), tape.grad(bind.var), hyper);
    }
    CHECK(loss_val < 0.1);
}

TEST_CASE("loss is non-negative and zero only at the optimum") {
    const ModelConfig cfg = tiny_model(4, 3);
    auto store = disc_store<double>(cfg, 31, 0.1);
    Rng rng(37);
    for (int iter = 0; iter < 10; ++iter) {
        PointCloud real = random_cloud(8, rng);
        PointCloud fake = random_cloud(8, rng);
        ImageTensor image = random_image(12, rng);
        const double dr = discriminate(store, cfg, image, real);
        const double df = discriminate(store, cfg, image, fake);
        const double loss = discriminator_loss(store, cfg, image, real, fake);
        CHECK(loss >= 0.0);
        CHECK(loss == doctest::Approx(0.5 * ((dr - 1.0) * (dr - 1.0) + df * df)));
    }
}

TEST_CASE("head depth is validated") {
    ModelConfig cfg = tiny_model();
    cfg.disc_head = {16, 8};  // would be 3 affine layers, not 5
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
