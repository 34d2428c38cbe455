#pragma once

#include "pcgen/discriminator.hpp"
#include "pcgen/encoders.hpp"
#include "pcgen/flow.hpp"

namespace pcgen {

// Generator objective: reconstruction negative log-likelihood plus a
// weighted latent KL (the variational bound) and, optionally, the
// least-squares adversarial term on the image-conditioned reconstruction.
struct GeneratorLossBreakdown {
    double recon_nll = 0.0;  // - mean per-point log-likelihood
    double kl = 0.0;
    double adv = 0.0;
    double total = 0.0;
    double kl_weight = 0.0;
    double adv_weight = 0.0;

    double elbo_part() const { return recon_nll + kl_weight * kl; }
};

template <class T>
struct GeneratorLossVars {
    typename Tape<T>::Var total;
    typename Tape<T>::Var recon_nll;
    typename Tape<T>::Var kl;
    typename Tape<T>::Var adv;  // invalid when built without the adversarial term
};

// Full batched loss graph. Gradients reach phi, psi and theta; the critic
// participates as a frozen scorer only. `eps_q`, `eps_p` and `u_fake` are
// pre-drawn noise constants so the step is a deterministic function of them.
template <class T>
GeneratorLossVars<T> generator_loss_graph(Tape<T>& tape, ParamStore<T>& store,
                                          const ModelConfig& cfg, typename Tape<T>::Var x_rows,
                                          typename Tape<T>::Var images,
                                          typename Tape<T>::Var eps_q, i64 points_per_cloud,
                                          double kl_weight, double adv_weight,
                                          typename Tape<T>::Var eps_p = {},
                                          typename Tape<T>::Var u_fake = {}) {
    GeneratorLossVars<T> out;

    auto q = encode_points_graph(tape, store, cfg, x_rows, points_per_cloud, true);
    auto p = encode_image_graph(tape, store, cfg, images, true);

    auto z_q = reparam_graph(tape, q, eps_q);
    auto lp = log_prob_rows(tape, store, cfg, x_rows, z_q, points_per_cloud, true);
    out.recon_nll = tape.neg(tape.mean_all(lp));

    out.kl = tape.mean_all(kl_rows_graph(tape, q, p));
    out.total = tape.add(out.recon_nll, tape.scale(out.kl, static_cast<T>(kl_weight)));

    if (adv_weight != 0.0) {
        if (!eps_p.valid() || !u_fake.valid())
            throw NumericError("generator loss: adversarial term needs eps_p and u_fake");
        auto z_p = reparam_graph(tape, p, eps_p);
        auto fake = flow_forward_rows(tape, store, cfg, u_fake, z_p, points_per_cloud, true);
        auto d = discriminator_graph(tape, store, cfg, images, fake.points, points_per_cloud,
                                     /*trainable=*/false);
        auto dm1 = tape.add_scalar(d, T(-1));
        out.adv = tape.scale(tape.mean_all(tape.mul(dm1, dm1)), T(0.5));
        out.total = tape.add(out.total, tape.scale(out.adv, static_cast<T>(adv_weight)));
    }
    return out;
}

// ----- plain (non-graph) operations -----------------------------------------

// Mean per-point log-likelihood of one cloud under a fixed latent.
template <class T>
double recon_loglik(ParamStore<T>& store, const ModelConfig& cfg, const PointCloud& cloud,
                    const std::vector<double>& z) {
    if (cloud.empty()) throw NumericError("recon_loglik: empty cloud");
    Tape<T> tape(false);
    auto lp = log_prob_rows(tape, store, cfg, tape.constant(clouds_to_rows<T>({&cloud})),
                            tape.constant(latent_to_tensor<T>(z)), cloud.size(), false);
    return tape.scalar(tape.mean_all(lp));
}

// Single-sample variational bound: one reparameterized z from q_phi(z|X).
template <class T>
GeneratorLossBreakdown negative_elbo(ParamStore<T>& store, const ModelConfig& cfg,
                                     const PointCloud& cloud, const ImageTensor& image, Rng& rng,
                                     double kl_weight) {
    const LatentGaussian q = encode_points(store, cfg, cloud);
    const LatentGaussian p = encode_image(store, cfg, image);
    const std::vector<double> z = reparam_sample(q, rng);

    GeneratorLossBreakdown b;
    b.kl_weight = kl_weight;
    b.recon_nll = -recon_loglik(store, cfg, cloud, z);
    b.kl = kl_gaussians(q, p);
    b.total = b.recon_nll + kl_weight * b.kl;
    return b;
}

// 0.5 * (D(I, X_hat) - 1)^2 for a generated cloud.
template <class T>
double generator_adv_loss(ParamStore<T>& store, const ModelConfig& cfg, const ImageTensor& image,
                          const PointCloud& predicted) {
    const double d = discriminate(store, cfg, image, predicted);
    return 0.5 * (d - 1.0) * (d - 1.0);
}

template <class T>
GeneratorLossBreakdown total_generator_loss(ParamStore<T>& store, const ModelConfig& cfg,
                                            const PointCloud& cloud, const ImageTensor& image,
                                            Rng& rng, double kl_weight, double adv_weight,
                                            const PointCloud& predicted) {
    GeneratorLossBreakdown b = negative_elbo(store, cfg, cloud, image, rng, kl_weight);
    b.adv_weight = adv_weight;
    b.adv = generator_adv_loss(store, cfg, image, predicted);
    b.total = b.recon_nll + kl_weight * b.kl + adv_weight * b.adv;
    return b;
}

}  // namespace pcgen
