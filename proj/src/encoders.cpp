#include "pcgen/encoders.hpp"

namespace pcgen {

std::vector<double> reparam_sample(const LatentGaussian& g, Rng& rng) {
    std::vector<double> z(g.mean.size());
    for (size_t i = 0; i < z.size(); ++i)
        z[i] = g.mean[i] + std::exp(0.5 * g.log_var[i]) * rng.normal();
    return z;
}

double kl_gaussians(const LatentGaussian& q, const LatentGaussian& p) {
    if (q.dim() != p.dim()) throw NumericError("kl_gaussians: dimension mismatch");
    double kl = 0.0;
    for (size_t i = 0; i < q.mean.size(); ++i) {
        const double dlv = q.log_var[i] - p.log_var[i];
        const double dm = q.mean[i] - p.mean[i];
        kl += std::exp(dlv) + dm * dm * std::exp(-p.log_var[i]) - 1.0 - dlv;
    }
    return 0.5 * kl;
}

}  // namespace pcgen
