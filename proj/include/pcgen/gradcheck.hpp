#pragma once

#include <functional>

#include "pcgen/tape.hpp"

namespace pcgen {

struct GradCheckOptions {
    double fd_step = 1e-4;
    // Relu/argmax subgradient sites cannot be certified by finite
    // differences. With exclude_kinks set, sites where the h and h/2
    // central-difference estimates disagree by more than kink_rel
    // (the signature of a crossed kink) are skipped and counted.
    bool exclude_kinks = false;
    double kink_rel = 0.01;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    i64 checked = 0;
    i64 excluded = 0;
};

// Central finite differences against the tape gradient for every scalar of
// every parameter the loss touches. `build` must construct a scalar loss on
// the given tape, pulling parameters from `store` via tape.param(). The
// relative error is |a - b| / max(1e-8, |a| + |b|).
template <class T>
GradCheckResult grad_check_detailed(
    ParamStore<T>& store,
    const std::function<typename Tape<T>::Var(Tape<T>&, ParamStore<T>&)>& build,
    const GradCheckOptions& opt = {}) {
    Tape<T> tape(true);
    auto loss = build(tape, store);
    if (tape.value(loss).numel() != 1) throw NumericError("grad_check: loss must be scalar");
    tape.backward(loss);
    tape.materialize_param_grads();

    auto eval = [&]() {
        Tape<T> t(false);
        return t.scalar(build(t, store));
    };

    GradCheckResult res;
    for (const auto& binding : tape.bindings()) {
        const Tensor<T>& analytic = tape.grad(binding.var);
        Tensor<T>& value = binding.store->at(binding.name);
        for (i64 i = 0; i < value.numel(); ++i) {
            const T keep = value.v[i];
            auto fd_at = [&](double h) {
                value.v[i] = keep + static_cast<T>(h);
                const double up = eval();
                value.v[i] = keep - static_cast<T>(h);
                const double dn = eval();
                value.v[i] = keep;
                return (up - dn) / (2.0 * h);
            };
            const double fd = fd_at(opt.fd_step);
            if (opt.exclude_kinks) {
                const double fd_half = fd_at(opt.fd_step / 2.0);
                const double dis =
                    std::fabs(fd - fd_half) / std::max(1e-8, std::fabs(fd) + std::fabs(fd_half));
                if (dis > opt.kink_rel) {
                    ++res.excluded;
                    continue;
                }
            }
            const double an = static_cast<double>(analytic.v[i]);
            const double rel = std::fabs(an - fd) / std::max(1e-8, std::fabs(an) + std::fabs(fd));
            if (rel > res.max_rel_error) res.max_rel_error = rel;
            ++res.checked;
        }
    }
    return res;
}

template <class T>
double grad_check(ParamStore<T>& store,
                  const std::function<typename Tape<T>::Var(Tape<T>&, ParamStore<T>&)>& build,
                  double fd_step = 1e-4) {
    GradCheckOptions opt;
    opt.fd_step = fd_step;
    return grad_check_detailed(store, build, opt).max_rel_error;
}

}  // namespace pcgen
