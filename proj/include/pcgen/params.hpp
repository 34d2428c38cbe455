#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "pcgen/tensor.hpp"

namespace pcgen {

struct AdamHyper {
    double lr = 2.56e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Step-decay schedule: the base rate until drop_epoch, then divided once.
inline double lr_at(i64 epoch, double base_lr, i64 drop_epoch = 20, double divisor = 4.0) {
    return epoch < drop_epoch ? base_lr : base_lr / divisor;
}

// Named parameter tensors in stable insertion order, each with its Adam
// moments and per-parameter step count.
template <class T>
class ParamStore {
  public:
    struct Entry {
        std::string name;
        Tensor<T> value;
        Tensor<T> m;
        Tensor<T> v;
        i64 step = 0;
    };

    Tensor<T>& create(const std::string& name, Tensor<T> init) {
        if (index_.count(name)) throw NumericError("param store: duplicate name " + name);
        index_.emplace(name, entries_.size());
        entries_.push_back({name, std::move(init), {}, {}, 0});
        Entry& e = entries_.back();
        e.m = Tensor<T>(e.value.shape);
        e.v = Tensor<T>(e.value.shape);
        return e.value;
    }

    bool has(const std::string& name) const { return index_.count(name) > 0; }

    Tensor<T>& at(const std::string& name) { return entry(name).value; }
    const Tensor<T>& at(const std::string& name) const { return entry(name).value; }

    Entry& entry(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw NumericError("param store: unknown name " + name);
        return entries_[it->second];
    }
    const Entry& entry(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw NumericError("param store: unknown name " + name);
        return entries_[it->second];
    }

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }

    i64 total_scalars() const {
        i64 n = 0;
        for (const auto& e : entries_) n += e.value.numel();
        return n;
    }

    // Bias-corrected Adam on one entry, in place.
    void adam_update(Entry& e, const Tensor<T>&gradient, const AdamHyper& h) {
        if (gradient.shape != e.value.shape)
            throw NumericError("adam: gradient shape " + const_cast<Tensor<T>&>(gradient).shape_str() +
                               " does not match parameter " + e.name);
        e.step += 1;
        const double b1t = 1.0 - std::pow(h.beta1, static_cast<double>(e.step));
        const double b2t = 1.0 - std::pow(h.beta2, static_cast<double>(e.step));
        for (i64 i = 0; i < e.value.numel(); ++i) {
            const double g = static_cast<double>(gradient.v[i]);
            const double m = h.beta1 * static_cast<double>(e.m.v[i]) + (1.0 - h.beta1) * g;
            const double v = h.beta2 * static_cast<double>(e.v.v[i]) + (1.0 - h.beta2) * g * g;
            e.m.v[i] = static_cast<T>(m);
            e.v.v[i] = static_cast<T>(v);
            const double mh = m / b1t;
            const double vh = v / b2t;
            e.value.v[i] -= static_cast<T>(h.lr * mh / (std::sqrt(vh) + h.eps));
        }
    }

    // Gradients aligned by name; every named entry must exist.
    void adam_step(const std::vector<std::pair<std::string, const Tensor<T>*>>& grads,
                   const AdamHyper& h) {
        for (const auto& [name, g] : grads) adam_update(entry(name), *g, h);
    }

  private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> index_;
};

// Uniform(+-sqrt(6/(fan_in+fan_out))) weight init; biases start at zero.
template <class T>
Tensor<T> xavier_uniform(std::vector<i64> shape, i64 fan_in, i64 fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return random_uniform<T>(std::move(shape), rng, -a, a);
}

}  // namespace pcgen
