#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace pcgen {

// xoshiro256++ with splitmix64 seeding. Hand-rolled so that streams are
// reproducible across platforms and standard-library versions; everything
// downstream (dataset builds, training, sampling) keys off these streams.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& si : s_) si = splitmix64(x);
        have_spare_ = false;
        spare_ = 0.0;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; the spare draw is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
    std::uint64_t uniform_index(std::uint64_t n) { return n ? next_u64() % n : 0; }

    // Serializable stream state (four words plus the Box-Muller cache).
    struct State {
        std::array<std::uint64_t, 4> s;
        bool have_spare;
        double spare;
    };
    State state() const { return {s_, have_spare_, spare_}; }
    void set_state(const State& st) {
        s_ = st.s;
        have_spare_ = st.have_spare;
        spare_ = st.spare;
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::array<std::uint64_t, 4> s_{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Derives an independent stream from a base seed and a tag path, e.g.
// derive_seed(seed, {epoch, step}). Used for resumable, order-free seeding.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t x = seed ^ 0x6a09e667f3bcc908ULL;
    (void)Rng::splitmix64(x);
    for (std::uint64_t t : tags) {
        x ^= t + 0x9e3779b97f4a7c15ULL + (x << 6) + (x >> 2);
        (void)Rng::splitmix64(x);
    }
    return x;
}

}  // namespace pcgen
