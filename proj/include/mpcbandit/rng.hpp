// Deterministic randomness. One Prng per logical stream; streams are derived
// from a master seed with a splitmix-style mixer so that adding a new stream
// never perturbs existing ones.
#pragma once

#include <cstdint>
#include <random>

#include "mpcbandit/ring.hpp"

namespace mpcbandit {

inline u64 mix64(u64 z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline u64 mix_seed(u64 a, u64 b) { return mix64(a ^ mix64(b)); }

inline u64 entropy_seed() {
    std::random_device rd;
    return (u64(rd()) << 32) ^ u64(rd()) ^ 0x5bd1e995u;
}

class Prng {
  public:
    explicit Prng(u64 seed) : g_(seed) {}

    u64 word() { return g_(); }
    u64 bit() { return g_() & 1; }

    // Uniform in [0, 1) with 53 random bits.
    double real01() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n) by rejection.
    u64 below(u64 n) {
        if (n == 0) return 0;
        u64 lim = u64(-1) - u64(-1) % n;
        u64 x;
        do {
            x = g_();
        } while (x >= lim);
        return x % n;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * real01() - 1.0;
            v = 2.0 * real01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    RingTensor tensor(std::size_t r, std::size_t c) {
        RingTensor t(r, c);
        for (auto& x : t.v) x = g_();
        return t;
    }

  private:
    std::mt19937_64 g_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace mpcbandit
