#pragma once

#include <cstdint>
#include <cmath>

// Deterministic RNG helpers. All randomized components of the library draw
// through these so that results are reproducible bit-for-bit for a fixed
// seed, independent of the standard library's distribution internals.

namespace kabp {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mixes a master seed with a substream index (frame, node, ...) into an
// independent stream seed.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master;
    splitmix64(s);
    s ^= 0x9e3779b97f4a7c15ULL * (index + 1);
    return splitmix64(s);
}

// Small xoshiro-style generator seeded via splitmix64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        s0_ = splitmix64(s);
        s1_ = splitmix64(s);
        have_gauss_ = false;
        gauss_ = 0.0;
    }

    std::uint64_t next() {
        // xoroshiro128+
        const std::uint64_t a = s0_;
        std::uint64_t b = s1_;
        const std::uint64_t r = a + b;
        b ^= a;
        s0_ = rotl(a, 24) ^ b ^ (b << 16);
        s1_ = rotl(b, 37);
        return r;
    }

    // Uniform in [0, n). Rejection-free modulo is fine here: n is tiny
    // compared to 2^64 in every use, and determinism is what matters.
    std::uint64_t bounded(std::uint64_t n) { return next() % n; }

    // Uniform double in [0, 1).
    double uniform() { return (next() >> 11) * 0x1.0p-53; }

    bool coin() { return (next() >> 63) != 0; }

    // Standard normal via Box-Muller (trig form, cached pair).
    double gaussian() {
        if (have_gauss_) {
            have_gauss_ = false;
            return gauss_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 6.283185307179586476925286766559 * u2;
        gauss_ = r * std::sin(th);
        have_gauss_ = true;
        return r * std::cos(th);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s0_, s1_;
    bool have_gauss_;
    double gauss_;
};

}  // namespace kabp
