#pragma once

#include <cmath>
#include <cstdint>

namespace kcsm {

namespace detail {
inline uint64_t splitmix64(uint64_t& s) {
    uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
} // namespace detail

/// xoshiro256++ with splitmix64 seeding. Bit-identical output on every
/// platform, unlike the std:: distributions. `stream` derives statistically
/// independent substreams from one user seed, so replicas and sweep points
/// can run in parallel and still aggregate deterministically.
class Rng {
  public:
    explicit Rng(uint64_t seed, uint64_t stream = 0) {
        uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        for (auto& w : state_) w = detail::splitmix64(s);
    }

    uint64_t next_u64() {
        const uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Mean-1/rate exponential variate.
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Uniform integer in [0, n). Fixed-point multiply keeps it deterministic.
    uint32_t bounded(uint32_t n) {
        return static_cast<uint32_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

  private:
    uint64_t state_[4];
};

} // namespace kcsm
