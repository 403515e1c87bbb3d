#pragma once

#include <cmath>
#include <cstdint>

namespace ffrlab {

// Counter-free xoshiro256** generator with splitmix64 seeding. The simulator
// needs one independent stream per realization whose output does not depend on
// how realizations are scheduled across threads, so every stream is seeded
// from (master_seed, stream_index) alone.
class Rng {
  public:
    Rng() : Rng(0x9e3779b97f4a7c15ULL, 0) {}

    Rng(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::uint64_t x = master_seed ^ (0xbf58476d1ce4e5b9ULL * (stream_index + 1));
        for (auto& word : state_) word = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [0, n); unbiased via rejection.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= threshold) return x % n;
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Unit-mean exponential unless a rate is given.
    double exponential(double rate = 1.0) { return -std::log1p(-uniform()) / rate; }

    // Exact Poisson draw by multiplicative (Knuth) sampling; the mean is split
    // into chunks so exp(-chunk) stays far from underflow for large means.
    std::uint64_t poisson(double mean) {
        std::uint64_t total = 0;
        while (mean > 0) {
            const double chunk = mean > 16.0 ? 16.0 : mean;
            mean -= chunk;
            const double limit = std::exp(-chunk);
            double prod = uniform();
            while (prod >= limit) {
                ++total;
                prod *= uniform();
            }
        }
        return total;
    }

    // Partial Fisher-Yates: permutes the first k entries of [first, first+n).
    template <class It>
    void partial_shuffle(It first, std::size_t n, std::size_t k) {
        if (k > n) k = n;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_below(n - i));
            auto tmp = first[i];
            first[i] = first[j];
            first[j] = tmp;
        }
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_[4];
};

}  // namespace ffrlab
