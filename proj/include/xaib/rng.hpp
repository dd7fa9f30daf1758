#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace xaib {

// mt19937_64 engine with distribution code written out here, so sampled
// values do not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    // Uniform integer in [0, n).
    std::size_t below(std::size_t n);
    bool bernoulli(double p) { return uniform() < p; }
    // Standard normal via Box-Muller; the second variate is cached.
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
// Seed for element `index` of sub-stream `stream` under `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

}  // namespace xaib
