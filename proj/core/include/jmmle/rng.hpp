#pragma once

#include <cstdint>
#include <random>

namespace jmmle {

/// One step of the splitmix64 mixer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of the stream for (object, k) under `root`. Every random object of a
/// simulated dataset draws from its own stream, so adding draws to one object
/// never shifts another.
std::uint64_t stream_seed(std::uint64_t root, std::uint64_t object, std::uint64_t k = 0) noexcept;

/// mt19937_64 with platform-independent uniform and normal transforms (the
/// standard library distributions are not portable across implementations).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    bool bernoulli(double prob) noexcept { return uniform() < prob; }
    /// Standard normal by the Box-Muller transform; the second variate is cached.
    double normal() noexcept;

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace jmmle
