#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace lqexplore {

/// Seeded random stream. The engine is std::mt19937_64 and normals come from
/// Boost's ziggurat sampler, so a (seed, stream) pair reproduces the same
/// sequence on every platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

    double normal()
    {
        ++draws_;
        return normal_(engine_);
    }

    double uniform(double lo, double hi)
    {
        ++draws_;
        return boost::random::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }
    /// Number of variates handed out so far.
    [[nodiscard]] std::uint64_t draws() const noexcept { return draws_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t draws_ = 0;
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;
};

} // namespace lqexplore
