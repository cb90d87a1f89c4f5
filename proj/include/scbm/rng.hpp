#pragma once

#include <cstdint>
#include <vector>

namespace scbm {

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

/// xoshiro256++ generator. We roll our own instead of <random> because the
/// standard distributions are not bit-reproducible across implementations,
/// and every artifact output must be byte-stable for a fixed seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform();
    /// Uniform in (0, 1); zero draws are rejected.
    double uniform_open();
    double uniform(double lo, double hi);
    bool bernoulli(double p);
    /// Unbiased integer in [0, n) via rejection.
    std::size_t below(std::size_t n);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Derive an independent stream keyed by `stream`.
    Rng split(std::uint64_t stream) const;

    /// k distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t s_[4];
    std::uint64_t seed_;
};

}  // namespace scbm
