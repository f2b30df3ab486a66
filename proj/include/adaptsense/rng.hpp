#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace adaptsense {

/// SplitMix64 finalizer; used to derive independent seeds from a root seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the sub-stream reached from `root` by following `path`.
std::uint64_t deriveSeed(std::uint64_t root, std::initializer_list<std::uint64_t> path);

/// Seeded random stream with platform-independent output.
///
/// The engine is mt19937_64, whose sequence is fixed by the standard. The
/// standard distributions are implementation-defined, so the transforms to
/// uniform and normal variates are done here.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    static RandomStream derived(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
        return RandomStream(deriveSeed(root, path));
    }

    std::uint64_t nextBits() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal();

    /// Uniform integer in [0, n), unbiased.
    std::size_t index(std::size_t n);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool hasSpare_ = false;
};

} // namespace adaptsense
