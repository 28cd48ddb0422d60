#pragma once
// Portable seeded random numbers. std::uniform_real_distribution is
// implementation-defined, so uniform draws are built directly from the
// 64-bit engine output to keep scenarios identical across toolchains.

#include <cstdint>
#include <random>

namespace goflock {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

    /// Derive an independent stream for a sub-task.
    Rng fork(std::uint64_t salt) { return Rng(engine_() ^ (salt * 0x9E3779B97F4A7C15ULL)); }

private:
    std::mt19937_64 engine_;
};

}  // namespace goflock
