#pragma once

#include <cstdint>

namespace mla {

/// Finalizer step of SplitMix64 (Steele, Lea & Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// SplitMix64 generator. Chosen over std::mt19937_64 because the whole
/// algorithm is a few lines of fixed integer arithmetic: streams are
/// reproducible across platforms and trivially split by seed derivation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix64(state_);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1].
    double next_open_double() { return 1.0 - next_double(); }

    /// Standard normal via Box-Muller (two uniforms per draw, cosine branch).
    double next_normal();

    /// Draw from Normal(mu, sigma) conditioned on being strictly positive,
    /// by rejection. sigma == 0 degenerates to the constant mu (mu > 0
    /// required). Rejected draws are counted into *rejections when given.
    double next_positive_normal(double mu, double sigma, std::uint64_t* rejections = nullptr);

private:
    std::uint64_t state_;
};

/// Deterministic seed splitting: stream `i` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master ^ mix64(stream + 0x9E3779B97F4A7C15ull));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(master, a), b);
}

}  // namespace mla
