#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace resokit {

/// Seeded generator with an explicit bit-to-double mapping so that streams
/// are reproducible across standard library implementations (the std
/// distributions are not).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the pair partner is cached.
    double normal();

    /// Independent N(0, sigma) on each quadrature.
    std::complex<double> normal_complex(double sigma) {
        return {sigma * normal(), sigma * normal()};
    }

  private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace resokit
