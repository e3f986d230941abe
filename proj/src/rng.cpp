#include "resokit/rng.hpp"

#include <cmath>

#include "resokit/constants.hpp"

namespace resokit {

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // Box-Muller; u1 shifted away from 0 so log stays finite.
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(consts::two_pi * u2);
    has_cached_ = true;
    return r * std::cos(consts::two_pi * u2);
}

}  // namespace resokit
