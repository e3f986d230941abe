#pragma once

namespace resokit::consts {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// 2019 SI values; hbar derived from the exact Planck constant.
inline constexpr double hbar_js = 1.054571817e-34;
inline constexpr double boltzmann_j_per_k = 1.380649e-23;
inline constexpr double light_speed_m_per_s = 299792458.0;

}  // namespace resokit::consts
