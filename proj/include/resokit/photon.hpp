#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "resokit/circlefit.hpp"
#include "resokit/types.hpp"

namespace resokit {

/// One power-sweep sample: mean photon number vs internal loss.
struct PowerPoint {
    double n_mean = 0.0;
    double inv_qi = 0.0;
    double sigma_inv_qi = 0.0;
    double applied_power_w = 0.0;

    void validate() const;  // all fields positive and finite
};

/// Watts at the chip: 1e-3 * 10^((vna_power_dbm - attenuation_db - extra_loss_db)/10).
double applied_power(double vna_power_dbm, double attenuation_db, double extra_loss_db = 0.0);

/// Steady-state side-coupled convention: <n> = 2 P q_l^2 / (hbar (2 pi f)^2 q_c).
/// q_c is the scalar (Re-convention) coupling quality factor.
double mean_photon_number(double power_w, double f_c_hz, double q_l, double q_c);

/// Converts per-power fits of one resonance into sweep points. All fits must
/// agree on the resonance (f_c within 100 linewidths of the first). The
/// 1/Q_i uncertainty comes from the fit's Q_i confidence interval.
std::vector<PowerPoint> build_power_sweep(
    const std::vector<std::pair<DcmResult, TraceMeta>>& fits, double extra_loss_db = 0.0);

/// CSV with columns n_mean, inv_qi, sigma_inv_qi, applied_power_w.
void write_power_csv(const std::filesystem::path& path, const std::vector<PowerPoint>& points);
std::vector<PowerPoint> read_power_csv(const std::filesystem::path& path);

}  // namespace resokit
