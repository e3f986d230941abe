#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "resokit/types.hpp"

namespace resokit {

/// Deviation of a device trace from a reference through, in dB over a band.
struct RippleReport {
    double band_lo_hz = 0.0;
    double band_hi_hz = 0.0;
    double max_abs_diff_db = 0.0;
    double mean_diff_db = 0.0;
    double threshold_db = 0.0;
    bool pass = false;
};

/// Interpolates the through magnitude (linear in dB vs frequency) onto the
/// device grid restricted to [band_lo, band_hi] and reports the extremes of
/// |device|dB - |through|dB. pass <=> max_abs_diff_db < threshold_db.
RippleReport ripple_metric(const ComplexTrace& device, const ComplexTrace& through,
                           double band_lo_hz, double band_hi_hz, double threshold_db);

/// A sub-span of a trace centered on one resonance dip.
struct ResonanceWindow {
    ComplexTrace trace;
    double f_guess_hz = 0.0;
    double span_hz = 0.0;
    std::optional<double> doublet_partner_hz;
    double linewidth_est_hz = 0.0;
};

struct DelayRemoval {
    ComplexTrace trace;
    double tau_s = 0.0;
};

/// Estimates cable delay from the off-resonant phase slope (outer 10% of
/// samples on each side) and returns the trace multiplied by exp(+2i pi f tau).
DelayRemoval remove_cable_delay(const ComplexTrace& window);

struct DetectOptions {
    double prominence_db = 1.0;
    double min_separation_hz = 0.0;         // minima closer than this merge (deeper wins)
    double pairing_span_linewidths = 20.0;  // doublet partner search span
    double window_halfspan_linewidths = 6.0;
};

/// Finds |S21| dips with at least the requested dB prominence and returns one
/// window per dip. Nearby dips are flagged as doublet partners. Empty result
/// is valid.
std::vector<ResonanceWindow> detect_resonances(const ComplexTrace& trace,
                                               const DetectOptions& options = {});
std::vector<ResonanceWindow> detect_resonances(const ComplexTrace& trace, double prominence_db,
                                               double min_separation_hz);

/// Componentwise median of the wing samples; the per-window complex baseline.
std::complex<double> estimate_baseline(const ComplexTrace& window, double wing_fraction = 0.1);

/// Divides out the wing baseline so that off-resonant |S21| ~ 1.
ResonanceWindow normalize_window(const ResonanceWindow& window);

/// Sample indices of the outer wing_fraction on each side.
std::vector<std::size_t> wing_indices(std::size_t n, double wing_fraction = 0.1);

/// Unwraps phases so adjacent steps stay within (-pi, pi].
std::vector<double> unwrap_phase(const std::vector<double>& phase);

}  // namespace resokit
