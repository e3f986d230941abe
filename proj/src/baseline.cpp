#include "resokit/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "resokit/constants.hpp"
#include "resokit/errors.hpp"

namespace resokit {

namespace {

double interp_linear(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    const auto it = std::lower_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return ys.front();
    if (it == xs.end()) return ys.back();
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + t * (ys[hi] - ys[lo]);
}

double median_of(std::vector<double> values) {
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    double hi = values[mid];
    if (n % 2 == 1) return hi;
    const double lo = *std::max_element(values.begin(), values.begin() + mid);
    return 0.5 * (lo + hi);
}

struct Dip {
    std::size_t index;
    double prominence_db;
    double linewidth_hz;
};

double dip_prominence(const std::vector<double>& db, std::size_t idx) {
    const double v = db[idx];
    double left_high = v;
    for (std::size_t i = idx; i-- > 0;) {
        if (db[i] < v) break;
        left_high = std::max(left_high, db[i]);
    }
    double right_high = v;
    for (std::size_t i = idx + 1; i < db.size(); ++i) {
        if (db[i] < v) break;
        right_high = std::max(right_high, db[i]);
    }
    return std::min(left_high, right_high) - v;
}

// Full width of the dip at half depth in |S21|^2, between the dip floor and
// the prominence reference level.
double dip_halfwidth(const ComplexTrace& trace, const std::vector<double>& db, std::size_t idx,
                     double prominence_db) {
    const double v = db[idx];
    const double ref = v + prominence_db;
    const double p_half = 0.5 * (std::pow(10.0, v / 10.0) + std::pow(10.0, ref / 10.0));
    const double half_db = 10.0 * std::log10(p_half);

    double f_left = trace.f_min();
    for (std::size_t i = idx; i-- > 0;) {
        if (db[i] >= half_db) {
            const double t = (half_db - db[i + 1]) / (db[i] - db[i + 1]);
            f_left = trace.freq_hz[i + 1] + t * (trace.freq_hz[i] - trace.freq_hz[i + 1]);
            break;
        }
    }
    double f_right = trace.f_max();
    for (std::size_t i = idx + 1; i < db.size(); ++i) {
        if (db[i] >= half_db) {
            const double t = (half_db - db[i - 1]) / (db[i] - db[i - 1]);
            f_right = trace.freq_hz[i - 1] + t * (trace.freq_hz[i] - trace.freq_hz[i - 1]);
            break;
        }
    }
    const double grid_step = trace.span_hz() / static_cast<double>(trace.size() - 1);
    return std::max(f_right - f_left, grid_step);
}

}  // namespace

std::vector<std::size_t> wing_indices(std::size_t n, double wing_fraction) {
    const std::size_t w = std::max<std::size_t>(2, static_cast<std::size_t>(
                                                       std::floor(wing_fraction * n)));
    std::vector<std::size_t> idx;
    idx.reserve(2 * w);
    for (std::size_t i = 0; i < w && i < n; ++i) idx.push_back(i);
    for (std::size_t i = n >= w ? n - w : 0; i < n; ++i) idx.push_back(i);
    return idx;
}

std::vector<double> unwrap_phase(const std::vector<double>& phase) {
    std::vector<double> out(phase.size());
    if (phase.empty()) return out;
    out[0] = phase[0];
    double offset = 0.0;
    for (std::size_t i = 1; i < phase.size(); ++i) {
        double step = phase[i] - phase[i - 1];
        while (step > consts::pi) {
            step -= consts::two_pi;
            offset -= consts::two_pi;
        }
        while (step < -consts::pi) {
            step += consts::two_pi;
            offset += consts::two_pi;
        }
        out[i] = phase[i] + offset;
    }
    return out;
}

RippleReport ripple_metric(const ComplexTrace& device, const ComplexTrace& through,
                           double band_lo_hz, double band_hi_hz, double threshold_db) {
    device.validate();
    through.validate();
    if (!(band_lo_hz < band_hi_hz)) throw validation_error("ripple: empty band");
    if (device.f_min() > band_lo_hz || device.f_max() < band_hi_hz)
        throw validation_error("ripple: device trace does not cover the band");
    if (through.f_min() > band_lo_hz || through.f_max() < band_hi_hz)
        throw validation_error("ripple: through trace does not cover the band");

    const std::vector<double> dev_db = magnitude_db(device);
    const std::vector<double> thr_db = magnitude_db(through);

    RippleReport report;
    report.band_lo_hz = band_lo_hz;
    report.band_hi_hz = band_hi_hz;
    report.threshold_db = threshold_db;

    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < device.size(); ++i) {
        const double f = device.freq_hz[i];
        if (f < band_lo_hz || f > band_hi_hz) continue;
        const double diff = dev_db[i] - interp_linear(through.freq_hz, thr_db, f);
        report.max_abs_diff_db = std::max(report.max_abs_diff_db, std::abs(diff));
        sum += diff;
        ++count;
    }
    if (count == 0) throw validation_error("ripple: no device samples inside the band");
    report.mean_diff_db = sum / static_cast<double>(count);
    report.pass = report.max_abs_diff_db < threshold_db;
    return report;
}

DelayRemoval remove_cable_delay(const ComplexTrace& window) {
    window.validate();
    const std::size_t n = window.size();
    if (n < 20)
        throw validation_error("delay estimation: window too narrow (need >= 20 samples so "
                               "each 10% wing holds a line fit)");

    std::vector<double> phase(n);
    for (std::size_t i = 0; i < n; ++i) phase[i] = std::arg(window.s21[i]);
    const std::vector<double> unwrapped = unwrap_phase(phase);

    const std::vector<std::size_t> wings = wing_indices(n);
    double f_mean = 0.0, p_mean = 0.0;
    for (std::size_t i : wings) {
        f_mean += window.freq_hz[i];
        p_mean += unwrapped[i];
    }
    f_mean /= static_cast<double>(wings.size());
    p_mean /= static_cast<double>(wings.size());

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i : wings) {
        const double dx = window.freq_hz[i] - f_mean;
        sxx += dx * dx;
        sxy += dx * (unwrapped[i] - p_mean);
    }
    if (!(sxx > 0.0)) throw validation_error("delay estimation: degenerate frequency grid");

    const double slope = sxy / sxx;
    const double tau_s = -slope / consts::two_pi;

    DelayRemoval out;
    out.tau_s = tau_s;
    out.trace.freq_hz = window.freq_hz;
    out.trace.s21.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.trace.s21[i] =
            window.s21[i] * std::polar(1.0, consts::two_pi * window.freq_hz[i] * tau_s);
    return out;
}

std::vector<ResonanceWindow> detect_resonances(const ComplexTrace& trace,
                                               const DetectOptions& options) {
    trace.validate();
    if (!(options.prominence_db > 0.0))
        throw validation_error("detect: prominence_db must be positive");

    const std::vector<double> db = magnitude_db(trace);
    const std::size_t n = db.size();

    // Local minima, one candidate per flat-bottomed dip.
    std::vector<std::size_t> candidates;
    std::size_t i = 1;
    while (i + 1 < n) {
        if (db[i] < db[i - 1]) {
            std::size_t j = i;
            while (j + 1 < n && db[j + 1] == db[i]) ++j;
            if (j + 1 < n && db[j + 1] > db[i]) candidates.push_back((i + j) / 2);
            i = j + 1;
        } else {
            ++i;
        }
    }

    std::vector<Dip> dips;
    for (std::size_t idx : candidates) {
        const double prom = dip_prominence(db, idx);
        if (prom >= options.prominence_db)
            dips.push_back({idx, prom, dip_halfwidth(trace, db, idx, prom)});
    }

    // Merge minima closer than min_separation_hz, keeping the deeper one.
    if (options.min_separation_hz > 0.0) {
        std::vector<Dip> merged;
        for (const Dip& d : dips) {
            if (!merged.empty() && trace.freq_hz[d.index] - trace.freq_hz[merged.back().index] <
                                       options.min_separation_hz) {
                if (db[d.index] < db[merged.back().index]) merged.back() = d;
            } else {
                merged.push_back(d);
            }
        }
        dips = std::move(merged);
    }

    std::vector<ResonanceWindow> windows;
    for (std::size_t k = 0; k < dips.size(); ++k) {
        const Dip& d = dips[k];
        const double f_dip = trace.freq_hz[d.index];
        const double half = options.window_halfspan_linewidths * d.linewidth_hz;

        double f_lo = std::max(trace.f_min(), f_dip - half);
        double f_hi = std::min(trace.f_max(), f_dip + half);
        if (k > 0) f_lo = std::max(f_lo, 0.5 * (f_dip + trace.freq_hz[dips[k - 1].index]));
        if (k + 1 < dips.size())
            f_hi = std::min(f_hi, 0.5 * (f_dip + trace.freq_hz[dips[k + 1].index]));

        auto lo_it = std::lower_bound(trace.freq_hz.begin(), trace.freq_hz.end(), f_lo);
        auto hi_it = std::upper_bound(trace.freq_hz.begin(), trace.freq_hz.end(), f_hi);
        std::size_t lo = static_cast<std::size_t>(lo_it - trace.freq_hz.begin());
        std::size_t hi = static_cast<std::size_t>(hi_it - trace.freq_hz.begin());
        if (hi > 0) --hi;
        // Grow to the minimum acceptable sample count when the grid is coarse.
        while (hi - lo + 1 < 8 && (lo > 0 || hi + 1 < n)) {
            if (lo > 0) --lo;
            if (hi + 1 < n) ++hi;
        }
        if (hi - lo + 1 < 8) continue;

        ResonanceWindow w;
        w.trace = subtrace(trace, lo, hi);
        w.f_guess_hz = f_dip;
        w.span_hz = w.trace.span_hz();
        w.linewidth_est_hz = d.linewidth_hz;
        windows.push_back(std::move(w));
    }

    // Doublet partner flags for neighbours inside the pairing span.
    for (std::size_t k = 0; k + 1 < windows.size(); ++k) {
        const double gap = windows[k + 1].f_guess_hz - windows[k].f_guess_hz;
        const double span = options.pairing_span_linewidths *
                            std::max(windows[k].linewidth_est_hz, windows[k + 1].linewidth_est_hz);
        if (gap <= span) {
            windows[k].doublet_partner_hz = windows[k + 1].f_guess_hz;
            windows[k + 1].doublet_partner_hz = windows[k].f_guess_hz;
        }
    }
    return windows;
}

std::vector<ResonanceWindow> detect_resonances(const ComplexTrace& trace, double prominence_db,
                                               double min_separation_hz) {
    DetectOptions options;
    options.prominence_db = prominence_db;
    options.min_separation_hz = min_separation_hz;
    return detect_resonances(trace, options);
}

std::complex<double> estimate_baseline(const ComplexTrace& window, double wing_fraction) {
    window.validate();
    const std::vector<std::size_t> wings = wing_indices(window.size(), wing_fraction);
    std::vector<double> re, im;
    re.reserve(wings.size());
    im.reserve(wings.size());
    for (std::size_t i : wings) {
        re.push_back(window.s21[i].real());
        im.push_back(window.s21[i].imag());
    }
    return {median_of(std::move(re)), median_of(std::move(im))};
}

ResonanceWindow normalize_window(const ResonanceWindow& window) {
    const std::complex<double> baseline = estimate_baseline(window.trace);
    if (std::abs(baseline) < 1e-30)
        throw validation_error("normalize: wing amplitude is zero, cannot divide out baseline");

    ResonanceWindow out = window;
    for (auto& v : out.trace.s21) v /= baseline;
    return out;
}

}  // namespace resokit
