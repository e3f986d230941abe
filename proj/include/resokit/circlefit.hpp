#pragma once

#include <complex>
#include <span>

#include "resokit/baseline.hpp"
#include "resokit/types.hpp"

namespace resokit {

struct Circle {
    std::complex<double> center;
    double radius = 0.0;
    double rms_residual = 0.0;
};

/// Taubin algebraic circle fit. Needs >= 5 points; throws fit_error on
/// collinear/degenerate input.
Circle algebraic_circle_fit(std::span<const std::complex<double>> points);

/// Full notch model parameter vector:
/// S21(f) = env_amp e^{i env_phase} e^{-2i pi f tau} *
///          [1 - (q_l/q_c_mag) e^{i phi} / (1 + 2i q_l (f/f_c - 1))]
struct DcmParams {
    double f_c_hz = 0.0;
    double q_l = 0.0;
    double q_c_mag = 0.0;
    double phi = 0.0;
    double tau_s = 0.0;
    double env_amp = 1.0;
    double env_phase = 0.0;
};

std::complex<double> dcm_model(double f_hz, const DcmParams& p);
void dcm_model_eval(std::span<const double> freq_hz, const DcmParams& p,
                    std::span<std::complex<double>> out);

/// 1/q_l = 1/q_i + cos(phi)/q_c_mag and its inverse.
double q_l_from(double q_i, double q_c_mag, double phi);
double q_i_from(double q_l, double q_c_mag, double phi);

struct PhaseFit {
    double f_c_hz = 0.0;
    double q_l = 0.0;
    double theta0 = 0.0;
    double rms_residual = 0.0;
    int iterations = 0;
};

/// Fits theta(f) = theta0 + 2 atan(2 q_l (1 - f/f_c)) to the unwrapped phase
/// of (s21 - circle center). Initial guesses are taken from the data unless
/// given explicitly.
PhaseFit phase_fit(const ComplexTrace& window, const Circle& circle);
PhaseFit phase_fit(const ComplexTrace& window, const Circle& circle, double f_c_init_hz,
                   double q_l_init);

struct DcmCi95 {
    double f_c_hz = 0.0;
    double q_l = 0.0;
    double q_c_mag = 0.0;
    double phi = 0.0;
    double q_i = 0.0;
    double tau_s = 0.0;
    double env_amp = 0.0;
    double env_phase = 0.0;
};

struct DcmResult {
    double f_c_hz = 0.0;
    double q_l = 0.0;
    double q_c_mag = 0.0;  // |Q_c*|
    double phi = 0.0;      // impedance-mismatch rotation, in (-pi/2, pi/2)
    double q_i = 0.0;
    double tau_s = 0.0;
    double env_amp = 0.0;
    double env_phase = 0.0;
    DcmCi95 ci95;           // 95% half-widths (1.96 sigma)
    double rms_residual = 0.0;
    double noise_sigma = 0.0;  // per-quadrature wing noise estimate
    int iterations = 0;

    /// Coupling quality factor in the Re convention, q_c_mag / cos(phi);
    /// this is the scalar Q_c used for reporting and photon numbers.
    double q_c_real() const;
};

/// Diameter-corrected circle fit of one resonance window: delay removal,
/// baseline normalization, algebraic circle fit, phase fit, diameter
/// correction, then a joint complex least-squares refinement of all seven
/// model parameters with Jacobian-based confidence intervals.
DcmResult dcm_fit(const ResonanceWindow& window);

/// Half-depth full width of the dip in |S21|^2, used for initial q_l guesses.
double estimate_linewidth(const ComplexTrace& window);

}  // namespace resokit
