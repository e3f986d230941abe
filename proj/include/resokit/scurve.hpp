#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "resokit/photon.hpp"

namespace resokit {

struct ThermalContext {
    double f_c_hz = 0.0;
    double temperature_k = 0.015;

    void validate() const;
};

/// tanh(hbar omega / (2 kB T)) at omega = 2 pi f_c.
double thermal_factor(const ThermalContext& ctx);

struct ScurveCi95 {
    double f_dtls = 0.0;
    double n_c = 0.0;
    double beta = 0.0;
    double q_hp = 0.0;
};

/// Power-dependent loss model parameters:
/// 1/Q_i = f_dtls tanh(hbar omega / 2 kB T) / (1 + n/n_c)^beta + 1/q_hp.
struct ScurveParams {
    double f_dtls = 0.0;  // filling factor times intrinsic loss tangent
    double n_c = 0.0;
    double beta = 0.0;
    double q_hp = 0.0;
    ScurveCi95 ci95;
    double reduced_chi2 = 0.0;
    int iterations = 0;
    std::vector<std::string> warnings;

    /// Fit-side invariants: all positive, beta in (0, 2].
    void validate() const;
};

/// Total for n_mean >= 0 and beta >= 0 (beta = 0 is the power-independent
/// limit, used by generators).
double scurve_model(double n_mean, const ScurveParams& params, const ThermalContext& ctx);

/// Partials of the model w.r.t. (f_dtls, n_c, beta, q_hp).
std::array<double, 4> scurve_model_grad(double n_mean, const ScurveParams& params,
                                        const ThermalContext& ctx);

struct ScurveFitOptions {
    int multistart = 1;
    std::uint64_t seed = 0;
};

/// Weighted least squares of the loss model in 1/Q_i space, weights
/// 1/sigma_inv_qi^2, positivity enforced through log/sigmoid transforms.
/// Confidence intervals are Jacobian-based, scaled by the reduced chi^2.
ScurveParams fit_scurve(const std::vector<PowerPoint>& points, const ThermalContext& ctx,
                        const ScurveFitOptions& options = {});

}  // namespace resokit
