#include "resokit/scurve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "resokit/constants.hpp"
#include "resokit/errors.hpp"
#include "resokit/fit_core.hpp"
#include "resokit/rng.hpp"

namespace resokit {

void ThermalContext::validate() const {
    if (!(f_c_hz > 0.0)) throw validation_error("thermal context: f_c must be positive");
    if (!(temperature_k > 0.0))
        throw validation_error("thermal context: temperature must be positive");
}

double thermal_factor(const ThermalContext& ctx) {
    ctx.validate();
    const double omega = consts::two_pi * ctx.f_c_hz;
    return std::tanh(consts::hbar_js * omega / (2.0 * consts::boltzmann_j_per_k *
                                                ctx.temperature_k));
}

void ScurveParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!std::isfinite(v) || !(v > 0.0))
            throw validation_error(std::string("scurve params: ") + name +
                                   " must be positive, got " + std::to_string(v));
    };
    positive(f_dtls, "f_dtls");
    positive(n_c, "n_c");
    positive(beta, "beta");
    positive(q_hp, "q_hp");
    if (beta > 2.0)
        throw validation_error("scurve params: beta must be <= 2, got " + std::to_string(beta));
}

double scurve_model(double n_mean, const ScurveParams& params, const ThermalContext& ctx) {
    if (!(n_mean >= 0.0)) throw validation_error("scurve model: n_mean must be >= 0");
    const double th = thermal_factor(ctx);
    return params.f_dtls * th / std::pow(1.0 + n_mean / params.n_c, params.beta) +
           1.0 / params.q_hp;
}

std::array<double, 4> scurve_model_grad(double n_mean, const ScurveParams& params,
                                        const ThermalContext& ctx) {
    const double th = thermal_factor(ctx);
    const double base = 1.0 + n_mean / params.n_c;
    const double shape = th / std::pow(base, params.beta);
    std::array<double, 4> g;
    g[0] = shape;
    g[1] = params.f_dtls * shape * params.beta * n_mean /
           (params.n_c * params.n_c * base);
    g[2] = -params.f_dtls * shape * std::log(base);
    g[3] = -1.0 / (params.q_hp * params.q_hp);
    return g;
}

namespace {

struct InitGuess {
    double f_dtls, n_c, beta, q_hp;
};

InitGuess initial_guess(const std::vector<PowerPoint>& sorted, double th) {
    InitGuess g{};
    const double y_lo = sorted.front().inv_qi;
    const double y_hi = sorted.back().inv_qi;
    g.q_hp = 1.0 / y_hi;
    g.f_dtls = (y_lo - y_hi) / th;
    if (!(g.f_dtls > 0.0)) g.f_dtls = 0.5 * y_lo / th;
    g.beta = 0.5;

    // n_c guess: where the curve crosses its midpoint, in log n.
    const double y_mid = 0.5 * (y_lo + y_hi);
    g.n_c = std::sqrt(sorted.front().n_mean * sorted.back().n_mean);
    for (std::size_t k = 1; k < sorted.size(); ++k) {
        if (sorted[k].inv_qi <= y_mid && sorted[k - 1].inv_qi > y_mid) {
            const double t = (y_mid - sorted[k - 1].inv_qi) /
                             (sorted[k].inv_qi - sorted[k - 1].inv_qi);
            const double ln =
                std::log(sorted[k - 1].n_mean) +
                t * (std::log(sorted[k].n_mean) - std::log(sorted[k - 1].n_mean));
            g.n_c = std::exp(ln);
            break;
        }
    }
    return g;
}

double beta_to_u(double beta) { return std::log(beta / (2.0 - beta)); }
double u_to_beta(double u) { return 2.0 / (1.0 + std::exp(-u)); }

}  // namespace

ScurveParams fit_scurve(const std::vector<PowerPoint>& points, const ThermalContext& ctx,
                        const ScurveFitOptions& options) {
    ctx.validate();
    const std::size_t m = points.size();
    if (m < 4)
        throw fit_error("fit_scurve: underdetermined, need at least 4 points, got " +
                        std::to_string(m));
    for (const PowerPoint& p : points) p.validate();

    std::vector<PowerPoint> sorted = points;
    std::sort(sorted.begin(), sorted.end(),
              [](const PowerPoint& a, const PowerPoint& b) { return a.n_mean < b.n_mean; });

    std::size_t distinct = 1;
    for (std::size_t i = 1; i < m; ++i)
        if (sorted[i].n_mean > sorted[i - 1].n_mean * (1.0 + 1e-9)) ++distinct;
    if (distinct < 4)
        throw fit_error("fit_scurve: underdetermined, need at least 4 distinct photon numbers, "
                        "got " + std::to_string(distinct));

    std::vector<std::string> warnings;
    if (m < 5) warnings.push_back("fewer than 5 sweep points; parameters weakly constrained");
    const double decades = std::log10(sorted.back().n_mean / sorted.front().n_mean);
    if (decades < 3.0)
        warnings.push_back("photon numbers span only " + std::to_string(decades) +
                           " decades (< 3); S-curve shape weakly constrained");

    const double th = thermal_factor(ctx);
    const InitGuess guess = initial_guess(sorted, th);

    auto residual_fn = [&](std::span<const double> x, std::span<double> r, double* jac) {
        ScurveParams p;
        p.f_dtls = std::exp(x[0]);
        p.n_c = std::exp(x[1]);
        p.beta = u_to_beta(x[2]);
        p.q_hp = std::exp(x[3]);
        const double dbeta_du = p.beta * (1.0 - 0.5 * p.beta);
        for (std::size_t i = 0; i < m; ++i) {
            const double w = 1.0 / sorted[i].sigma_inv_qi;
            r[i] = (scurve_model(sorted[i].n_mean, p, ctx) - sorted[i].inv_qi) * w;
            if (jac) {
                const auto g = scurve_model_grad(sorted[i].n_mean, p, ctx);
                jac[i * 4 + 0] = g[0] * p.f_dtls * w;
                jac[i * 4 + 1] = g[1] * p.n_c * w;
                jac[i * 4 + 2] = g[2] * dbeta_du * w;
                jac[i * 4 + 3] = g[3] * p.q_hp * w;
            }
        }
    };

    const std::vector<double> x_base = {std::log(guess.f_dtls), std::log(guess.n_c),
                                        beta_to_u(guess.beta), std::log(guess.q_hp)};

    Rng rng(options.seed);
    LmResult best;
    bool have_best = false;
    const int starts = std::max(options.multistart, 1);
    for (int s = 0; s < starts; ++s) {
        std::vector<double> x0 = x_base;
        if (s > 0)
            for (double& v : x0) v += 0.5 * rng.normal();
        LmResult lm;
        try {
            lm = lm_fit(residual_fn, std::move(x0), m);
        } catch (const fit_error&) {
            continue;
        }
        if (lm.converged && (!have_best || lm.chi2 < best.chi2)) {
            best = std::move(lm);
            have_best = true;
        }
    }
    if (!have_best)
        throw fit_error("fit_scurve did not converge (" + std::to_string(starts) + " start(s))");

    ScurveParams out;
    out.f_dtls = std::exp(best.params[0]);
    out.n_c = std::exp(best.params[1]);
    out.beta = u_to_beta(best.params[2]);
    out.q_hp = std::exp(best.params[3]);
    out.iterations = best.iterations;
    out.warnings = std::move(warnings);

    const double dof = static_cast<double>(m) - 4.0;
    out.reduced_chi2 = dof > 0.0 ? best.chi2 / dof : 1.0;
    if (dof <= 0.0)
        out.warnings.push_back("zero degrees of freedom; confidence intervals unscaled");

    const std::vector<double> cov_int = spd_inverse(best.jtj, 4);
    if (cov_int.empty()) {
        const double inf = std::numeric_limits<double>::infinity();
        out.ci95 = {inf, inf, inf, inf};
    } else {
        const double dbeta_du = out.beta * (1.0 - 0.5 * out.beta);
        const double scale[4] = {out.f_dtls, out.n_c, dbeta_du, out.q_hp};
        const double s2 = dof > 0.0 ? out.reduced_chi2 : 1.0;
        auto ci = [&](int i) {
            return 1.96 * scale[i] * std::sqrt(std::max(cov_int[i * 4 + i] * s2, 0.0));
        };
        out.ci95 = {ci(0), ci(1), ci(2), ci(3)};
    }

    out.validate();
    return out;
}

}  // namespace resokit
