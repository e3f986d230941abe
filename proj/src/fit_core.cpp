#include "resokit/fit_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "resokit/errors.hpp"

namespace resokit {

namespace {

bool cholesky_factor(std::vector<double>& a, std::size_t p) {
    // In-place lower factor; upper triangle is left stale.
    for (std::size_t j = 0; j < p; ++j) {
        double d = a[j * p + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        const double ljj = std::sqrt(d);
        a[j * p + j] = ljj;
        for (std::size_t i = j + 1; i < p; ++i) {
            double s = a[i * p + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
            a[i * p + j] = s / ljj;
        }
    }
    return true;
}

void cholesky_substitute(const std::vector<double>& l, std::span<const double> b,
                         std::span<double> x, std::size_t p) {
    for (std::size_t i = 0; i < p; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * p + k] * x[k];
        x[i] = s / l[i * p + i];
    }
    for (std::size_t ii = p; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t k = ii + 1; k < p; ++k) s -= l[k * p + ii] * x[k];
        x[ii] = s / l[ii * p + ii];
    }
}

}  // namespace

bool cholesky_solve(std::vector<double> a, std::span<const double> b, std::span<double> x,
                    std::size_t p) {
    if (!cholesky_factor(a, p)) return false;
    cholesky_substitute(a, b, x, p);
    return true;
}

std::vector<double> spd_inverse(std::vector<double> a, std::size_t p) {
    if (!cholesky_factor(a, p)) return {};
    std::vector<double> inv(p * p, 0.0);
    std::vector<double> e(p, 0.0), col(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        cholesky_substitute(a, e, col, p);
        for (std::size_t i = 0; i < p; ++i) inv[i * p + j] = col[i];
    }
    return inv;
}

LmResult lm_fit(const LmModelFn& model, std::vector<double> initial, std::size_t n_residuals,
                const LmOptions& options) {
    const std::size_t p = initial.size();
    const std::size_t n = n_residuals;
    if (p == 0 || n < p) throw fit_error("lm_fit: fewer residuals than parameters");

    std::vector<double> r(n), r_trial(n), jac(n * p);
    std::vector<double> jtj(p * p), jtr(p), damped(p * p), step(p), trial(p);

    auto chi2_of = [&](const std::vector<double>& rv) {
        double s = 0.0;
        for (double v : rv) s += v * v;
        return s;
    };

    LmResult result;
    result.params = initial;
    result.n_residuals = n;

    model(result.params, r, jac.data());
    double chi2 = chi2_of(r);
    if (!std::isfinite(chi2)) throw fit_error("lm_fit: non-finite residuals at initial point");

    double lambda = options.lambda_init;
    bool need_jacobian = false;

    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        if (need_jacobian) {
            model(result.params, r, jac.data());
            chi2 = chi2_of(r);
            need_jacobian = false;
        }

        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a; b < p; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += jac[i * p + a] * jac[i * p + b];
                jtj[a * p + b] = s;
                jtj[b * p + a] = s;
            }
            double g = 0.0;
            for (std::size_t i = 0; i < n; ++i) g += jac[i * p + a] * r[i];
            jtr[a] = -g;
        }

        if (chi2 == 0.0) {
            result.converged = true;
            break;
        }

        bool accepted = false;
        double best_rejected = std::numeric_limits<double>::infinity();
        while (lambda <= options.lambda_max) {
            damped = jtj;
            for (std::size_t a = 0; a < p; ++a) {
                const double dmin = std::max(jtj[a * p + a], 1e-300);
                damped[a * p + a] = jtj[a * p + a] + lambda * dmin;
            }
            if (!cholesky_solve(damped, jtr, step, p)) {
                lambda *= options.lambda_up;
                continue;
            }
            for (std::size_t a = 0; a < p; ++a) trial[a] = result.params[a] + step[a];
            model(trial, r_trial, nullptr);
            const double chi2_trial = chi2_of(r_trial);
            if (std::isfinite(chi2_trial) && chi2_trial < chi2) {
                accepted = true;
                break;
            }
            if (std::isfinite(chi2_trial)) best_rejected = std::min(best_rejected, chi2_trial);
            lambda *= options.lambda_up;
        }
        if (!accepted) {
            // Nothing improves chi2: a plateau at the optimum counts as
            // converged, anything else is a genuine stall.
            result.converged = best_rejected <= chi2 * (1.0 + options.rel_chi2_tol);
            break;
        }

        double step_norm = 0.0, param_norm = 0.0;
        for (std::size_t a = 0; a < p; ++a) {
            step_norm += step[a] * step[a];
            param_norm += trial[a] * trial[a];
        }
        step_norm = std::sqrt(step_norm);
        param_norm = std::sqrt(param_norm);

        result.params = trial;
        chi2 = chi2_of(r_trial);
        lambda = std::max(lambda * options.lambda_down, 1e-300);
        need_jacobian = true;

        if (step_norm < options.rel_step_tol * (param_norm + options.rel_step_tol)) {
            result.converged = true;
            ++iter;
            break;
        }
    }

    // Normal matrix at the final point, for covariance estimates.
    model(result.params, r, jac.data());
    chi2 = chi2_of(r);
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a; b < p; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += jac[i * p + a] * jac[i * p + b];
            jtj[a * p + b] = s;
            jtj[b * p + a] = s;
        }
    }

    result.chi2 = chi2;
    result.iterations = iter;
    result.jtj = jtj;
    return result;
}

}  // namespace resokit
