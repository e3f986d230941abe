#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace resokit {

/// Fills residuals (length n) and, when jac is non-null, the row-major
/// n x p Jacobian d residual_i / d param_j at the given parameter vector.
using LmModelFn =
    std::function<void(std::span<const double> params, std::span<double> residuals, double* jac)>;

struct LmOptions {
    int max_iterations = 200;
    double rel_step_tol = 1e-10;  // converged when |step| < tol * (|p| + tol)
    double rel_chi2_tol = 1e-14;  // a stall within this of the current chi2 is a plateau
    double lambda_init = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 0.1;
    double lambda_max = 1e14;
};

struct LmResult {
    std::vector<double> params;
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
    std::size_t n_residuals = 0;
    std::vector<double> jtj;  // p x p normal matrix at the optimum
};

/// Damped Gauss-Newton (Levenberg-Marquardt with diagonal scaling) on
/// unconstrained internal coordinates. Bounds are the caller's business via
/// parameter transforms.
LmResult lm_fit(const LmModelFn& model, std::vector<double> initial, std::size_t n_residuals,
                const LmOptions& options = {});

/// Solves A x = b for symmetric positive definite A (p x p, row-major).
/// A is taken by value and factored in place. Returns false if not SPD.
bool cholesky_solve(std::vector<double> a, std::span<const double> b, std::span<double> x,
                    std::size_t p);

/// Inverse of an SPD matrix (row-major); empty on failure.
std::vector<double> spd_inverse(std::vector<double> a, std::size_t p);

}  // namespace resokit
