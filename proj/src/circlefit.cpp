#include "resokit/circlefit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>

#include "resokit/constants.hpp"
#include "resokit/errors.hpp"
#include "resokit/fit_core.hpp"
#include "resokit/kernels.hpp"

namespace resokit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap_pi(double angle) { return std::remainder(angle, consts::two_pi); }

double median_abs(std::vector<double> values) {
    for (double& v : values) v = std::abs(v);
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    return values[mid];
}

std::size_t argmin_mag(const ComplexTrace& trace) {
    std::size_t best = 0;
    double best_mag = std::norm(trace.s21[0]);
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const double m = std::norm(trace.s21[i]);
        if (m < best_mag) {
            best_mag = m;
            best = i;
        }
    }
    return best;
}

}  // namespace

std::complex<double> dcm_model(double f_hz, const DcmParams& p) {
    const std::complex<double> denom(1.0, 2.0 * p.q_l * (f_hz / p.f_c_hz - 1.0));
    const std::complex<double> resonance =
        1.0 - (p.q_l / p.q_c_mag) * std::polar(1.0, p.phi) / denom;
    return std::polar(p.env_amp, p.env_phase - consts::two_pi * f_hz * p.tau_s) * resonance;
}

void dcm_model_eval(std::span<const double> freq_hz, const DcmParams& p,
                    std::span<std::complex<double>> out) {
    kernels::ResonanceParams rp{p.f_c_hz, p.q_l, p.q_c_mag, p.phi};
    kernels::resonance_response(freq_hz, rp, out);
    for (std::size_t i = 0; i < freq_hz.size(); ++i)
        out[i] *= std::polar(p.env_amp, p.env_phase - consts::two_pi * freq_hz[i] * p.tau_s);
}

double q_l_from(double q_i, double q_c_mag, double phi) {
    return 1.0 / (1.0 / q_i + std::cos(phi) / q_c_mag);
}

double q_i_from(double q_l, double q_c_mag, double phi) {
    const double inv = 1.0 / q_l - std::cos(phi) / q_c_mag;
    if (!(inv > 0.0))
        throw fit_error("q_i invariant violated: 1/q_l - cos(phi)/q_c_mag = " +
                        std::to_string(inv) + " is not positive");
    return 1.0 / inv;
}

Circle algebraic_circle_fit(std::span<const std::complex<double>> points) {
    const std::size_t n = points.size();
    if (n < 5) throw validation_error("circle fit: need at least 5 points");

    double mx = 0.0, my = 0.0;
    for (const auto& z : points) {
        mx += z.real();
        my += z.imag();
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double mxx = 0, myy = 0, mxy = 0, mxz = 0, myz = 0, mzz = 0;
    for (const auto& zc : points) {
        const double u = zc.real() - mx;
        const double v = zc.imag() - my;
        const double z = u * u + v * v;
        mxx += u * u;
        myy += v * v;
        mxy += u * v;
        mxz += u * z;
        myz += v * z;
        mzz += z * z;
    }
    const double dn = static_cast<double>(n);
    mxx /= dn;
    myy /= dn;
    mxy /= dn;
    mxz /= dn;
    myz /= dn;
    mzz /= dn;

    // Collinear input: the 2x2 scatter matrix loses rank.
    const double tr = mxx + myy;
    const double det2 = mxx * myy - mxy * mxy;
    const double lam_min = 0.5 * (tr - std::sqrt(std::max(tr * tr - 4.0 * det2, 0.0)));
    if (!(tr > 0.0) || lam_min <= 1e-12 * tr)
        throw fit_error("circle fit: degenerate (collinear or coincident) points");

    const double mz = mxx + myy;
    const double cov_xy = mxx * myy - mxy * mxy;
    const double var_z = mzz - mz * mz;
    const double a3 = 4.0 * mz;
    const double a2 = -3.0 * mz * mz - mzz;
    const double a1 = var_z * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz;
    const double a0 =
        mxz * mxz * myy + myz * myz * mxx - 2.0 * mxz * myz * mxy - var_z * cov_xy;
    const double a22 = a2 + a2;
    const double a33 = a3 + a3 + a3;

    // Newton from 0 toward the smallest positive root of the Taubin polynomial.
    double x = 0.0, y = a0;
    for (int iter = 0; iter < 99; ++iter) {
        const double dy = a1 + x * (a22 + a33 * x);
        const double x_new = x - y / dy;
        if (!std::isfinite(x_new) || x_new == x) break;
        const double y_new = a0 + x_new * (a1 + x_new * (a2 + x_new * a3));
        if (std::abs(y_new) >= std::abs(y)) break;
        x = x_new;
        y = y_new;
    }

    const double det = x * x - x * mz + cov_xy;
    if (det == 0.0 || !std::isfinite(det))
        throw fit_error("circle fit: singular system (degenerate geometry)");
    const double xc = (mxz * (myy - x) - myz * mxy) / det / 2.0;
    const double yc = (myz * (mxx - x) - mxz * mxy) / det / 2.0;

    Circle circle;
    circle.center = {xc + mx, yc + my};
    circle.radius = std::sqrt(xc * xc + yc * yc + mz);
    if (!(circle.radius > 0.0) || !std::isfinite(circle.radius))
        throw fit_error("circle fit: non-positive radius");

    double ss = 0.0;
    for (const auto& z : points) {
        const double d = std::abs(z - circle.center) - circle.radius;
        ss += d * d;
    }
    circle.rms_residual = std::sqrt(ss / dn);
    return circle;
}

double estimate_linewidth(const ComplexTrace& window) {
    const std::size_t n = window.size();
    const std::size_t dip = argmin_mag(window);
    const double p_min = std::norm(window.s21[dip]);

    std::vector<double> wing_power;
    for (std::size_t i : wing_indices(n)) wing_power.push_back(std::norm(window.s21[i]));
    std::nth_element(wing_power.begin(), wing_power.begin() + wing_power.size() / 2,
                     wing_power.end());
    const double p_base = wing_power[wing_power.size() / 2];

    const double fallback = window.span_hz() / 10.0;
    if (!(p_base > p_min)) return fallback;
    const double p_half = 0.5 * (p_base + p_min);

    double f_left = window.f_min();
    for (std::size_t i = dip; i-- > 0;) {
        if (std::norm(window.s21[i]) >= p_half) {
            const double p0 = std::norm(window.s21[i]);
            const double p1 = std::norm(window.s21[i + 1]);
            const double t = (p_half - p1) / (p0 - p1);
            f_left = window.freq_hz[i + 1] + t * (window.freq_hz[i] - window.freq_hz[i + 1]);
            break;
        }
    }
    double f_right = window.f_max();
    for (std::size_t i = dip + 1; i < n; ++i) {
        if (std::norm(window.s21[i]) >= p_half) {
            const double p0 = std::norm(window.s21[i]);
            const double p1 = std::norm(window.s21[i - 1]);
            const double t = (p_half - p1) / (p0 - p1);
            f_right = window.freq_hz[i - 1] + t * (window.freq_hz[i] - window.freq_hz[i - 1]);
            break;
        }
    }
    const double grid = window.span_hz() / static_cast<double>(n - 1);
    return std::max(f_right - f_left, grid);
}

PhaseFit phase_fit(const ComplexTrace& window, const Circle& circle) {
    const double f_c0 = window.freq_hz[argmin_mag(window)];
    const double q_l0 = f_c0 / estimate_linewidth(window);
    return phase_fit(window, circle, f_c0, q_l0);
}

PhaseFit phase_fit(const ComplexTrace& window, const Circle& circle, double f_c_init_hz,
                   double q_l_init) {
    window.validate();
    if (!(f_c_init_hz > 0.0) || !(q_l_init > 0.0))
        throw validation_error("phase fit: initial f_c and q_l must be positive");

    const std::size_t n = window.size();
    std::vector<double> theta(n);
    for (std::size_t i = 0; i < n; ++i) theta[i] = std::arg(window.s21[i] - circle.center);
    theta = unwrap_phase(theta);

    const auto [tmin, tmax] = std::minmax_element(theta.begin(), theta.end());
    if (*tmax - *tmin < 1e-9)
        throw fit_error("phase fit: constant phase input, no resonance swing to fit");

    const double f_ref = 0.5 * (window.f_min() + window.f_max());
    const double span_ref = window.span_hz();
    const std::vector<double>& freq = window.freq_hz;

    auto residual_fn = [&, n](std::span<const double> x, std::span<double> r, double* jac) {
        const double f_c = f_ref + x[0] * span_ref;
        const double q_l = std::exp(x[1]);
        const double theta0 = x[2];
        if (!(f_c > 0.0)) {
            std::fill(r.begin(), r.end(), 1e15);
            if (jac) std::fill(jac, jac + 3 * n, 0.0);
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double g = 2.0 * q_l * (1.0 - freq[i] / f_c);
            const double denom = 1.0 + g * g;
            r[i] = theta0 + 2.0 * std::atan(g) - theta[i];
            if (jac) {
                jac[i * 3 + 0] = 4.0 * q_l * freq[i] / (f_c * f_c * denom) * span_ref;
                jac[i * 3 + 1] = 2.0 * g / denom;
                jac[i * 3 + 2] = 1.0;
            }
        }
    };

    // theta0 init: mean offset against the model at the initial (f_c, q_l).
    double theta0_init = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        theta0_init += theta[i] - 2.0 * std::atan(2.0 * q_l_init * (1.0 - freq[i] / f_c_init_hz));
    theta0_init /= static_cast<double>(n);

    std::vector<double> x0 = {(f_c_init_hz - f_ref) / span_ref, std::log(q_l_init), theta0_init};
    const LmResult lm = lm_fit(residual_fn, std::move(x0), n);
    const double rms = std::sqrt(lm.chi2 / static_cast<double>(n));
    if (!lm.converged)
        throw fit_error("phase fit did not converge after " + std::to_string(lm.iterations) +
                        " iterations (rms " + std::to_string(rms) + " rad)");

    PhaseFit out;
    out.f_c_hz = f_ref + lm.params[0] * span_ref;
    out.q_l = std::exp(lm.params[1]);
    out.theta0 = lm.params[2];
    out.rms_residual = rms;
    out.iterations = lm.iterations;
    return out;
}

double DcmResult::q_c_real() const { return q_c_mag / std::cos(phi); }

namespace {

struct RefineContext {
    std::vector<double> freq;
    std::vector<std::complex<double>> data;
    double f_ref = 0.0;
    double lw_ref = 0.0;
    double tau_scale = 0.0;
    // scratch
    std::vector<std::complex<double>> resp, d_fc, d_ql, d_qc, d_phi;
};

void refine_residuals(RefineContext& ctx, std::span<const double> x, std::span<double> r,
                      double* jac) {
    const std::size_t n = ctx.freq.size();
    const double f_c = ctx.f_ref + x[0] * ctx.lw_ref;
    const double q_l = std::exp(x[1]);
    const double q_c = std::exp(x[2]);
    const double phi = std::atan(x[3]);
    const double tau = x[4] * ctx.tau_scale;
    const double amp = std::exp(x[5]);
    const double theta = x[6];

    if (!(f_c > 0.0) || !std::isfinite(q_l) || !std::isfinite(q_c) || !std::isfinite(amp)) {
        std::fill(r.begin(), r.end(), 1e15);
        if (jac) std::fill(jac, jac + 7 * 2 * n, 0.0);
        return;
    }

    const kernels::ResonanceParams rp{f_c, q_l, q_c, phi};
    if (jac) {
        kernels::ResonanceDerivs derivs{ctx.d_fc, ctx.d_ql, ctx.d_qc, ctx.d_phi};
        kernels::resonance_response_jac(ctx.freq, rp, ctx.resp, derivs);
    } else {
        kernels::resonance_response(ctx.freq, rp, ctx.resp);
    }

    const double dphi_dx = 1.0 / (1.0 + x[3] * x[3]);
    for (std::size_t i = 0; i < n; ++i) {
        const double df = ctx.freq[i] - ctx.f_ref;
        const std::complex<double> rot = std::polar(amp, theta - consts::two_pi * df * tau);
        const std::complex<double> m = rot * ctx.resp[i];
        const std::complex<double> diff = m - ctx.data[i];
        r[2 * i] = diff.real();
        r[2 * i + 1] = diff.imag();
        if (!jac) continue;

        const std::complex<double> c0 = rot * ctx.d_fc[i] * ctx.lw_ref;
        const std::complex<double> c1 = rot * ctx.d_ql[i] * q_l;
        const std::complex<double> c2 = rot * ctx.d_qc[i] * q_c;
        const std::complex<double> c3 = rot * ctx.d_phi[i] * dphi_dx;
        const double w = consts::two_pi * df * ctx.tau_scale;
        const std::complex<double> c4(w * m.imag(), -w * m.real());
        const std::complex<double> c5 = m;
        const std::complex<double> c6(-m.imag(), m.real());

        double* row_re = jac + (2 * i) * 7;
        double* row_im = jac + (2 * i + 1) * 7;
        const std::complex<double> cols[7] = {c0, c1, c2, c3, c4, c5, c6};
        for (int j = 0; j < 7; ++j) {
            row_re[j] = cols[j].real();
            row_im[j] = cols[j].imag();
        }
    }
}

}  // namespace

DcmResult dcm_fit(const ResonanceWindow& window) {
    const ComplexTrace& data = window.trace;
    data.validate();
    if (data.size() < 25)
        throw validation_error("dcm_fit: insufficient points (need >= 25 samples per window)");

    // Stage 1: geometry pipeline for initial values.
    const DelayRemoval delay = remove_cable_delay(data);
    const std::complex<double> baseline = estimate_baseline(delay.trace);
    if (std::abs(baseline) < 1e-30)
        throw validation_error("dcm_fit: zero wing amplitude, cannot normalize");

    ComplexTrace norm;
    norm.freq_hz = delay.trace.freq_hz;
    norm.s21.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) norm.s21[i] = delay.trace.s21[i] / baseline;

    const Circle circle = algebraic_circle_fit(norm.s21);

    const double f_dip = norm.freq_hz[argmin_mag(norm)];
    const double lw_guess =
        window.linewidth_est_hz > 0.0 ? window.linewidth_est_hz : estimate_linewidth(norm);
    const PhaseFit pf = phase_fit(norm, circle, f_dip, std::max(f_dip / lw_guess, 10.0));

    const double q_l0 = pf.q_l;
    const double q_c0 = q_l0 / (2.0 * circle.radius);
    double phi0 = std::arg(1.0 - circle.center);
    phi0 = std::clamp(phi0, -1.3, 1.3);

    // Stage 2: joint refinement of all seven parameters on the raw window.
    const std::size_t n = data.size();
    auto ctx = std::make_shared<RefineContext>();
    ctx->freq = data.freq_hz;
    ctx->data = data.s21;
    ctx->f_ref = 0.5 * (data.f_min() + data.f_max());
    ctx->lw_ref = pf.f_c_hz / q_l0;
    ctx->tau_scale = 1.0 / (consts::two_pi * data.span_hz());
    ctx->resp.resize(n);
    ctx->d_fc.resize(n);
    ctx->d_ql.resize(n);
    ctx->d_qc.resize(n);
    ctx->d_phi.resize(n);

    const double theta_tilde0 =
        wrap_pi(std::arg(baseline) - consts::two_pi * ctx->f_ref * delay.tau_s);
    std::vector<double> x0 = {(pf.f_c_hz - ctx->f_ref) / ctx->lw_ref,
                              std::log(q_l0),
                              std::log(q_c0),
                              std::tan(phi0),
                              delay.tau_s / ctx->tau_scale,
                              std::log(std::abs(baseline)),
                              theta_tilde0};

    auto model = [ctx](std::span<const double> x, std::span<double> r, double* jac) {
        refine_residuals(*ctx, x, r, jac);
    };
    const LmResult lm = lm_fit(model, std::move(x0), 2 * n);
    const double rms = std::sqrt(lm.chi2 / static_cast<double>(n));
    if (!lm.converged)
        throw fit_error("dcm_fit did not converge after " + std::to_string(lm.iterations) +
                        " iterations (rms residual " + std::to_string(rms) + ")");

    DcmResult out;
    out.f_c_hz = ctx->f_ref + lm.params[0] * ctx->lw_ref;
    out.q_l = std::exp(lm.params[1]);
    out.q_c_mag = std::exp(lm.params[2]);
    out.phi = std::atan(lm.params[3]);
    out.tau_s = lm.params[4] * ctx->tau_scale;
    out.env_amp = std::exp(lm.params[5]);
    out.env_phase = wrap_pi(lm.params[6] + consts::two_pi * ctx->f_ref * out.tau_s);
    out.q_i = q_i_from(out.q_l, out.q_c_mag, out.phi);  // throws if violated at optimum
    out.rms_residual = rms;
    out.iterations = lm.iterations;

    // Per-quadrature noise from wing residual scatter (MAD estimator).
    std::vector<double> resid(2 * n);
    refine_residuals(*ctx, lm.params, resid, nullptr);
    std::vector<double> wing_comps;
    for (std::size_t i : wing_indices(n)) {
        wing_comps.push_back(resid[2 * i]);
        wing_comps.push_back(resid[2 * i + 1]);
    }
    out.noise_sigma = 1.4826 * median_abs(std::move(wing_comps));

    // Covariance in external coordinates, residual-variance scaled.
    const std::vector<double> cov_int = spd_inverse(lm.jtj, 7);
    if (cov_int.empty()) {
        out.ci95 = {kInf, kInf, kInf, kInf, kInf, kInf, kInf, kInf};
        return out;
    }
    const double dphi_dx = 1.0 / (1.0 + lm.params[3] * lm.params[3]);
    const double scale[7] = {ctx->lw_ref, out.q_l,         out.q_c_mag, dphi_dx,
                             ctx->tau_scale, out.env_amp, 1.0};
    const double s2 = out.noise_sigma * out.noise_sigma;
    double cov[7][7];
    for (int a = 0; a < 7; ++a)
        for (int b = 0; b < 7; ++b) cov[a][b] = s2 * scale[a] * scale[b] * cov_int[a * 7 + b];

    auto half_width = [&](int idx) { return 1.96 * std::sqrt(std::max(cov[idx][idx], 0.0)); };
    out.ci95.f_c_hz = half_width(0);
    out.ci95.q_l = half_width(1);
    out.ci95.q_c_mag = half_width(2);
    out.ci95.phi = half_width(3);
    out.ci95.tau_s = half_width(4);
    out.ci95.env_amp = half_width(5);

    // 1/q_i = 1/q_l - cos(phi)/q_c_mag, propagated through the fit covariance.
    const double g[3] = {-1.0 / (out.q_l * out.q_l), std::cos(out.phi) / (out.q_c_mag * out.q_c_mag),
                         std::sin(out.phi) / out.q_c_mag};
    double var_inv_qi = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) var_inv_qi += g[a] * g[b] * cov[1 + a][1 + b];
    out.ci95.q_i = 1.96 * out.q_i * out.q_i * std::sqrt(std::max(var_inv_qi, 0.0));

    const double wref = consts::two_pi * ctx->f_ref;
    const double var_env_phase = cov[6][6] + wref * wref * cov[4][4] + 2.0 * wref * cov[6][4];
    out.ci95.env_phase = 1.96 * std::sqrt(std::max(var_env_phase, 0.0));
    return out;
}

}  // namespace resokit
