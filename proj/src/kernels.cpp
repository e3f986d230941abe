#include "resokit/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>

#include "resokit/errors.hpp"

namespace resokit::kernels {

namespace {

bool host_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

Backend resolve_initial_backend() {
    if (const char* env = std::getenv("RESOKIT_BACKEND")) {
        const Backend requested = backend_from_string(env);
        if (backend_supported(requested)) return requested;
        return Backend::scalar;
    }
    return host_has_avx2() ? Backend::avx2 : Backend::scalar;
}

Backend& backend_slot() {
    static Backend backend = resolve_initial_backend();
    return backend;
}

// Shared scalar inner step so the scalar path and the vector tail loop are the
// same code (equivalence tests rely on identical remainder handling).
struct ResonanceScalars {
    double inv_fc, two_ql, amp, cos_phi, sin_phi, inv_qc, ql_over_qc2, dfc_scale;

    explicit ResonanceScalars(const ResonanceParams& p) {
        inv_fc = 1.0 / p.f_c_hz;
        two_ql = 2.0 * p.q_l;
        amp = p.q_l / p.q_c_mag;
        cos_phi = std::cos(p.phi);
        sin_phi = std::sin(p.phi);
        inv_qc = 1.0 / p.q_c_mag;
        ql_over_qc2 = p.q_l / (p.q_c_mag * p.q_c_mag);
        dfc_scale = 2.0 * amp * p.q_l * inv_fc * inv_fc;
    }
};

inline std::complex<double> eval_point(const ResonanceScalars& k, double f) {
    const double t = k.two_ql * (f * k.inv_fc - 1.0);
    const double invden = 1.0 / (1.0 + t * t);
    const double invD_re = invden;
    const double invD_im = -t * invden;
    const double w_re = k.amp * (k.cos_phi * invD_re - k.sin_phi * invD_im);
    const double w_im = k.amp * (k.cos_phi * invD_im + k.sin_phi * invD_re);
    return {1.0 - w_re, -w_im};
}

inline void eval_point_jac(const ResonanceScalars& k, double f, std::complex<double>& out,
                           std::complex<double>& d_fc, std::complex<double>& d_ql,
                           std::complex<double>& d_qc, std::complex<double>& d_phi) {
    const double t = k.two_ql * (f * k.inv_fc - 1.0);
    const double invden = 1.0 / (1.0 + t * t);
    const double invD_re = invden;
    const double invD_im = -t * invden;

    const double w_re = k.amp * (k.cos_phi * invD_re - k.sin_phi * invD_im);
    const double w_im = k.amp * (k.cos_phi * invD_im + k.sin_phi * invD_re);
    out = {1.0 - w_re, -w_im};

    // invD^2 and e^{i phi} invD^2, shared by the q_l and f_c columns.
    const double invD2_re = invD_re * invD_re - invD_im * invD_im;
    const double invD2_im = 2.0 * invD_re * invD_im;
    const double eid2_re = k.cos_phi * invD2_re - k.sin_phi * invD2_im;
    const double eid2_im = k.cos_phi * invD2_im + k.sin_phi * invD2_re;

    d_ql = {-k.inv_qc * eid2_re, -k.inv_qc * eid2_im};
    d_qc = {k.ql_over_qc2 * (k.cos_phi * invD_re - k.sin_phi * invD_im),
            k.ql_over_qc2 * (k.cos_phi * invD_im + k.sin_phi * invD_re)};
    d_phi = {w_im, -w_re};
    const double kf = k.dfc_scale * f;
    d_fc = {kf * eid2_im, -kf * eid2_re};  // -i * kf * e^{i phi} invD^2
}

void check_spans(std::size_t n, const ResonanceParams& p, std::size_t out_n) {
    if (out_n != n) throw validation_error("kernel: output span length mismatch");
    if (!(p.f_c_hz > 0.0) || !(p.q_l > 0.0) || !(p.q_c_mag > 0.0))
        throw validation_error("kernel: f_c, q_l, q_c_mag must be positive");
}

}  // namespace

bool backend_supported(Backend backend) {
    switch (backend) {
        case Backend::scalar: return true;
        case Backend::avx2:
#ifdef RESOKIT_HAVE_AVX2_TU
            return host_has_avx2();
#else
            return false;
#endif
    }
    return false;
}

Backend active_backend() { return backend_slot(); }

void set_backend(Backend backend) {
    if (!backend_supported(backend))
        throw validation_error(std::string("kernel backend not supported on this host: ") +
                               to_string(backend));
    backend_slot() = backend;
}

const char* to_string(Backend backend) {
    switch (backend) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "scalar";
}

Backend backend_from_string(const std::string& text) {
    if (text == "scalar") return Backend::scalar;
    if (text == "avx2") return Backend::avx2;
    if (text == "auto") return host_has_avx2() ? Backend::avx2 : Backend::scalar;
    throw validation_error("unknown kernel backend \"" + text +
                           "\" (expected auto, scalar, or avx2)");
}

void resonance_response_scalar(std::span<const double> freq_hz, const ResonanceParams& p,
                               std::span<std::complex<double>> out) {
    check_spans(freq_hz.size(), p, out.size());
    const ResonanceScalars k(p);
    for (std::size_t i = 0; i < freq_hz.size(); ++i) out[i] = eval_point(k, freq_hz[i]);
}

void resonance_response_jac_scalar(std::span<const double> freq_hz, const ResonanceParams& p,
                                   std::span<std::complex<double>> out,
                                   const ResonanceDerivs& d) {
    check_spans(freq_hz.size(), p, out.size());
    const std::size_t n = freq_hz.size();
    if (d.d_fc.size() != n || d.d_ql.size() != n || d.d_qc.size() != n || d.d_phi.size() != n)
        throw validation_error("kernel: derivative span length mismatch");
    const ResonanceScalars k(p);
    for (std::size_t i = 0; i < n; ++i)
        eval_point_jac(k, freq_hz[i], out[i], d.d_fc[i], d.d_ql[i], d.d_qc[i], d.d_phi[i]);
}

#ifndef RESOKIT_HAVE_AVX2_TU
void resonance_response_avx2(std::span<const double>, const ResonanceParams&,
                             std::span<std::complex<double>>) {
    throw validation_error("avx2 kernels not built on this target");
}
void resonance_response_jac_avx2(std::span<const double>, const ResonanceParams&,
                                 std::span<std::complex<double>>, const ResonanceDerivs&) {
    throw validation_error("avx2 kernels not built on this target");
}
#endif

void resonance_response(std::span<const double> freq_hz, const ResonanceParams& p,
                        std::span<std::complex<double>> out) {
    if (active_backend() == Backend::avx2)
        resonance_response_avx2(freq_hz, p, out);
    else
        resonance_response_scalar(freq_hz, p, out);
}

void resonance_response_jac(std::span<const double> freq_hz, const ResonanceParams& p,
                            std::span<std::complex<double>> out, const ResonanceDerivs& d) {
    if (active_backend() == Backend::avx2)
        resonance_response_jac_avx2(freq_hz, p, out, d);
    else
        resonance_response_jac_scalar(freq_hz, p, out, d);
}

}  // namespace resokit::kernels
