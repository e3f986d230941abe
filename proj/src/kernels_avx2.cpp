// AVX2 variants of the batch resonance kernels. This translation unit is the
// only one compiled with -mavx2; callers reach it through the dispatch in
// kernels.cpp. The remainder of each batch routes through the scalar kernel
// so both paths share tail handling.

#include <immintrin.h>

#include <cmath>

#include "resokit/errors.hpp"
#include "resokit/kernels.hpp"

namespace resokit::kernels {

namespace {

struct CVec {
    __m256d re, im;
};

inline CVec cmul(const CVec& a, const CVec& b) {
    return {_mm256_fmsub_pd(a.re, b.re, _mm256_mul_pd(a.im, b.im)),
            _mm256_fmadd_pd(a.re, b.im, _mm256_mul_pd(a.im, b.re))};
}

inline CVec cscale(__m256d s, const CVec& a) {
    return {_mm256_mul_pd(s, a.re), _mm256_mul_pd(s, a.im)};
}

// Store four complex values from split re/im registers as interleaved pairs.
inline void store_complex4(std::complex<double>* dst, const CVec& v) {
    const __m256d lo = _mm256_unpacklo_pd(v.re, v.im);  // re0 im0 re2 im2
    const __m256d hi = _mm256_unpackhi_pd(v.re, v.im);  // re1 im1 re3 im3
    double* p = reinterpret_cast<double*>(dst);
    _mm256_storeu_pd(p, _mm256_permute2f128_pd(lo, hi, 0x20));
    _mm256_storeu_pd(p + 4, _mm256_permute2f128_pd(lo, hi, 0x31));
}

struct Scalars {
    __m256d inv_fc, two_ql, amp, cphi, sphi, neg_inv_qc, ql_over_qc2, dfc_scale, one;

    explicit Scalars(const ResonanceParams& p) {
        inv_fc = _mm256_set1_pd(1.0 / p.f_c_hz);
        two_ql = _mm256_set1_pd(2.0 * p.q_l);
        amp = _mm256_set1_pd(p.q_l / p.q_c_mag);
        cphi = _mm256_set1_pd(std::cos(p.phi));
        sphi = _mm256_set1_pd(std::sin(p.phi));
        neg_inv_qc = _mm256_set1_pd(-1.0 / p.q_c_mag);
        ql_over_qc2 = _mm256_set1_pd(p.q_l / (p.q_c_mag * p.q_c_mag));
        dfc_scale = _mm256_set1_pd(2.0 * (p.q_l / p.q_c_mag) * p.q_l / (p.f_c_hz * p.f_c_hz));
        one = _mm256_set1_pd(1.0);
    }
};

// 1/D for D = 1 + i t, t = 2 q_l (f/f_c - 1).
inline CVec inv_denominator(const Scalars& k, __m256d f) {
    const __m256d t = _mm256_mul_pd(k.two_ql, _mm256_fmsub_pd(f, k.inv_fc, k.one));
    const __m256d invden = _mm256_div_pd(k.one, _mm256_fmadd_pd(t, t, k.one));
    return {invden, _mm256_mul_pd(_mm256_sub_pd(_mm256_setzero_pd(), t), invden)};
}

inline CVec w_term(const Scalars& k, const CVec& invD) {
    const CVec eiphi{k.cphi, k.sphi};
    return cscale(k.amp, cmul(eiphi, invD));
}

void check(std::size_t n, const ResonanceParams& p, std::size_t out_n) {
    if (out_n != n) throw validation_error("kernel: output span length mismatch");
    if (!(p.f_c_hz > 0.0) || !(p.q_l > 0.0) || !(p.q_c_mag > 0.0))
        throw validation_error("kernel: f_c, q_l, q_c_mag must be positive");
}

}  // namespace

void resonance_response_avx2(std::span<const double> freq_hz, const ResonanceParams& p,
                             std::span<std::complex<double>> out) {
    check(freq_hz.size(), p, out.size());
    const Scalars k(p);
    const std::size_t n4 = freq_hz.size() / 4 * 4;
    for (std::size_t i = 0; i < n4; i += 4) {
        const __m256d f = _mm256_loadu_pd(freq_hz.data() + i);
        const CVec w = w_term(k, inv_denominator(k, f));
        store_complex4(&out[i], {_mm256_sub_pd(k.one, w.re),
                                 _mm256_sub_pd(_mm256_setzero_pd(), w.im)});
    }
    if (n4 < freq_hz.size())
        resonance_response_scalar(freq_hz.subspan(n4), p, out.subspan(n4));
}

void resonance_response_jac_avx2(std::span<const double> freq_hz, const ResonanceParams& p,
                                 std::span<std::complex<double>> out,
                                 const ResonanceDerivs& d) {
    check(freq_hz.size(), p, out.size());
    const std::size_t n = freq_hz.size();
    if (d.d_fc.size() != n || d.d_ql.size() != n || d.d_qc.size() != n || d.d_phi.size() != n)
        throw validation_error("kernel: derivative span length mismatch");

    const Scalars k(p);
    const CVec eiphi{k.cphi, k.sphi};
    const std::size_t n4 = n / 4 * 4;
    for (std::size_t i = 0; i < n4; i += 4) {
        const __m256d f = _mm256_loadu_pd(freq_hz.data() + i);
        const CVec invD = inv_denominator(k, f);
        const CVec w = w_term(k, invD);
        store_complex4(&out[i], {_mm256_sub_pd(k.one, w.re),
                                 _mm256_sub_pd(_mm256_setzero_pd(), w.im)});

        const CVec invD2 = cmul(invD, invD);
        const CVec eid2 = cmul(eiphi, invD2);
        store_complex4(&d.d_ql[i], cscale(k.neg_inv_qc, eid2));
        store_complex4(&d.d_qc[i], cscale(k.ql_over_qc2, cmul(eiphi, invD)));
        store_complex4(&d.d_phi[i], {w.im, _mm256_sub_pd(_mm256_setzero_pd(), w.re)});
        const __m256d kf = _mm256_mul_pd(k.dfc_scale, f);
        store_complex4(&d.d_fc[i], {_mm256_mul_pd(kf, eid2.im),
                                    _mm256_sub_pd(_mm256_setzero_pd(),
                                                  _mm256_mul_pd(kf, eid2.re))});
    }
    if (n4 < n) {
        const ResonanceDerivs tail{d.d_fc.subspan(n4), d.d_ql.subspan(n4), d.d_qc.subspan(n4),
                                   d.d_phi.subspan(n4)};
        resonance_response_jac_scalar(freq_hz.subspan(n4), p, out.subspan(n4), tail);
    }
}

}  // namespace resokit::kernels
