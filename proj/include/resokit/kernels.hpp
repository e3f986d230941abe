#pragma once

#include <complex>
#include <span>
#include <string>

namespace resokit::kernels {

/// Vector backends for the batch resonance kernels. "scalar" is the portable
/// reference; "avx2" is selected automatically on hosts that support it and
/// can be forced with set_backend() or the RESOKIT_BACKEND environment
/// variable (values: scalar, avx2).
enum class Backend { scalar, avx2 };

bool backend_supported(Backend backend);
Backend active_backend();
void set_backend(Backend backend);  // throws validation_error if unsupported
const char* to_string(Backend backend);
Backend backend_from_string(const std::string& text);

/// Notch resonance factor parameters: the dip shape without environment
/// (amplitude/phase/delay) terms.
struct ResonanceParams {
    double f_c_hz = 0.0;
    double q_l = 0.0;
    double q_c_mag = 0.0;
    double phi = 0.0;
};

/// out[i] = 1 - (q_l/q_c_mag) e^{i phi} / (1 + 2i q_l (f[i]/f_c - 1))
void resonance_response(std::span<const double> freq_hz, const ResonanceParams& p,
                        std::span<std::complex<double>> out);

/// Partial derivatives of the resonance factor; d_fc is per Hz.
struct ResonanceDerivs {
    std::span<std::complex<double>> d_fc;
    std::span<std::complex<double>> d_ql;
    std::span<std::complex<double>> d_qc;
    std::span<std::complex<double>> d_phi;
};

void resonance_response_jac(std::span<const double> freq_hz, const ResonanceParams& p,
                            std::span<std::complex<double>> out, const ResonanceDerivs& d);

// Per-backend entry points, exposed for equivalence tests. The avx2 variants
// throw validation_error when the host (or build) lacks AVX2.
void resonance_response_scalar(std::span<const double> freq_hz, const ResonanceParams& p,
                               std::span<std::complex<double>> out);
void resonance_response_jac_scalar(std::span<const double> freq_hz, const ResonanceParams& p,
                                   std::span<std::complex<double>> out,
                                   const ResonanceDerivs& d);
void resonance_response_avx2(std::span<const double> freq_hz, const ResonanceParams& p,
                             std::span<std::complex<double>> out);
void resonance_response_jac_avx2(std::span<const double> freq_hz, const ResonanceParams& p,
                                 std::span<std::complex<double>> out, const ResonanceDerivs& d);

}  // namespace resokit::kernels
