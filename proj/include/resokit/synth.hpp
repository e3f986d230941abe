#pragma once

#include <cstdint>
#include <vector>

#include "resokit/circlefit.hpp"
#include "resokit/scurve.hpp"
#include "resokit/types.hpp"

namespace resokit {

/// Ground-truth resonance description for the generator. q_l is derived from
/// (q_i, q_c_mag, phi) through the loss identity.
struct SynthTruth {
    double f_c_hz = 0.0;
    double q_i = 0.0;
    double q_c_mag = 0.0;
    double phi = 0.0;
    double tau_s = 0.0;
    double env_amp = 1.0;
    double env_phase = 0.0;

    double q_l() const { return q_l_from(q_i, q_c_mag, phi); }
    DcmParams dcm_params() const;
};

struct SynthGrid {
    double f_lo_hz = 0.0;
    double f_hi_hz = 0.0;
    std::size_t n_points = 0;
};

struct SynthSpec {
    SynthTruth truth;
    SynthGrid grid;
    double noise_sigma = 0.0;  // per-quadrature std of the additive noise
    std::uint64_t seed = 0;

    void validate() const;
};

/// Evaluates the notch model on the grid and adds seeded complex Gaussian
/// noise. Deterministic for a fixed seed.
ComplexTrace synth_resonance(const SynthSpec& spec);

/// Two cascaded notches under spec1's common environment (multiplicative
/// composition); both specs must share the grid. Noise comes from spec1.
ComplexTrace synth_doublet(const SynthSpec& spec1, const SynthSpec& spec2);

struct FixedPointOptions {
    double tol_rel = 1e-12;
    int max_iterations = 100;
    double damping = 0.5;
};

struct PhotonQiPoint {
    double n_mean = 0.0;
    double q_i = 0.0;
};

/// Self-consistent (<n>, Q_i) pair under the loss model and the photon-number
/// formula, by damped fixed-point iteration. q_c is the Re-convention scalar
/// coupling quality factor. Throws fit_error on non-convergence.
PhotonQiPoint solve_photon_qi(const ScurveParams& truth, const ThermalContext& ctx, double q_c,
                              double power_w, double phi = 0.0,
                              const FixedPointOptions& options = {});

struct SweepSynthOptions {
    double span_linewidths = 40.0;
    std::size_t n_points = 2001;
    double phi = 0.0;
    double tau_s = 0.0;
    double env_amp = 1.0;
    double env_phase = 0.0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    double extra_loss_db = 0.0;
    FixedPointOptions fixed_point;
};

/// One synthetic trace per applied power, each at the self-consistent Q_i.
/// The chain meta supplies attenuation and temperature defaults; power values
/// are instrument-side dBm.
std::vector<MeasuredTrace> synth_power_sweep(const ScurveParams& truth, const ThermalContext& ctx,
                                             double q_c, const std::vector<double>& powers_dbm,
                                             const TraceMeta& chain,
                                             const SweepSynthOptions& options = {});

}  // namespace resokit
