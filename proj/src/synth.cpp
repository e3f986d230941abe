#include "resokit/synth.hpp"

#include <cmath>
#include <string>

#include "resokit/constants.hpp"
#include "resokit/errors.hpp"
#include "resokit/kernels.hpp"
#include "resokit/photon.hpp"
#include "resokit/rng.hpp"

namespace resokit {

DcmParams SynthTruth::dcm_params() const {
    DcmParams p;
    p.f_c_hz = f_c_hz;
    p.q_l = q_l();
    p.q_c_mag = q_c_mag;
    p.phi = phi;
    p.tau_s = tau_s;
    p.env_amp = env_amp;
    p.env_phase = env_phase;
    return p;
}

void SynthSpec::validate() const {
    if (!(truth.f_c_hz > 0.0) || !(truth.q_i > 0.0) || !(truth.q_c_mag > 0.0))
        throw validation_error("synth: f_c, q_i, q_c_mag must be positive");
    if (!(truth.env_amp > 0.0)) throw validation_error("synth: env_amp must be positive");
    if (!(grid.f_lo_hz > 0.0) || !(grid.f_lo_hz < grid.f_hi_hz))
        throw validation_error("synth: grid must be ascending with positive frequencies");
    if (grid.n_points < 8) throw validation_error("synth: grid needs at least 8 points");
    if (!(noise_sigma >= 0.0)) throw validation_error("synth: noise_sigma must be >= 0");
}

namespace {

std::vector<double> make_grid(const SynthGrid& grid) {
    std::vector<double> freq(grid.n_points);
    const double step = (grid.f_hi_hz - grid.f_lo_hz) / static_cast<double>(grid.n_points - 1);
    for (std::size_t i = 0; i < grid.n_points; ++i)
        freq[i] = grid.f_lo_hz + static_cast<double>(i) * step;
    freq.back() = grid.f_hi_hz;
    return freq;
}

void add_noise(ComplexTrace& trace, double sigma, std::uint64_t seed) {
    if (sigma <= 0.0) return;
    Rng rng(seed);
    for (auto& v : trace.s21) v += rng.normal_complex(sigma);
}

}  // namespace

ComplexTrace synth_resonance(const SynthSpec& spec) {
    spec.validate();
    ComplexTrace trace;
    trace.freq_hz = make_grid(spec.grid);
    trace.s21.resize(trace.freq_hz.size());
    dcm_model_eval(trace.freq_hz, spec.truth.dcm_params(), trace.s21);
    add_noise(trace, spec.noise_sigma, spec.seed);
    return trace;
}

ComplexTrace synth_doublet(const SynthSpec& spec1, const SynthSpec& spec2) {
    spec1.validate();
    spec2.validate();
    if (spec1.grid.f_lo_hz != spec2.grid.f_lo_hz || spec1.grid.f_hi_hz != spec2.grid.f_hi_hz ||
        spec1.grid.n_points != spec2.grid.n_points)
        throw validation_error("synth_doublet: specs must share the frequency grid");

    ComplexTrace trace;
    trace.freq_hz = make_grid(spec1.grid);
    const std::size_t n = trace.freq_hz.size();
    trace.s21.resize(n);

    std::vector<std::complex<double>> r2(n);
    const DcmParams p1 = spec1.truth.dcm_params();
    const DcmParams p2 = spec2.truth.dcm_params();
    kernels::resonance_response(trace.freq_hz, {p1.f_c_hz, p1.q_l, p1.q_c_mag, p1.phi},
                                trace.s21);
    kernels::resonance_response(trace.freq_hz, {p2.f_c_hz, p2.q_l, p2.q_c_mag, p2.phi}, r2);

    for (std::size_t i = 0; i < n; ++i) {
        const double f = trace.freq_hz[i];
        trace.s21[i] *= r2[i] * std::polar(p1.env_amp,
                                           p1.env_phase - consts::two_pi * f * p1.tau_s);
    }
    add_noise(trace, spec1.noise_sigma, spec1.seed);
    return trace;
}

PhotonQiPoint solve_photon_qi(const ScurveParams& truth, const ThermalContext& ctx, double q_c,
                              double power_w, double phi, const FixedPointOptions& options) {
    ctx.validate();
    if (!(q_c > 0.0)) throw validation_error("solve_photon_qi: q_c must be positive");
    if (!(power_w >= 0.0)) throw validation_error("solve_photon_qi: power must be >= 0");
    if (!(truth.f_dtls > 0.0) || !(truth.n_c > 0.0) || !(truth.q_hp > 0.0) ||
        !(truth.beta >= 0.0) || truth.beta > 2.0)
        throw validation_error("solve_photon_qi: invalid loss-model truth");

    // With the Re-convention q_c, the loaded Q is 1/q_l = 1/q_i + 1/q_c for
    // any phi, so phi only matters downstream for the emitted q_c_mag.
    (void)phi;
    auto next_n = [&](double n) {
        const double q_i = 1.0 / scurve_model(n, truth, ctx);
        const double q_l = 1.0 / (1.0 / q_i + 1.0 / q_c);
        return mean_photon_number(power_w, ctx.f_c_hz, q_l, q_c);
    };

    double n = 0.0;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        const double target = next_n(n);
        if (std::abs(target - n) <= options.tol_rel * std::max(target, 1e-300)) {
            PhotonQiPoint out;
            out.n_mean = target;
            out.q_i = 1.0 / scurve_model(target, truth, ctx);
            return out;
        }
        n = n + options.damping * (target - n);
    }
    throw fit_error("solve_photon_qi: fixed point did not converge within " +
                    std::to_string(options.max_iterations) + " iterations (last n = " +
                    std::to_string(n) + ")");
}

std::vector<MeasuredTrace> synth_power_sweep(const ScurveParams& truth, const ThermalContext& ctx,
                                             double q_c, const std::vector<double>& powers_dbm,
                                             const TraceMeta& chain,
                                             const SweepSynthOptions& options) {
    if (powers_dbm.size() < 2)
        throw validation_error("synth_power_sweep: need at least 2 powers");
    chain.validate();

    std::vector<MeasuredTrace> out;
    out.reserve(powers_dbm.size());
    for (std::size_t k = 0; k < powers_dbm.size(); ++k) {
        const double power_w =
            applied_power(powers_dbm[k], chain.attenuation_db, options.extra_loss_db);
        const PhotonQiPoint fp =
            solve_photon_qi(truth, ctx, q_c, power_w, options.phi, options.fixed_point);

        SynthSpec spec;
        spec.truth.f_c_hz = ctx.f_c_hz;
        spec.truth.q_i = fp.q_i;
        spec.truth.q_c_mag = q_c * std::cos(options.phi);
        spec.truth.phi = options.phi;
        spec.truth.tau_s = options.tau_s;
        spec.truth.env_amp = options.env_amp;
        spec.truth.env_phase = options.env_phase;

        const double linewidth = ctx.f_c_hz / spec.truth.q_l();
        const double half_span = 0.5 * options.span_linewidths * linewidth;
        spec.grid = {ctx.f_c_hz - half_span, ctx.f_c_hz + half_span, options.n_points};
        spec.noise_sigma = options.noise_sigma;
        spec.seed = options.seed ^ (0x9e3779b97f4a7c15ULL * (k + 1));

        MeasuredTrace mt;
        mt.trace = synth_resonance(spec);
        mt.meta = chain;
        mt.meta.vna_power_dbm = powers_dbm[k];
        mt.meta.temperature_k = ctx.temperature_k;
        mt.meta.role = TraceRole::resonator;
        if (mt.meta.label.empty()) mt.meta.label = "synth";
        out.push_back(std::move(mt));
    }
    return out;
}

}  // namespace resokit
