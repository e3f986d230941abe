#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace resokit {

/// A complex S21 trace on a strictly ascending frequency grid.
/// Amplitudes are linear (not dB); dB exists only at I/O boundaries.
struct ComplexTrace {
    std::vector<double> freq_hz;
    std::vector<std::complex<double>> s21;

    std::size_t size() const { return freq_hz.size(); }
    bool empty() const { return freq_hz.empty(); }
    double f_min() const { return freq_hz.front(); }
    double f_max() const { return freq_hz.back(); }
    double span_hz() const { return f_max() - f_min(); }

    /// Throws validation_error unless: lengths equal, >= 8 samples,
    /// frequencies strictly ascending, all values finite.
    void validate() const;
};

/// Copy of the sample range [first, last] (inclusive).
ComplexTrace subtrace(const ComplexTrace& trace, std::size_t first, std::size_t last);

/// Index of the sample nearest to f_hz.
std::size_t nearest_index(const ComplexTrace& trace, double f_hz);

/// 20*log10|s21| per sample; magnitudes below 1e-300 are clamped first.
std::vector<double> magnitude_db(const ComplexTrace& trace);

enum class TraceRole { cavity, through, resonator };

const char* to_string(TraceRole role);
TraceRole trace_role_from_string(const std::string& text);

/// Measurement conditions attached to a trace.
struct TraceMeta {
    double vna_power_dbm = 0.0;
    double attenuation_db = 0.0;  // total line attenuation, >= 0
    double temperature_k = 0.015;
    std::string label;
    TraceRole role = TraceRole::resonator;

    void validate() const;
};

struct MeasuredTrace {
    ComplexTrace trace;
    TraceMeta meta;
};

/// Bundles trace and metadata after re-validating both.
MeasuredTrace attach_metadata(ComplexTrace trace, TraceMeta meta);

}  // namespace resokit
