#include "resokit/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "resokit/errors.hpp"

namespace resokit {

void ComplexTrace::validate() const {
    if (freq_hz.size() != s21.size())
        throw validation_error("trace: freq and s21 lengths differ (" +
                               std::to_string(freq_hz.size()) + " vs " +
                               std::to_string(s21.size()) + ")");
    if (freq_hz.size() < 8)
        throw validation_error("trace: need at least 8 samples, got " +
                               std::to_string(freq_hz.size()));
    for (std::size_t i = 0; i < freq_hz.size(); ++i) {
        if (!std::isfinite(freq_hz[i]))
            throw validation_error("trace: non-finite frequency at sample " + std::to_string(i));
        if (i > 0 && !(freq_hz[i] > freq_hz[i - 1]))
            throw validation_error("trace: frequencies not strictly ascending at sample " +
                                   std::to_string(i));
        if (!std::isfinite(s21[i].real()) || !std::isfinite(s21[i].imag()))
            throw validation_error("trace: non-finite s21 at sample " + std::to_string(i));
    }
}

ComplexTrace subtrace(const ComplexTrace& trace, std::size_t first, std::size_t last) {
    if (first > last || last >= trace.size())
        throw validation_error("subtrace: invalid sample range");
    ComplexTrace out;
    out.freq_hz.assign(trace.freq_hz.begin() + first, trace.freq_hz.begin() + last + 1);
    out.s21.assign(trace.s21.begin() + first, trace.s21.begin() + last + 1);
    return out;
}

std::size_t nearest_index(const ComplexTrace& trace, double f_hz) {
    if (trace.empty()) throw validation_error("nearest_index: empty trace");
    auto it = std::lower_bound(trace.freq_hz.begin(), trace.freq_hz.end(), f_hz);
    if (it == trace.freq_hz.end()) return trace.size() - 1;
    if (it == trace.freq_hz.begin()) return 0;
    const std::size_t hi = static_cast<std::size_t>(it - trace.freq_hz.begin());
    return (f_hz - trace.freq_hz[hi - 1] <= trace.freq_hz[hi] - f_hz) ? hi - 1 : hi;
}

std::vector<double> magnitude_db(const ComplexTrace& trace) {
    std::vector<double> db(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double mag = std::max(std::abs(trace.s21[i]), 1e-300);
        db[i] = 20.0 * std::log10(mag);
    }
    return db;
}

const char* to_string(TraceRole role) {
    switch (role) {
        case TraceRole::cavity: return "cavity";
        case TraceRole::through: return "through";
        case TraceRole::resonator: return "resonator";
    }
    return "resonator";
}

TraceRole trace_role_from_string(const std::string& text) {
    if (text == "cavity") return TraceRole::cavity;
    if (text == "through") return TraceRole::through;
    if (text == "resonator") return TraceRole::resonator;
    throw validation_error("unknown trace role \"" + text +
                           "\" (expected cavity, through, or resonator)");
}

void TraceMeta::validate() const {
    if (!std::isfinite(vna_power_dbm))
        throw validation_error("meta: vna_power_dbm must be finite");
    if (!std::isfinite(attenuation_db) || attenuation_db < 0.0)
        throw validation_error("meta: attenuation_db must be >= 0, got " +
                               std::to_string(attenuation_db));
    if (!std::isfinite(temperature_k) || temperature_k <= 0.0)
        throw validation_error("meta: temperature_k must be > 0, got " +
                               std::to_string(temperature_k));
}

MeasuredTrace attach_metadata(ComplexTrace trace, TraceMeta meta) {
    trace.validate();
    meta.validate();
    return MeasuredTrace{std::move(trace), std::move(meta)};
}

}  // namespace resokit
