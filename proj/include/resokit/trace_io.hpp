#pragma once

#include <filesystem>
#include <string>

#include "resokit/types.hpp"

namespace resokit {

/// Reads S21 from a Touchstone v1.x two-port file. Frequencies are converted
/// to Hz per the option line unit; amplitudes to linear complex regardless of
/// the source format (RI, MA, DB). Touchstone v2 files are rejected.
ComplexTrace read_touchstone(const std::filesystem::path& path);

/// Writes a two-port file in "# Hz S RI R 50" form with S11 = S12 = S22 = 0.
void write_touchstone(const std::filesystem::path& path, const ComplexTrace& trace,
                      const std::string& comment = "");

/// Column mapping for CSV traces. Two shapes are supported:
/// (freq_hz, re, im) and (freq_hz, mag_db, phase_deg).
struct CsvSchema {
    enum class Kind { ri, db_deg };
    Kind kind = Kind::ri;
    std::string freq_column = "freq_hz";
    std::string a_column = "re";  // re, or mag_db
    std::string b_column = "im";  // im, or phase_deg

    static CsvSchema ri() { return {}; }
    static CsvSchema db_deg() { return {Kind::db_deg, "freq_hz", "mag_db", "phase_deg"}; }
};

ComplexTrace read_csv_trace(const std::filesystem::path& path,
                            const CsvSchema& schema = CsvSchema::ri());

/// RI schema, full double precision (round-trips bit-for-bit via %.17g).
void write_csv_trace(const std::filesystem::path& path, const ComplexTrace& trace);

/// "<stem>.meta.json" next to the trace file.
std::filesystem::path sidecar_path_for(const std::filesystem::path& trace_path);

TraceMeta read_meta_sidecar(const std::filesystem::path& sidecar_path);
void write_meta_sidecar(const std::filesystem::path& sidecar_path, const TraceMeta& meta);

}  // namespace resokit
