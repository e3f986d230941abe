#include "resokit/trace_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "resokit/constants.hpp"
#include "resokit/errors.hpp"

namespace resokit {

namespace {

std::string location(const std::filesystem::path& path, std::size_t line_no) {
    return path.filename().string() + ":" + std::to_string(line_no) + ": ";
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.emplace_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(std::string_view text, double& value) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end;
}

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

enum class TsFormat { ri, ma, db };

std::complex<double> decode_pair(TsFormat format, double a, double b) {
    switch (format) {
        case TsFormat::ri: return {a, b};
        case TsFormat::ma: return std::polar(a, b * consts::pi / 180.0);
        case TsFormat::db: return std::polar(std::pow(10.0, a / 20.0), b * consts::pi / 180.0);
    }
    return {a, b};
}

void append_sample(ComplexTrace& trace, double f_hz, std::complex<double> value,
                   const std::filesystem::path& path, std::size_t line_no) {
    if (!trace.freq_hz.empty() && !(f_hz > trace.freq_hz.back()))
        throw validation_error(location(path, line_no) +
                               "non-monotonic frequency (expected strictly ascending)");
    trace.freq_hz.push_back(f_hz);
    trace.s21.push_back(value);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    return in;
}

}  // namespace

ComplexTrace read_touchstone(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);

    ComplexTrace trace;
    bool have_options = false;
    double unit_scale = 0.0;
    TsFormat format = TsFormat::ma;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (const auto bang = raw.find('!'); bang != std::string::npos) raw.erase(bang);
        const std::string_view line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[')
            throw validation_error(location(path, line_no) +
                                   "Touchstone v2 keyword found; only v1.x files are supported");

        if (line.front() == '#') {
            if (have_options)
                throw validation_error(location(path, line_no) + "duplicate option line");
            bool have_unit = false, have_format = false;
            const auto tokens = split_ws(line.substr(1));
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                const std::string tok = upper(tokens[i]);
                if (tok == "HZ" || tok == "KHZ" || tok == "MHZ" || tok == "GHZ") {
                    unit_scale = tok == "HZ" ? 1.0 : tok == "KHZ" ? 1e3 : tok == "MHZ" ? 1e6 : 1e9;
                    have_unit = true;
                } else if (tok == "S") {
                    // network parameter type; only S supported
                } else if (tok == "Y" || tok == "Z" || tok == "H" || tok == "G") {
                    throw validation_error(location(path, line_no) + "unsupported parameter type " +
                                           tok + " (only S-parameters)");
                } else if (tok == "RI" || tok == "MA" || tok == "DB") {
                    format = tok == "RI" ? TsFormat::ri : tok == "MA" ? TsFormat::ma : TsFormat::db;
                    have_format = true;
                } else if (tok == "R") {
                    double ref = 0.0;
                    if (i + 1 >= tokens.size() || !parse_double(tokens[++i], ref))
                        throw validation_error(location(path, line_no) +
                                               "option line: R must be followed by a resistance");
                } else {
                    throw validation_error(location(path, line_no) +
                                           "unsupported option line token \"" + tok + "\"");
                }
            }
            if (!have_unit || !have_format)
                throw validation_error(location(path, line_no) +
                                       "malformed option line (need frequency unit and format)");
            have_options = true;
            continue;
        }

        if (!have_options)
            throw validation_error(location(path, line_no) + "data before option line");

        const auto cols = split_ws(line);
        if (cols.size() != 9)
            throw validation_error(location(path, line_no) + "expected 9 columns (two-port row), got " +
                                   std::to_string(cols.size()));
        double values[9];
        for (std::size_t i = 0; i < 9; ++i)
            if (!parse_double(cols[i], values[i]))
                throw validation_error(location(path, line_no) + "unparseable number \"" +
                                       std::string(cols[i]) + "\"");
        // Column order per two-port convention: f, S11, S21, S12, S22.
        append_sample(trace, values[0] * unit_scale, decode_pair(format, values[3], values[4]),
                      path, line_no);
    }

    if (!have_options)
        throw validation_error(path.filename().string() + ": missing option line");
    if (trace.empty()) throw validation_error(path.filename().string() + ": no samples");
    trace.validate();
    return trace;
}

void write_touchstone(const std::filesystem::path& path, const ComplexTrace& trace,
                      const std::string& comment) {
    trace.validate();
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    if (!comment.empty()) out << "! " << comment << "\n";
    out << "# Hz S RI R 50\n";
    char buf[128];
    for (std::size_t i = 0; i < trace.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g 0 0 %.17g %.17g 0 0 0 0\n", trace.freq_hz[i],
                      trace.s21[i].real(), trace.s21[i].imag());
        out << buf;
    }
    if (!out) throw io_error("write failed: " + path.string());
}

ComplexTrace read_csv_trace(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in = open_input(path);

    std::string raw;
    std::size_t line_no = 0;
    if (!std::getline(in, raw)) throw validation_error(path.filename().string() + ": empty file");
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();

    const auto header = split_csv(raw);
    auto column_of = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw validation_error(path.filename().string() + ": missing column \"" + name + "\"");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_freq = column_of(schema.freq_column);
    const std::size_t c_a = column_of(schema.a_column);
    const std::size_t c_b = column_of(schema.b_column);

    ComplexTrace trace;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim(raw).empty()) continue;
        const auto cells = split_csv(raw);
        const std::size_t needed = std::max({c_freq, c_a, c_b}) + 1;
        if (cells.size() < needed)
            throw validation_error(location(path, line_no) + "expected at least " +
                                   std::to_string(needed) + " cells, got " +
                                   std::to_string(cells.size()));
        double f = 0.0, a = 0.0, b = 0.0;
        if (!parse_double(cells[c_freq], f) || !parse_double(cells[c_a], a) ||
            !parse_double(cells[c_b], b))
            throw validation_error(location(path, line_no) + "unparseable cell");
        const std::complex<double> value =
            schema.kind == CsvSchema::Kind::ri
                ? std::complex<double>{a, b}
                : std::polar(std::pow(10.0, a / 20.0), b * consts::pi / 180.0);
        append_sample(trace, f, value, path, line_no);
    }

    if (trace.empty()) throw validation_error(path.filename().string() + ": no samples");
    trace.validate();
    return trace;
}

void write_csv_trace(const std::filesystem::path& path, const ComplexTrace& trace) {
    trace.validate();
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << "freq_hz,re,im\n";
    char buf[128];
    for (std::size_t i = 0; i < trace.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", trace.freq_hz[i],
                      trace.s21[i].real(), trace.s21[i].imag());
        out << buf;
    }
    if (!out) throw io_error("write failed: " + path.string());
}

std::filesystem::path sidecar_path_for(const std::filesystem::path& trace_path) {
    std::filesystem::path p = trace_path;
    p.replace_extension();
    p += ".meta.json";
    return p;
}

TraceMeta read_meta_sidecar(const std::filesystem::path& sidecar_path) {
    std::ifstream in = open_input(sidecar_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(sidecar_path.filename().string() + ": invalid JSON: " + e.what());
    }

    TraceMeta meta;
    try {
        meta.vna_power_dbm = j.at("vna_power_dbm").get<double>();
        meta.attenuation_db = j.at("attenuation_db").get<double>();
        if (j.contains("temperature_k")) meta.temperature_k = j["temperature_k"].get<double>();
        if (j.contains("label")) meta.label = j["label"].get<std::string>();
        if (j.contains("role")) meta.role = trace_role_from_string(j["role"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(sidecar_path.filename().string() + ": bad sidecar field: " +
                               e.what());
    }
    meta.validate();
    return meta;
}

void write_meta_sidecar(const std::filesystem::path& sidecar_path, const TraceMeta& meta) {
    meta.validate();
    nlohmann::ordered_json j;
    j["vna_power_dbm"] = meta.vna_power_dbm;
    j["attenuation_db"] = meta.attenuation_db;
    j["temperature_k"] = meta.temperature_k;
    j["label"] = meta.label;
    j["role"] = to_string(meta.role);
    std::ofstream out(sidecar_path);
    if (!out) throw io_error("cannot write " + sidecar_path.string());
    out << j.dump(2) << "\n";
    if (!out) throw io_error("write failed: " + sidecar_path.string());
}

}  // namespace resokit
