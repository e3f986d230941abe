#include "resokit/photon.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "resokit/constants.hpp"
#include "resokit/errors.hpp"

namespace resokit {

void PowerPoint::validate() const {
    auto positive = [](double v, const char* name) {
        if (!std::isfinite(v) || !(v > 0.0))
            throw validation_error(std::string("power point: ") + name +
                                   " must be positive and finite, got " + std::to_string(v));
    };
    positive(n_mean, "n_mean");
    positive(inv_qi, "inv_qi");
    positive(sigma_inv_qi, "sigma_inv_qi");
    positive(applied_power_w, "applied_power_w");
}

double applied_power(double vna_power_dbm, double attenuation_db, double extra_loss_db) {
    if (!(attenuation_db >= 0.0))
        throw validation_error("applied_power: attenuation_db must be >= 0");
    if (!(extra_loss_db >= 0.0))
        throw validation_error("applied_power: extra_loss_db must be >= 0");
    return 1e-3 * std::pow(10.0, (vna_power_dbm - attenuation_db - extra_loss_db) / 10.0);
}

double mean_photon_number(double power_w, double f_c_hz, double q_l, double q_c) {
    if (!(power_w >= 0.0)) throw validation_error("mean_photon_number: power_w must be >= 0");
    if (!(f_c_hz > 0.0) || !(q_l > 0.0) || !(q_c > 0.0))
        throw validation_error("mean_photon_number: f_c, q_l, q_c must be positive");
    const double omega = consts::two_pi * f_c_hz;
    return 2.0 * power_w * q_l * q_l / (consts::hbar_js * omega * omega * q_c);
}

std::vector<PowerPoint> build_power_sweep(
    const std::vector<std::pair<DcmResult, TraceMeta>>& fits, double extra_loss_db) {
    std::vector<PowerPoint> points;
    if (fits.empty()) return points;

    const DcmResult& ref = fits.front().first;
    const double ref_linewidth = ref.f_c_hz / ref.q_l;

    points.reserve(fits.size());
    for (const auto& [fit, meta] : fits) {
        if (std::abs(fit.f_c_hz - ref.f_c_hz) > 100.0 * ref_linewidth)
            throw validation_error(
                "build_power_sweep: fits mix different resonances (f_c " +
                std::to_string(fit.f_c_hz) + " vs " + std::to_string(ref.f_c_hz) +
                " Hz is over 100 linewidths apart)");
        meta.validate();

        PowerPoint p;
        p.applied_power_w = applied_power(meta.vna_power_dbm, meta.attenuation_db, extra_loss_db);
        p.n_mean = mean_photon_number(p.applied_power_w, fit.f_c_hz, fit.q_l, fit.q_c_real());
        p.inv_qi = 1.0 / fit.q_i;
        const double sigma_qi = fit.ci95.q_i / 1.96;
        p.sigma_inv_qi = sigma_qi / (fit.q_i * fit.q_i);
        p.validate();
        points.push_back(p);
    }
    return points;
}

void write_power_csv(const std::filesystem::path& path, const std::vector<PowerPoint>& points) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << "n_mean,inv_qi,sigma_inv_qi,applied_power_w\n";
    char buf[160];
    for (const PowerPoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", p.n_mean, p.inv_qi,
                      p.sigma_inv_qi, p.applied_power_w);
        out << buf;
    }
    if (!out) throw io_error("write failed: " + path.string());
}

std::vector<PowerPoint> read_power_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw validation_error(path.filename().string() + ": empty file");

    std::vector<PowerPoint> points;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::stringstream ss(line);
        std::string cell;
        double values[4];
        for (int i = 0; i < 4; ++i) {
            if (!std::getline(ss, cell, ','))
                throw validation_error(path.filename().string() + ":" + std::to_string(line_no) +
                                       ": expected 4 columns");
            const char* begin = cell.data();
            auto [ptr, ec] = std::from_chars(begin, begin + cell.size(), values[i]);
            if (ec != std::errc() || ptr != begin + cell.size())
                throw validation_error(path.filename().string() + ":" + std::to_string(line_no) +
                                       ": unparseable cell \"" + cell + "\"");
        }
        PowerPoint p{values[0], values[1], values[2], values[3]};
        p.validate();
        points.push_back(p);
    }
    return points;
}

}  // namespace resokit
