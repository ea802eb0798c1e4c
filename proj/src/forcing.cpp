#include "hydroinv/forcing.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "hydroinv/io.hpp"
#include "hydroinv/parameters.hpp"

namespace hydroinv {

Date make_date(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok()) throw InputError("invalid calendar date");
    return Date{ymd};
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

Date parse_date(std::string_view text) {
    text = io::trim(text);
    const auto bad = [&] { return InputError("bad ISO date: '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
    int parts[3] = {0, 0, 0};
    const std::size_t offs[3] = {0, 5, 8};
    const std::size_t lens[3] = {4, 2, 2};
    for (int i = 0; i < 3; ++i) {
        for (std::size_t k = 0; k < lens[i]; ++k) {
            const char c = text[offs[i] + k];
            if (c < '0' || c > '9') throw bad();
            parts[i] = parts[i] * 10 + (c - '0');
        }
    }
    const std::chrono::year_month_day ymd{std::chrono::year{parts[0]},
                                          std::chrono::month{static_cast<unsigned>(parts[1])},
                                          std::chrono::day{static_cast<unsigned>(parts[2])}};
    if (!ymd.ok()) throw bad();
    return Date{ymd};
}

int day_of_year(Date d) {
    const std::chrono::year_month_day ymd{d};
    const Date jan1{ymd.year() / std::chrono::January / 1};
    return static_cast<int>((d - jan1).count()) + 1;
}

void ForcingSeries::validate() const {
    for (std::size_t i = 0; i < days.size(); ++i) {
        const auto& r = days[i];
        const auto where = [&] { return "forcing row " + std::to_string(i + 1) + " (" + format_date(r.date) + ")"; };
        if (!std::isfinite(r.prcp_mm) || !std::isfinite(r.tmax_c) || !std::isfinite(r.tmin_c)) {
            throw InputError(where() + ": non-finite value");
        }
        if (r.prcp_mm < 0.0) throw InputError(where() + ": negative precipitation");
        if (r.tmax_c < r.tmin_c) throw InputError(where() + ": tmax below tmin");
        if (i > 0 && r.date != days[i - 1].date + std::chrono::days{1}) {
            throw InputError(where() + ": dates must increase by exactly one day");
        }
    }
    if (!(site.area_km2 > 0.0) || !(site.soil_depth_mm > 0.0) || std::abs(site.latitude_deg) > 90.0) {
        throw InputError("invalid site constants");
    }
}

std::size_t ForcingSeries::index_of(Date d) const {
    if (days.empty() || d < days.front().date || d > days.back().date) {
        throw InputError("date " + format_date(d) + " outside forcing series");
    }
    return static_cast<std::size_t>((d - days.front().date).count());
}

ForcingSeries generate_forcing(std::uint64_t seed, int n_days, const ClimateSpec& c, const SiteConstants& site) {
    if (n_days <= 0) throw InputError("n_days must be positive");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::gamma_distribution<double> gamma(c.depth_gamma_shape, 1.0 / c.depth_gamma_shape);

    ForcingSeries out;
    out.site = site;
    out.days.reserve(static_cast<std::size_t>(n_days));
    const double innovation_sd = c.anomaly_sd_c * std::sqrt(1.0 - c.anomaly_ar1 * c.anomaly_ar1);
    double anomaly = 0.0;
    bool wet = false;
    for (int i = 0; i < n_days; ++i) {
        const Date date = c.start + std::chrono::days{i};
        const int doy = day_of_year(date);
        const double t_phase = std::cos(two_pi * (doy - c.temp_peak_doy) / 365.0);
        const double p_phase = 0.5 * (1.0 + std::cos(two_pi * (doy - c.precip_peak_doy) / 365.0));

        anomaly = c.anomaly_ar1 * anomaly + innovation_sd * normal(rng);
        double tmean = c.mean_temp_c + c.temp_amplitude_c * t_phase + anomaly;
        double dtr = std::max(1.0, c.dtr_mean_c + c.dtr_amplitude_c * t_phase + 1.5 * normal(rng));

        const double p_wet = c.wet_prob_summer + (c.wet_prob_winter - c.wet_prob_summer) * p_phase;
        const double p_next = wet ? p_wet + c.wet_persistence * (1.0 - p_wet) : p_wet * (1.0 - c.wet_persistence);
        wet = unif(rng) < p_next;
        if (wet) {
            tmean += c.wet_day_warming_c;
            dtr = std::max(1.0, dtr * c.wet_day_dtr_factor);
        }
        const double depth_mean = c.wet_depth_summer_mm + (c.wet_depth_winter_mm - c.wet_depth_summer_mm) * p_phase;
        const double depth = gamma(rng) * depth_mean;

        out.days.push_back({date, wet ? depth : 0.0, tmean + 0.5 * dtr, tmean - 0.5 * dtr});
    }
    return out;
}

ForcingSeries load_forcing(std::istream& in, const SiteConstants& site) {
    ForcingSeries out;
    out.site = site;
    std::string line;
    if (!std::getline(in, line)) throw InputError("forcing: empty input");
    if (io::trim(line) != "date,prcp_mm,tmax_c,tmin_c") {
        throw InputError("forcing line 1: expected header 'date,prcp_mm,tmax_c,tmin_c'");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (io::trim(line).empty()) continue;
        const auto fail = [&](const std::string& why) {
            return InputError("forcing line " + std::to_string(line_no) + ": " + why);
        };
        const auto fields = io::split(io::trim(line));
        if (fields.size() != 4) throw fail("expected 4 fields");
        DailyForcing r;
        try {
            r.date = parse_date(fields[0]);
            r.prcp_mm = io::parse_double(fields[1]);
            r.tmax_c = io::parse_double(fields[2]);
            r.tmin_c = io::parse_double(fields[3]);
        } catch (const InputError& e) {
            throw fail(e.what());
        }
        if (!std::isfinite(r.prcp_mm) || !std::isfinite(r.tmax_c) || !std::isfinite(r.tmin_c)) {
            throw fail("non-finite value");
        }
        if (r.prcp_mm < 0.0) throw fail("negative precipitation");
        if (r.tmax_c < r.tmin_c) throw fail("tmax below tmin");
        if (!out.days.empty() && r.date != out.days.back().date + std::chrono::days{1}) {
            throw fail("dates must increase by exactly one day");
        }
        out.days.push_back(r);
    }
    return out;
}

ForcingSeries load_forcing_file(const std::string& path, const SiteConstants& site) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open forcing file: " + path);
    return load_forcing(in, site);
}

void write_forcing(std::ostream& out, const ForcingSeries& forcing) {
    out << "date,prcp_mm,tmax_c,tmin_c\n";
    for (const auto& r : forcing.days) {
        out << format_date(r.date) << ',' << io::format_double(r.prcp_mm) << ',' << io::format_double(r.tmax_c)
            << ',' << io::format_double(r.tmin_c) << '\n';
    }
}

void write_forcing_file(const std::string& path, const ForcingSeries& forcing) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    write_forcing(out, forcing);
}

double cold_precipitation_fraction(const ForcingSeries& forcing, double threshold_c) {
    double total = 0.0;
    double cold = 0.0;
    for (const auto& r : forcing.days) {
        total += r.prcp_mm;
        if (r.tmean_c() < threshold_c) cold += r.prcp_mm;
    }
    return total > 0.0 ? cold / total : 0.0;
}

}  // namespace hydroinv
