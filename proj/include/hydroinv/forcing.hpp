#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hydroinv {

using Date = std::chrono::sys_days;

Date make_date(int year, unsigned month, unsigned day);
std::string format_date(Date d);
/// Parses YYYY-MM-DD; throws InputError on anything else.
Date parse_date(std::string_view text);
/// 1-based day of year.
int day_of_year(Date d);

/// Watershed constants that the forcing file does not carry.
struct SiteConstants {
    double area_km2 = 205.0;
    double latitude_deg = 46.9;
    double soil_depth_mm = 1524.0;
};

struct DailyForcing {
    Date date;
    double prcp_mm = 0.0;
    double tmax_c = 0.0;
    double tmin_c = 0.0;

    double tmean_c() const noexcept { return 0.5 * (tmax_c + tmin_c); }
};

/**
 * Daily meteorological driver.
 *
 * Invariants (checked by validate()): precipitation >= 0, tmax >= tmin,
 * all values finite, dates strictly increasing by one day.
 */
struct ForcingSeries {
    SiteConstants site;
    std::vector<DailyForcing> days;

    std::size_t size() const noexcept { return days.size(); }
    bool empty() const noexcept { return days.empty(); }

    void validate() const;
    /// Index of the record for `d`; throws InputError when outside the series.
    std::size_t index_of(Date d) const;
};

/**
 * Seasonal stochastic weather generator settings.
 *
 * Temperature: annual sinusoid (peak at temp_peak_doy) plus an AR(1)
 * anomaly; diurnal range follows its own sinusoid. Precipitation: a
 * two-state Markov chain whose wet-day probability and mean depth are
 * largest in mid-winter, with gamma-distributed wet-day depths.
 */
struct ClimateSpec {
    Date start = make_date(1998, 10, 1);
    double mean_temp_c = -1.0;
    double temp_amplitude_c = 6.0;
    int temp_peak_doy = 200;
    double anomaly_sd_c = 2.0;
    double anomaly_ar1 = 0.7;
    double dtr_mean_c = 6.0;
    double dtr_amplitude_c = 1.0;
    double wet_prob_winter = 0.65;
    double wet_prob_summer = 0.18;
    double wet_persistence = 0.4;
    double wet_depth_winter_mm = 14.0;
    double wet_depth_summer_mm = 6.0;
    double depth_gamma_shape = 0.8;
    int precip_peak_doy = 15;
    double wet_day_warming_c = 4.0;  ///< added to the mean temperature on wet days
    double wet_day_dtr_factor = 0.5; ///< diurnal range multiplier on wet days
};

ForcingSeries generate_forcing(std::uint64_t seed, int n_days, const ClimateSpec& climate = {},
                               const SiteConstants& site = {});

/// Reads `date,prcp_mm,tmax_c,tmin_c`; errors name the 1-based line number.
ForcingSeries load_forcing(std::istream& in, const SiteConstants& site = {});
ForcingSeries load_forcing_file(const std::string& path, const SiteConstants& site = {});
void write_forcing(std::ostream& out, const ForcingSeries& forcing);
void write_forcing_file(const std::string& path, const ForcingSeries& forcing);

/// Fraction of total precipitation that falls on days with mean temperature below `threshold_c`.
double cold_precipitation_fraction(const ForcingSeries& forcing, double threshold_c = 0.0);

}  // namespace hydroinv
