#pragma once

#include <span>
#include <string>
#include <vector>

#include "hydroinv/matrix.hpp"

namespace hydroinv {

/// Nash-Sutcliffe efficiency. Throws InputError for constant observations.
double nse(std::span<const double> obs, std::span<const double> sim);
/// NSE of ln(q + epsilon); the denominator is centered on the mean logged observation.
double lognse(std::span<const double> obs, std::span<const double> sim, double epsilon = 1e-6);
/// Kling-Gupta efficiency (correlation, variability ratio, bias ratio).
double kge(std::span<const double> obs, std::span<const double> sim);
double pearson(std::span<const double> obs, std::span<const double> sim);
/// Squared Pearson correlation.
double r2_score(std::span<const double> obs, std::span<const double> sim);

struct PercentError {
    double value = 0.0;
    bool absolute = false;  ///< true when the reference is zero and `value` is an absolute error
};
/// 100 * (estimate - truth) / |truth|.
PercentError percent_error(double truth, double estimate);
std::vector<PercentError> percent_error(std::span<const double> truth, std::span<const double> estimate);

struct BandStats {
    double mean_width = 0.0;
    double coverage = 0.0;  ///< fraction of days with obs inside [min, max]
};
/// Pointwise min/max envelope over ensemble rows.
BandStats band_stats(std::span<const double> obs, const Matrix& members);

struct MetricsReport {
    std::string period;
    double r2 = 0.0;
    double nse = 0.0;
    double lognse = 0.0;
    double kge = 0.0;
    double pearson_r = 0.0;
};

MetricsReport evaluate(std::span<const double> obs, std::span<const double> sim, const std::string& period,
                       double log_epsilon = 1e-6);
/// Key-value records: `period=...` followed by one `key=value` line per metric.
std::string format_report(const MetricsReport& report);
MetricsReport parse_report(const std::string& text);

}  // namespace hydroinv
