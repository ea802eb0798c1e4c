#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hydroinv/ensemble.hpp"
#include "hydroinv/forcing.hpp"
#include "hydroinv/metrics.hpp"
#include "hydroinv/network.hpp"

namespace hydroinv {

/// Relative observation error; noise standard deviation is level / 3.
struct NoiseSpec {
    double level = 0.0;
    int realizations = 100;
    std::uint64_t seed = 0;

    double epsilon() const { return level / 3.0; }
};

/// Rows q_i * (1 + eps * r_i), r ~ N(0,1), floored at 0. Level 0 returns exact copies.
Matrix perturb(std::span<const double> q, const NoiseSpec& spec);

struct FiveNumber {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    double iqr() const { return q3 - q1; }
};
/// Quantiles by linear interpolation between order statistics.
FiveNumber five_number(std::vector<double> values);

/// A trained inverse model with the scalers it was trained under.
struct Estimator {
    nn::InverseModel model;
    FeatureScaler features;
    TargetScaler targets;
    std::string label;
};

void save_estimator(const Estimator& e, const std::string& dir);
Estimator load_estimator(const std::string& dir, const ParameterSpace& space = ParameterSpace::standard());

struct Estimate {
    ParameterSet set;                ///< physical units; unestimated parameters at their midpoint
    std::vector<double> raw_scaled;  ///< network output before clamping
    std::vector<bool> clamped;
};

/// Standardizes `q`, runs inference, unscales via the parameter bounds, clamps to [0,1] in scaled space.
Estimate estimate(const Estimator& e, std::span<const double> q);
/// Row-wise estimate over a discharge matrix.
std::vector<Estimate> estimate_many(const Estimator& e, const Matrix& q);

struct NoiseSweepLevel {
    double level = 0.0;
    /// [model][target] five-number summaries over realizations, physical and scaled units.
    std::vector<std::vector<FiveNumber>> physical;
    std::vector<std::vector<FiveNumber>> scaled;
    /// [target] summary pooled over models and realizations.
    std::vector<FiveNumber> pooled_physical;
    /// [model][target] mean estimate in physical units.
    std::vector<std::vector<double>> model_means;
};

struct NoiseSweepResult {
    std::vector<std::string> parameters;
    std::vector<std::string> models;
    std::vector<NoiseSweepLevel> levels;
};

inline const std::vector<double> kDefaultNoiseLevels{0.05, 0.10, 0.15, 0.20, 0.25};

/**
 * Feeds `spec.realizations` noisy copies of `q` per level to every model.
 * All models see the same noisy series; the draws depend only on the seed
 * and the level value.
 */
NoiseSweepResult noise_sweep(std::span<const Estimator> models, std::span<const double> q,
                             const std::vector<double>& levels, const NoiseSpec& spec);
std::string format_noise_sweep(const NoiseSweepResult& r);

struct BehavioralSet {
    std::vector<std::size_t> members;  ///< ascending index
    std::vector<double> metric;        ///< per ensemble member
    std::vector<std::size_t> top;      ///< best members by descending metric, ties by index
    double threshold = 0.5;
    std::string metric_name = "kge";

    bool contains(std::size_t i) const;
};

/// KGE-based behavioral selection over simulated discharge rows.
BehavioralSet glue_select(const Matrix& discharge, std::span<const double> obs, double threshold = 0.5,
                          std::size_t top_k = 10);

struct Window {
    Date start;
    int days = 0;
    Date end() const { return start + std::chrono::days(days - 1); }
};
bool overlaps(const Window& a, const Window& b);

inline Window default_calibration_window() { return {make_date(1999, 10, 1), 3654}; }
inline Window default_validation_window() { return {make_date(2009, 10, 2), 2556}; }

struct PeriodResult {
    std::string period;
    Window window;
    std::vector<MetricsReport> reports;  ///< one per set
    std::size_t best = 0;                ///< set with the highest calibration KGE
    BandStats band;                      ///< envelope of the sets other than `best`
    Matrix simulated;                    ///< one row per set
};

struct CalibrationResult {
    std::string method;
    std::vector<ParameterSet> sets;
    Matrix raw_scaled;                 ///< pre-clamp network outputs (empty for GLUE)
    std::vector<std::vector<bool>> clamped;
    PeriodResult calibration;
    PeriodResult validation;
};

/**
 * Reruns the forward model for every set over the full forcing record and
 * scores both windows. Throws InputError when the windows overlap or fall
 * outside the simulated record.
 */
CalibrationResult calibrate_and_validate(std::span<const ParameterSet> sets, const ForcingSeries& forcing,
                                         const Window& calibration, const Window& validation,
                                         std::span<const double> obs_calibration,
                                         std::span<const double> obs_validation, int warmup_days = 365,
                                         const std::string& method = "");

struct MethodSummary {
    std::string method;
    MetricsReport best;
    FiveNumber r2, nse, lognse, kge;
    BandStats band;
};

struct PeriodComparison {
    std::string period;
    MethodSummary a;
    MethodSummary b;
};

struct ComparisonReport {
    std::vector<std::string> parameters;
    std::vector<double> iqr_a;  ///< per parameter IQR of method a's sets
    std::vector<double> iqr_b;
    std::vector<PeriodComparison> periods;
};

/// Side-by-side summary; throws InputError when the two results cover different windows.
ComparisonReport compare(const CalibrationResult& a, const CalibrationResult& b,
                         const ParameterSpace& space = ParameterSpace::standard());
std::string format_comparison(const ComparisonReport& r);

}  // namespace hydroinv
