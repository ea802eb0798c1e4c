#pragma once

#include <span>
#include <string>
#include <vector>

#include "hydroinv/ensemble.hpp"
#include "hydroinv/forcing.hpp"
#include "hydroinv/matrix.hpp"

namespace hydroinv {

/// Default equal-frequency bin count for n samples: ceil(sqrt(n) / 2).
int default_bins(std::size_t n);

/**
 * Mutual information (nats) from an equal-frequency histogram of ranks.
 *
 * Each variable is rank-binned into `bins` classes (tied values share the
 * bin of their first rank). The plug-in estimate is reduced by the
 * Miller-Madow bias term (m_xy - m_x - m_y + 1) / 2N over occupied cells
 * and clamped at zero. Requires len(x) == len(y) >= 4 * bins, bins >= 2.
 */
double mutual_information(std::span<const double> x, std::span<const double> y, int bins);

/// Uncorrected plug-in estimate on the same rank histogram.
double mutual_information_plugin(std::span<const double> x, std::span<const double> y, int bins);

/// Equal-frequency bin index for every sample.
std::vector<int> rank_bins(std::span<const double> x, int bins);

enum class FeatureMode { Summary, PerTimeStep };

struct FeatureSpec {
    FeatureMode mode = FeatureMode::Summary;
    int bins = 0;  ///< 0 selects default_bins(N)
    bool monthly_means = true;
    bool annual_peak = true;
    bool percentiles = true;  ///< 5th and 95th percentile flows

    std::string describe() const;
};

/// Summary features per realization: 12 calendar-month means, mean annual
/// peak, 5th and 95th percentile. Columns follow that order.
Matrix summary_features(const Matrix& discharge, Date start, const FeatureSpec& spec = {});
std::vector<std::string> summary_feature_names(const FeatureSpec& spec = {});

struct SensitivityRanking {
    std::vector<std::string> names;
    std::vector<double> scores;      ///< per parameter, column order
    std::vector<std::size_t> order;  ///< parameter indices by descending score
    int bins = 0;
    std::string features;

    /// 1-based rank of parameter `j`.
    std::size_t rank_of(std::size_t j) const;
};

/**
 * Scores every parameter column by the mean MI against the chosen discharge
 * features. Ties in score are ordered by column index.
 */
SensitivityRanking rank_parameters(const Matrix& parameters, const Matrix& discharge, Date start,
                                   const FeatureSpec& spec, std::vector<std::string> names = {});
SensitivityRanking rank_parameters(const EnsembleDataset& dataset, const FeatureSpec& spec,
                                   std::vector<std::string> names = {});

/// Text table: rank, parameter, score.
std::string format_ranking(const SensitivityRanking& ranking);

}  // namespace hydroinv
