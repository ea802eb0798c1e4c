#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hydroinv/hydro_model.hpp"
#include "hydroinv/matrix.hpp"
#include "hydroinv/parameters.hpp"

namespace hydroinv {

/// Independent uniform draws within each parameter's bounds.
std::vector<ParameterSet> sample_uniform(const ParameterSpace& space, int n, std::uint64_t seed);

/// Raised by run_ensemble; carries the failing realization index.
class EnsembleError : public InputError {
public:
    EnsembleError(std::size_t realization, const std::string& what);
    std::size_t realization() const noexcept { return realization_; }

private:
    std::size_t realization_;
};

/// One discharge row per parameter set (row order = input order). OpenMP over realizations.
Matrix run_ensemble(std::span<const ParameterSet> sets, const ForcingSeries& forcing, int warmup_days = 365);
/// Single-threaded reference for run_ensemble.
Matrix run_ensemble_serial(std::span<const ParameterSet> sets, const ForcingSeries& forcing, int warmup_days = 365);

struct EnsembleSummary {
    std::vector<double> mean;
    std::vector<double> stddev;
};
/// Pointwise mean and population standard deviation across realizations.
EnsembleSummary summarize_ensemble(const Matrix& discharge);

Matrix to_matrix(std::span<const ParameterSet> sets);
std::vector<ParameterSet> to_sets(const Matrix& m);

/// Per-column standardization fitted on a subset of rows.
class FeatureScaler {
public:
    static constexpr double kMinStd = 1e-12;

    void fit(const Matrix& x, std::span<const std::size_t> rows);
    void fit(const Matrix& x);
    Matrix transform(const Matrix& x) const;
    std::vector<double> transform_row(std::span<const double> row) const;
    Matrix inverse_transform(const Matrix& z) const;

    bool fitted() const noexcept { return fitted_; }
    const std::vector<double>& mean() const noexcept { return mean_; }
    const std::vector<double>& stddev() const noexcept { return std_; }
    /// Restores a previously fitted scaler (e.g. from a manifest).
    static FeatureScaler from_stats(std::vector<double> mean, std::vector<double> stddev);

    bool operator==(const FeatureScaler&) const = default;

private:
    void require_fitted(std::size_t cols) const;

    bool fitted_ = false;
    std::vector<double> mean_;
    std::vector<double> std_;
};

/**
 * Affine map of parameter columns onto [0,1] using their bounds.
 * `columns` selects which parameters of the space are targets.
 */
class TargetScaler {
public:
    TargetScaler() = default;
    TargetScaler(const ParameterSpace& space, std::vector<std::size_t> columns);
    static TargetScaler all(const ParameterSpace& space);

    std::size_t width() const noexcept { return columns_.size(); }
    const std::vector<std::size_t>& columns() const noexcept { return columns_; }
    double lower(std::size_t j) const { return lower_.at(j); }
    double upper(std::size_t j) const { return upper_.at(j); }

    /// Scales the selected columns of full-width parameter rows.
    /// Out-of-bounds values raise OutOfBoundsError unless `clamp`.
    Matrix scale(const Matrix& params, bool clamp = false) const;
    /// Scaled rows (width()) back to physical units; no clamping.
    Matrix unscale(const Matrix& scaled) const;

private:
    std::vector<std::size_t> columns_;
    std::vector<std::string> names_;
    std::vector<double> lower_;
    std::vector<double> upper_;
};

Matrix scale_targets(std::span<const ParameterSet> sets, const ParameterSpace& space, bool clamp = false);
std::vector<ParameterSet> unscale_targets(const Matrix& scaled, const ParameterSpace& space);

struct SplitFractions {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
};

/**
 * Discharge matrix plus parameters, partitioned and with a feature scaler
 * fitted on the training rows only.
 */
struct EnsembleDataset {
    Date start;                 ///< date of column 0
    Matrix discharge;           ///< realizations x days, m^3/s
    Matrix parameters;          ///< realizations x parameters, physical units
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    SplitFractions fractions;
    std::uint64_t seed = 0;
    FeatureScaler features;

    std::size_t realizations() const noexcept { return discharge.rows(); }
    /// Standardized discharge rows for the given realization indices.
    Matrix inputs(std::span<const std::size_t> rows) const;
    /// Scaled targets for the given rows under `targets`.
    Matrix targets(std::span<const std::size_t> rows, const TargetScaler& targets) const;
};

EnsembleDataset assemble(const Matrix& discharge, std::span<const ParameterSet> sets, SplitFractions fractions,
                         std::uint64_t seed, Date start = make_date(1999, 10, 1));

}  // namespace hydroinv
