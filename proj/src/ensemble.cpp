#include "hydroinv/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

namespace hydroinv {

std::vector<ParameterSet> sample_uniform(const ParameterSpace& space, int n, std::uint64_t seed) {
    if (n < 1) throw InputError("sample size must be at least 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ParameterSet> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<double> v(space.size());
        for (std::size_t j = 0; j < space.size(); ++j) v[j] = space[j].lower + u(rng) * space[j].range();
        out.emplace_back(std::move(v));
    }
    return out;
}

EnsembleError::EnsembleError(std::size_t realization, const std::string& what)
    : InputError("realization " + std::to_string(realization) + ": " + what), realization_(realization) {}

Matrix run_ensemble(std::span<const ParameterSet> sets, const ForcingSeries& forcing, int warmup_days) {
    if (sets.empty()) throw InputError("ensemble needs at least one parameter set");
    const std::size_t width = forcing.size() > static_cast<std::size_t>(std::max(warmup_days, 0))
                                  ? forcing.size() - static_cast<std::size_t>(warmup_days)
                                  : 0;
    Matrix out(sets.size(), width);
    std::vector<std::optional<std::string>> errors(sets.size());
    const auto n = static_cast<std::ptrdiff_t>(sets.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            const auto q = simulate(sets[static_cast<std::size_t>(i)], forcing, warmup_days);
            out.set_row(static_cast<std::size_t>(i), q.q_m3s);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i]) throw EnsembleError(i, *errors[i]);
    }
    return out;
}

Matrix run_ensemble_serial(std::span<const ParameterSet> sets, const ForcingSeries& forcing, int warmup_days) {
    if (sets.empty()) throw InputError("ensemble needs at least one parameter set");
    Matrix out;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        DischargeSeries q;
        try {
            q = simulate(sets[i], forcing, warmup_days);
        } catch (const std::exception& e) {
            throw EnsembleError(i, e.what());
        }
        if (i == 0) out = Matrix(sets.size(), q.size());
        out.set_row(i, q.q_m3s);
    }
    return out;
}

EnsembleSummary summarize_ensemble(const Matrix& q) {
    EnsembleSummary s{std::vector<double>(q.cols(), 0.0), std::vector<double>(q.cols(), 0.0)};
    if (q.rows() == 0) return s;
    for (std::size_t r = 0; r < q.rows(); ++r) {
        for (std::size_t c = 0; c < q.cols(); ++c) s.mean[c] += q(r, c);
    }
    for (auto& m : s.mean) m /= static_cast<double>(q.rows());
    for (std::size_t r = 0; r < q.rows(); ++r) {
        for (std::size_t c = 0; c < q.cols(); ++c) {
            const double d = q(r, c) - s.mean[c];
            s.stddev[c] += d * d;
        }
    }
    for (auto& v : s.stddev) v = std::sqrt(v / static_cast<double>(q.rows()));
    return s;
}

Matrix to_matrix(std::span<const ParameterSet> sets) {
    if (sets.empty()) return {};
    Matrix m(sets.size(), sets[0].size());
    for (std::size_t i = 0; i < sets.size(); ++i) m.set_row(i, sets[i].values());
    return m;
}

std::vector<ParameterSet> to_sets(const Matrix& m) {
    std::vector<ParameterSet> out;
    out.reserve(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        out.emplace_back(std::vector<double>(row.begin(), row.end()));
    }
    return out;
}

// ---------------------------------------------------------------------------

void FeatureScaler::fit(const Matrix& x, std::span<const std::size_t> rows) {
    if (rows.empty()) throw InputError("cannot fit scaler on zero rows");
    mean_.assign(x.cols(), 0.0);
    std_.assign(x.cols(), 0.0);
    for (std::size_t r : rows) {
        for (std::size_t c = 0; c < x.cols(); ++c) mean_[c] += x(r, c);
    }
    const double n = static_cast<double>(rows.size());
    for (auto& m : mean_) m /= n;
    for (std::size_t r : rows) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double d = x(r, c) - mean_[c];
            std_[c] += d * d;
        }
    }
    for (auto& s : std_) s = std::sqrt(s / n);
    fitted_ = true;
}

void FeatureScaler::fit(const Matrix& x) {
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    fit(x, rows);
}

void FeatureScaler::require_fitted(std::size_t cols) const {
    if (!fitted_) throw InputError("feature scaler used before fitting");
    if (cols != mean_.size()) {
        throw InputError("feature width " + std::to_string(cols) + " does not match scaler width " +
                         std::to_string(mean_.size()));
    }
}

Matrix FeatureScaler::transform(const Matrix& x) const {
    require_fitted(x.cols());
    Matrix z(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) z(r, c) = (x(r, c) - mean_[c]) / std::max(std_[c], kMinStd);
    }
    return z;
}

std::vector<double> FeatureScaler::transform_row(std::span<const double> row) const {
    require_fitted(row.size());
    std::vector<double> z(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) z[c] = (row[c] - mean_[c]) / std::max(std_[c], kMinStd);
    return z;
}

Matrix FeatureScaler::inverse_transform(const Matrix& z) const {
    require_fitted(z.cols());
    Matrix x(z.rows(), z.cols());
    for (std::size_t r = 0; r < z.rows(); ++r) {
        for (std::size_t c = 0; c < z.cols(); ++c) x(r, c) = z(r, c) * std::max(std_[c], kMinStd) + mean_[c];
    }
    return x;
}

FeatureScaler FeatureScaler::from_stats(std::vector<double> mean, std::vector<double> stddev) {
    if (mean.size() != stddev.size()) throw InputError("scaler statistics have mismatched widths");
    FeatureScaler s;
    s.mean_ = std::move(mean);
    s.std_ = std::move(stddev);
    s.fitted_ = true;
    return s;
}

// ---------------------------------------------------------------------------

TargetScaler::TargetScaler(const ParameterSpace& space, std::vector<std::size_t> columns)
    : columns_(std::move(columns)) {
    for (std::size_t c : columns_) {
        const auto& s = space[c];
        names_.push_back(s.name);
        lower_.push_back(s.lower);
        upper_.push_back(s.upper);
    }
}

TargetScaler TargetScaler::all(const ParameterSpace& space) {
    std::vector<std::size_t> cols(space.size());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return TargetScaler(space, std::move(cols));
}

Matrix TargetScaler::scale(const Matrix& params, bool clamp) const {
    Matrix out(params.rows(), columns_.size());
    for (std::size_t r = 0; r < params.rows(); ++r) {
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            double v = params(r, columns_[j]);
            if (v < lower_[j] || v > upper_[j]) {
                if (!clamp) throw OutOfBoundsError(names_[j], v, lower_[j], upper_[j]);
                v = std::clamp(v, lower_[j], upper_[j]);
            }
            out(r, j) = (v - lower_[j]) / (upper_[j] - lower_[j]);
        }
    }
    return out;
}

Matrix TargetScaler::unscale(const Matrix& scaled) const {
    if (scaled.cols() != columns_.size()) throw InputError("scaled target width mismatch");
    Matrix out(scaled.rows(), scaled.cols());
    for (std::size_t r = 0; r < scaled.rows(); ++r) {
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            out(r, j) = lower_[j] + scaled(r, j) * (upper_[j] - lower_[j]);
        }
    }
    return out;
}

Matrix scale_targets(std::span<const ParameterSet> sets, const ParameterSpace& space, bool clamp) {
    return TargetScaler::all(space).scale(to_matrix(sets), clamp);
}

std::vector<ParameterSet> unscale_targets(const Matrix& scaled, const ParameterSpace& space) {
    return to_sets(TargetScaler::all(space).unscale(scaled));
}

// ---------------------------------------------------------------------------

Matrix EnsembleDataset::inputs(std::span<const std::size_t> rows) const {
    return features.transform(discharge.select_rows(rows));
}

Matrix EnsembleDataset::targets(std::span<const std::size_t> rows, const TargetScaler& t) const {
    return t.scale(parameters.select_rows(rows));
}

EnsembleDataset assemble(const Matrix& discharge, std::span<const ParameterSet> sets, SplitFractions f,
                         std::uint64_t seed, Date start) {
    if (discharge.rows() != sets.size()) {
        throw InputError("discharge rows (" + std::to_string(discharge.rows()) + ") != parameter sets (" +
                         std::to_string(sets.size()) + ")");
    }
    if (f.train < 0 || f.validation < 0 || f.test < 0 || std::abs(f.train + f.validation + f.test - 1.0) > 1e-9) {
        throw InputError("split fractions must be non-negative and sum to 1");
    }
    const std::size_t n = sets.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_train = static_cast<std::size_t>(std::floor(f.train * static_cast<double>(n) + 0.5));
    const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::floor(f.validation * static_cast<double>(n) + 0.5)));

    EnsembleDataset d;
    d.start = start;
    d.discharge = discharge;
    d.parameters = to_matrix(sets);
    d.fractions = f;
    d.seed = seed;
    d.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    d.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                        order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    d.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
    if (d.train.empty()) throw InputError("training split is empty");
    d.features.fit(discharge, d.train);
    return d;
}

}  // namespace hydroinv
