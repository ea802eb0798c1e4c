#include "hydroinv/sensitivity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "hydroinv/parameters.hpp"

namespace hydroinv {

int default_bins(std::size_t n) {
    return std::max(2, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)) / 2.0)));
}

std::vector<int> rank_bins(std::span<const double> x, int bins) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<int> out(n);
    std::size_t first = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (r > 0 && x[idx[r]] != x[idx[r - 1]]) first = r;
        out[idx[r]] = static_cast<int>(first * static_cast<std::size_t>(bins) / n);
    }
    return out;
}

namespace {

void check_inputs(std::size_t nx, std::size_t ny, int bins) {
    if (nx != ny) {
        throw InputError("mutual_information: length mismatch (" + std::to_string(nx) + " vs " + std::to_string(ny) + ")");
    }
    if (bins < 2) throw InputError("mutual_information: bins must be >= 2");
    if (nx < 4 * static_cast<std::size_t>(bins)) {
        throw InputError("mutual_information: " + std::to_string(nx) + " samples is too few for " +
                         std::to_string(bins) + " bins");
    }
}

struct MiParts {
    double plugin = 0.0;
    double correction = 0.0;
};

MiParts mi_from_bins(const std::vector<int>& bx, const std::vector<int>& by, int bins) {
    const std::size_t n = bx.size();
    const auto b = static_cast<std::size_t>(bins);
    std::vector<std::size_t> joint(b * b, 0), mx(b, 0), my(b, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++joint[static_cast<std::size_t>(bx[i]) * b + static_cast<std::size_t>(by[i])];
        ++mx[static_cast<std::size_t>(bx[i])];
        ++my[static_cast<std::size_t>(by[i])];
    }
    const double nn = static_cast<double>(n);
    double mi = 0.0;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            const std::size_t c = joint[i * b + j];
            if (c == 0) continue;
            ++cells;
            const double pxy = static_cast<double>(c) / nn;
            mi += pxy * std::log(static_cast<double>(c) * nn / (static_cast<double>(mx[i]) * static_cast<double>(my[j])));
        }
    }
    const auto occupied = [](const std::vector<std::size_t>& m) {
        return static_cast<double>(std::count_if(m.begin(), m.end(), [](std::size_t c) { return c > 0; }));
    };
    MiParts p;
    p.plugin = std::max(0.0, mi);
    p.correction = (static_cast<double>(cells) - occupied(mx) - occupied(my) + 1.0) / (2.0 * nn);
    return p;
}

}  // namespace

double mutual_information(std::span<const double> x, std::span<const double> y, int bins) {
    check_inputs(x.size(), y.size(), bins);
    const auto p = mi_from_bins(rank_bins(x, bins), rank_bins(y, bins), bins);
    return std::max(0.0, p.plugin - p.correction);
}

double mutual_information_plugin(std::span<const double> x, std::span<const double> y, int bins) {
    check_inputs(x.size(), y.size(), bins);
    return mi_from_bins(rank_bins(x, bins), rank_bins(y, bins), bins).plugin;
}

// ---------------------------------------------------------------------------

std::string FeatureSpec::describe() const {
    if (mode == FeatureMode::PerTimeStep) return "per-time-step";
    std::vector<std::string> parts;
    if (monthly_means) parts.emplace_back("monthly-means");
    if (annual_peak) parts.emplace_back("annual-peak");
    if (percentiles) parts.emplace_back("p05,p95");
    std::string s;
    for (const auto& p : parts) s += (s.empty() ? "" : "+") + p;
    return s;
}

std::vector<std::string> summary_feature_names(const FeatureSpec& spec) {
    static constexpr const char* kMonths[] = {"jan", "feb", "mar", "apr", "may", "jun",
                                              "jul", "aug", "sep", "oct", "nov", "dec"};
    std::vector<std::string> names;
    if (spec.monthly_means) names.insert(names.end(), std::begin(kMonths), std::end(kMonths));
    if (spec.annual_peak) names.emplace_back("annual_peak");
    if (spec.percentiles) {
        names.emplace_back("p05");
        names.emplace_back("p95");
    }
    return names;
}

namespace {

double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

Matrix summary_features(const Matrix& discharge, Date start, const FeatureSpec& spec) {
    const auto names = summary_feature_names(spec);
    if (names.empty()) throw InputError("feature spec selects no features");
    const std::size_t days = discharge.cols();
    if (days == 0) throw InputError("discharge has no time steps");

    std::vector<int> month(days), year(days);
    for (std::size_t t = 0; t < days; ++t) {
        const std::chrono::year_month_day ymd{start + std::chrono::days(static_cast<int>(t))};
        month[t] = static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
        year[t] = static_cast<int>(ymd.year());
    }

    Matrix f(discharge.rows(), names.size());
    for (std::size_t r = 0; r < discharge.rows(); ++r) {
        const auto q = discharge.row(r);
        std::size_t c = 0;
        if (spec.monthly_means) {
            std::array<double, 12> sum{};
            std::array<std::size_t, 12> cnt{};
            for (std::size_t t = 0; t < days; ++t) {
                sum[static_cast<std::size_t>(month[t])] += q[t];
                ++cnt[static_cast<std::size_t>(month[t])];
            }
            for (std::size_t m = 0; m < 12; ++m) f(r, c++) = cnt[m] ? sum[m] / static_cast<double>(cnt[m]) : 0.0;
        }
        if (spec.annual_peak) {
            std::map<int, double> peaks;
            for (std::size_t t = 0; t < days; ++t) {
                auto [it, inserted] = peaks.try_emplace(year[t], q[t]);
                if (!inserted) it->second = std::max(it->second, q[t]);
            }
            double s = 0.0;
            for (const auto& [y, p] : peaks) s += p;
            f(r, c++) = s / static_cast<double>(peaks.size());
        }
        if (spec.percentiles) {
            std::vector<double> v(q.begin(), q.end());
            f(r, c++) = percentile(v, 0.05);
            f(r, c++) = percentile(std::move(v), 0.95);
        }
    }
    return f;
}

std::size_t SensitivityRanking::rank_of(std::size_t j) const {
    const auto it = std::find(order.begin(), order.end(), j);
    if (it == order.end()) throw InputError("parameter index out of range");
    return static_cast<std::size_t>(it - order.begin()) + 1;
}

SensitivityRanking rank_parameters(const Matrix& parameters, const Matrix& discharge, Date start,
                                   const FeatureSpec& spec, std::vector<std::string> names) {
    if (parameters.rows() != discharge.rows()) throw InputError("parameter and discharge row counts differ");
    if (parameters.rows() < 100) throw InputError("sensitivity ranking needs at least 100 realizations");
    const Matrix features =
        spec.mode == FeatureMode::PerTimeStep ? discharge : summary_features(discharge, start, spec);
    if (features.cols() == 0) throw InputError("feature spec selects no features");

    const std::size_t n = parameters.rows();
    const int bins = spec.bins > 0 ? spec.bins : default_bins(n);
    if (n < 4 * static_cast<std::size_t>(bins)) throw InputError("too few realizations for the bin count");
    if (names.empty()) {
        for (std::size_t j = 0; j < parameters.cols(); ++j) {
            names.push_back(j < kNumParams ? ParameterSpace::standard()[j].name : "param" + std::to_string(j));
        }
    }
    if (names.size() != parameters.cols()) throw InputError("parameter name count does not match columns");

    const auto m = static_cast<std::ptrdiff_t>(features.cols());
    std::vector<std::vector<int>> feature_bins(features.cols());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < m; ++c) {
        feature_bins[static_cast<std::size_t>(c)] = rank_bins(features.column(static_cast<std::size_t>(c)), bins);
    }

    SensitivityRanking out;
    out.names = std::move(names);
    out.bins = bins;
    out.features = spec.describe();
    out.scores.assign(parameters.cols(), 0.0);
    const auto p = static_cast<std::ptrdiff_t>(parameters.cols());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t jj = 0; jj < p; ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        const auto bx = rank_bins(parameters.column(j), bins);
        double s = 0.0;
        for (const auto& by : feature_bins) {
            const auto parts = mi_from_bins(bx, by, bins);
            s += std::max(0.0, parts.plugin - parts.correction);
        }
        out.scores[j] = s / static_cast<double>(feature_bins.size());
    }
    out.order.resize(parameters.cols());
    std::iota(out.order.begin(), out.order.end(), std::size_t{0});
    std::stable_sort(out.order.begin(), out.order.end(),
                     [&](std::size_t a, std::size_t b) { return out.scores[a] > out.scores[b]; });
    return out;
}

SensitivityRanking rank_parameters(const EnsembleDataset& dataset, const FeatureSpec& spec,
                                   std::vector<std::string> names) {
    return rank_parameters(dataset.parameters, dataset.discharge, dataset.start, spec, std::move(names));
}

std::string format_ranking(const SensitivityRanking& r) {
    std::ostringstream os;
    os << "# features: " << r.features << "\n# bins: " << r.bins << "\n";
    os << "rank,parameter,score\n";
    char buf[64];
    for (std::size_t k = 0; k < r.order.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", r.scores[r.order[k]]);
        os << k + 1 << ',' << r.names[r.order[k]] << ',' << buf << '\n';
    }
    return os.str();
}

}  // namespace hydroinv
