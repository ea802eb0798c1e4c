#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "hydroinv/ensemble.hpp"
#include "hydroinv/network.hpp"

namespace hydroinv {

struct HyperConfig {
    int n_layers = 3;
    int base_filters = 128;
    int base_kernel = 16;
    double dropout = 0.2;
    double learning_rate = 1e-5;
    int epochs = 500;

    /// Stage i uses max(1, base_filters >> i) filters and max(1, base_kernel >> i) taps.
    nn::ArchitectureSpec architecture(int input_length, int outputs) const;
    auto tuple() const { return std::tie(n_layers, base_filters, base_kernel, dropout, learning_rate, epochs); }
    bool operator==(const HyperConfig& o) const { return tuple() == o.tuple(); }
    bool operator<(const HyperConfig& o) const { return tuple() < o.tuple(); }
    std::string label() const;

    /// Default tuned configuration: three stages from (128, 16).
    static HyperConfig tuned() { return {}; }
};

struct SearchSpace {
    std::vector<int> n_layers{1, 2, 3, 4, 5};
    std::vector<int> base_filters{16, 32, 64, 128, 256};
    std::vector<int> base_kernel{2, 4, 8, 16, 32};
    std::vector<double> dropout{0.0, 0.1, 0.2, 0.3, 0.4};
    std::vector<double> learning_rate{1e-6, 1e-5, 1e-4};
    std::vector<int> epochs{100, 200, 300, 400, 500, 1000};
};

struct GridEntry {
    HyperConfig config;
    bool feasible = true;
};

/// Full cartesian product in lexicographic order, flagged for feasibility on `input_length`.
std::vector<GridEntry> expand_grid(const SearchSpace& space, int input_length);

struct TuneOptions {
    int budget = 24;             ///< random configurations; <= 0 evaluates every feasible one
    bool include_tuned = true;   ///< always evaluate HyperConfig::tuned() when feasible
    std::size_t top_k = 10;
    std::uint64_t seed = 0;
    int epoch_cap = 0;           ///< > 0 truncates every config's epochs (desk-scale runs)
    int batch_size = 10;
};

struct TuneEntry {
    HyperConfig config;
    double validation_mse = 0.0;
    std::size_t weight_count = 0;
    std::uint64_t seed = 0;
};

struct TuneResult {
    std::vector<TuneEntry> ranked;  ///< ascending validation MSE, lexicographic tie-break
    std::size_t evaluated = 0;
};

/// Seed for one configuration, derived from the search seed and the config tuple.
std::uint64_t config_seed(const HyperConfig& config, std::uint64_t seed);

/// Configurations a tune() call would evaluate, in evaluation order.
std::vector<HyperConfig> select_configs(const SearchSpace& space, int input_length, const TuneOptions& options);

/// Trains one configuration on the dataset's training split and scores the validation split.
TuneEntry evaluate_config(const EnsembleDataset& dataset, const TargetScaler& targets, const HyperConfig& config,
                          const TuneOptions& options, nn::InverseModel* trained = nullptr);

TuneResult tune(const EnsembleDataset& dataset, const TargetScaler& targets, const SearchSpace& space,
                const TuneOptions& options);

/// Sorts entries by validation MSE, then config tuple.
void rank_entries(std::vector<TuneEntry>& entries);

/// Text table: rank, config fields, validation MSE, weight count.
std::string format_tune_report(const TuneResult& result);
TuneResult parse_tune_report(const std::string& text);

}  // namespace hydroinv
