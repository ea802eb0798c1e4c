#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hydroinv/ensemble.hpp"
#include "hydroinv/forcing.hpp"
#include "hydroinv/tuner.hpp"

namespace hydroinv {

/// Run-wide settings. Loaded from a JSON file; every field is optional.
struct RunConfig {
    std::string forcing = "forcing.csv";
    std::string observations = "observations.csv";
    std::string out = "run";

    std::uint64_t seed = 20240101;
    int ensemble_size = 1000;
    SplitFractions split;
    int warmup_days = 365;
    int calibration_days = 3654;
    int validation_days = 2556;
    SiteConstants site;

    std::string targets = "sensitive";  ///< "sensitive", "all", or a comma-separated name list
    int tune_budget = 24;
    std::size_t top_k = 10;
    int epoch_cap = 0;
    HyperConfig model;                  ///< architecture used by `train` when no tune report exists

    std::vector<double> noise_levels{0.05, 0.10, 0.15, 0.20, 0.25};
    int noise_realizations = 100;
    double glue_threshold = 0.5;
    int mi_bins = 0;
    bool mi_per_time_step = false;

    int forcing_days() const { return warmup_days + calibration_days + validation_days; }
    Date calibration_start() const;
    std::vector<std::size_t> target_columns(const ParameterSpace& space = ParameterSpace::standard()) const;

    /// Throws InputError naming the offending field.
    void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string dump_run_config(const RunConfig& config);

/// Parameter sets as CSV with the parameter names as header.
void write_parameter_sets(const std::string& path, std::span<const ParameterSet> sets,
                          const ParameterSpace& space = ParameterSpace::standard());
std::vector<ParameterSet> read_parameter_sets(const std::string& path,
                                              const ParameterSpace& space = ParameterSpace::standard());

/// Dated discharge series: header `date,q_m3s`.
void write_series(const std::string& path, Date start, std::span<const double> q);
DischargeSeries read_series(const std::string& path);

/// Output manifest written next to every command's artifacts.
struct Manifest {
    std::string command;
    std::uint64_t seed = 0;
    std::string config_digest;
    std::map<std::string, std::string> inputs;   ///< file -> digest
    std::map<std::string, std::string> outputs;  ///< file -> digest
    std::map<std::string, std::string> notes;
};

/// Fills output digests from `dir` and writes manifest_<command>.json.
void write_manifest(const std::string& dir, Manifest manifest);
Manifest read_manifest(const std::string& path);

}  // namespace hydroinv
