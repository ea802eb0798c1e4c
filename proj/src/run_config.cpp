#include "hydroinv/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hydroinv/io.hpp"

namespace hydroinv {

using nlohmann::json;
using nlohmann::ordered_json;

Date RunConfig::calibration_start() const { return make_date(1998, 10, 1) + std::chrono::days(warmup_days); }

std::vector<std::size_t> RunConfig::target_columns(const ParameterSpace& space) const {
    std::vector<std::size_t> cols;
    if (targets == "all") {
        for (std::size_t j = 0; j < space.size(); ++j) cols.push_back(j);
    } else if (targets == "sensitive") {
        for (Param p : kSensitiveParams) cols.push_back(index(p));
    } else {
        for (auto name : io::split(targets)) cols.push_back(space.index_of(std::string(io::trim(name))));
    }
    return cols;
}

void RunConfig::validate() const {
    const auto fail = [](const std::string& field, const std::string& why) {
        throw InputError("config field '" + field + "': " + why);
    };
    if (ensemble_size < 1) fail("ensemble_size", "must be >= 1");
    if (split.train < 0 || split.validation < 0 || split.test < 0 ||
        std::abs(split.train + split.validation + split.test - 1.0) > 1e-9) {
        fail("split", "fractions must be non-negative and sum to 1");
    }
    if (warmup_days < 0) fail("warmup_days", "must be >= 0");
    if (calibration_days < 2) fail("calibration_days", "must be >= 2");
    if (validation_days < 2) fail("validation_days", "must be >= 2");
    if (!(site.area_km2 > 0)) fail("site.area_km2", "must be positive");
    if (top_k < 1) fail("top_k", "must be >= 1");
    if (noise_realizations < 1) fail("noise_realizations", "must be >= 1");
    for (double l : noise_levels) {
        if (!(l >= 0)) fail("noise_levels", "levels must be non-negative");
    }
    try {
        if (target_columns().empty()) fail("targets", "selects no parameters");
    } catch (const InputError& e) {
        if (std::string(e.what()).rfind("config field", 0) == 0) throw;
        fail("targets", e.what());
    }
    if (!(model.learning_rate > 0)) fail("model.learning_rate", "must be positive");
    if (model.epochs < 0) fail("model.epochs", "must be >= 0");
}

namespace {

template <typename T>
void get_if(const json& j, const char* key, T& out, const std::string& path = "") {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError("config field '" + path + key + "': wrong type");
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("config must be a JSON object");
    static const std::vector<std::string> known{
        "forcing", "observations", "out", "seed", "ensemble_size", "split", "warmup_days", "calibration_days",
        "validation_days", "site", "targets", "tune_budget", "top_k", "epoch_cap", "model", "noise_levels",
        "noise_realizations", "glue_threshold", "mi_bins", "mi_per_time_step"};
    for (const auto& [k, v] : j.items()) {
        if (std::find(known.begin(), known.end(), k) == known.end()) {
            throw InputError("config field '" + k + "': unknown field");
        }
    }
    RunConfig c;
    get_if(j, "forcing", c.forcing);
    get_if(j, "observations", c.observations);
    get_if(j, "out", c.out);
    get_if(j, "seed", c.seed);
    get_if(j, "ensemble_size", c.ensemble_size);
    if (j.contains("split")) {
        const auto& s = j["split"];
        get_if(s, "train", c.split.train, "split.");
        get_if(s, "validation", c.split.validation, "split.");
        get_if(s, "test", c.split.test, "split.");
    }
    get_if(j, "warmup_days", c.warmup_days);
    get_if(j, "calibration_days", c.calibration_days);
    get_if(j, "validation_days", c.validation_days);
    if (j.contains("site")) {
        const auto& s = j["site"];
        get_if(s, "area_km2", c.site.area_km2, "site.");
        get_if(s, "latitude_deg", c.site.latitude_deg, "site.");
        get_if(s, "soil_depth_mm", c.site.soil_depth_mm, "site.");
    }
    get_if(j, "targets", c.targets);
    get_if(j, "tune_budget", c.tune_budget);
    get_if(j, "top_k", c.top_k);
    get_if(j, "epoch_cap", c.epoch_cap);
    if (j.contains("model")) {
        const auto& m = j["model"];
        get_if(m, "n_layers", c.model.n_layers, "model.");
        get_if(m, "base_filters", c.model.base_filters, "model.");
        get_if(m, "base_kernel", c.model.base_kernel, "model.");
        get_if(m, "dropout", c.model.dropout, "model.");
        get_if(m, "learning_rate", c.model.learning_rate, "model.");
        get_if(m, "epochs", c.model.epochs, "model.");
    }
    get_if(j, "noise_levels", c.noise_levels);
    get_if(j, "noise_realizations", c.noise_realizations);
    get_if(j, "glue_threshold", c.glue_threshold);
    get_if(j, "mi_bins", c.mi_bins);
    get_if(j, "mi_per_time_step", c.mi_per_time_step);
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(io::read_text_file(path)); }

std::string dump_run_config(const RunConfig& c) {
    ordered_json j;
    j["forcing"] = c.forcing;
    j["observations"] = c.observations;
    j["out"] = c.out;
    j["seed"] = c.seed;
    j["ensemble_size"] = c.ensemble_size;
    j["split"] = {{"train", c.split.train}, {"validation", c.split.validation}, {"test", c.split.test}};
    j["warmup_days"] = c.warmup_days;
    j["calibration_days"] = c.calibration_days;
    j["validation_days"] = c.validation_days;
    j["site"] = {{"area_km2", c.site.area_km2},
                 {"latitude_deg", c.site.latitude_deg},
                 {"soil_depth_mm", c.site.soil_depth_mm}};
    j["targets"] = c.targets;
    j["tune_budget"] = c.tune_budget;
    j["top_k"] = c.top_k;
    j["epoch_cap"] = c.epoch_cap;
    j["model"] = {{"n_layers", c.model.n_layers},     {"base_filters", c.model.base_filters},
                  {"base_kernel", c.model.base_kernel}, {"dropout", c.model.dropout},
                  {"learning_rate", c.model.learning_rate}, {"epochs", c.model.epochs}};
    j["noise_levels"] = c.noise_levels;
    j["noise_realizations"] = c.noise_realizations;
    j["glue_threshold"] = c.glue_threshold;
    j["mi_bins"] = c.mi_bins;
    j["mi_per_time_step"] = c.mi_per_time_step;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

void write_parameter_sets(const std::string& path, std::span<const ParameterSet> sets, const ParameterSpace& space) {
    io::write_matrix_file(path, to_matrix(sets), space.names());
}

std::vector<ParameterSet> read_parameter_sets(const std::string& path, const ParameterSpace& space) {
    std::vector<std::string> header;
    const Matrix m = io::read_matrix_file(path, true, &header);
    if (header != space.names()) throw InputError(path + ": header does not list the " + std::to_string(space.size()) + " parameter names in order");
    auto sets = to_sets(m);
    for (std::size_t i = 0; i < sets.size(); ++i) {
        try {
            space.check(sets[i].values());
        } catch (const OutOfBoundsError& e) {
            throw InputError(path + " row " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return sets;
}

void write_series(const std::string& path, Date start, std::span<const double> q) {
    std::ostringstream os;
    os << "date,q_m3s\n";
    for (std::size_t t = 0; t < q.size(); ++t) {
        os << format_date(start + std::chrono::days(static_cast<int>(t))) << ',' << io::format_double(q[t]) << '\n';
    }
    io::write_text_file(path, os.str());
}

DischargeSeries read_series(const std::string& path) {
    std::istringstream is(io::read_text_file(path));
    std::string line;
    if (!std::getline(is, line) || io::trim(line) != "date,q_m3s") throw InputError(path + ": expected header date,q_m3s");
    DischargeSeries s;
    std::size_t lineno = 1;
    Date prev{};
    while (std::getline(is, line)) {
        ++lineno;
        if (io::trim(line).empty()) continue;
        const auto f = io::split(line);
        if (f.size() != 2) throw InputError(path + " line " + std::to_string(lineno) + ": expected 2 fields");
        try {
            const Date d = parse_date(io::trim(f[0]));
            if (s.q_m3s.empty()) s.start = d;
            else if (d != prev + std::chrono::days(1)) throw InputError("dates are not consecutive");
            prev = d;
            const double q = io::parse_double(io::trim(f[1]));
            if (!std::isfinite(q) || q < 0) throw InputError("discharge must be finite and non-negative");
            s.q_m3s.push_back(q);
        } catch (const std::exception& e) {
            throw InputError(path + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return s;
}

// ---------------------------------------------------------------------------

void write_manifest(const std::string& dir, Manifest m) {
    namespace fs = std::filesystem;
    for (auto& [name, digest] : m.outputs) {
        const auto p = fs::path(dir) / name;
        if (fs::is_regular_file(p)) digest = io::file_digest(p.string());
    }
    ordered_json j;
    j["command"] = m.command;
    j["seed"] = m.seed;
    j["config_digest"] = m.config_digest;
    j["formats"] = {{"forcing", "csv/date,prcp_mm,tmax_c,tmin_c/v1"},
                    {"parameters", "csv/21-name-header/v1"},
                    {"discharge", "csv/row-per-realization/v1"},
                    {"model", "manifest.json+f64le/v1"},
                    {"numbers", "%.17g"}};
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    if (!m.notes.empty()) j["notes"] = m.notes;
    io::write_text_file((fs::path(dir) / ("manifest_" + m.command + ".json")).string(), j.dump(2) + "\n");
}

Manifest read_manifest(const std::string& path) {
    json j;
    try {
        j = json::parse(io::read_text_file(path));
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
    Manifest m;
    m.command = j.at("command").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_digest = j.value("config_digest", "");
    m.inputs = j.value("inputs", std::map<std::string, std::string>{});
    m.outputs = j.value("outputs", std::map<std::string, std::string>{});
    m.notes = j.value("notes", std::map<std::string, std::string>{});
    return m;
}

}  // namespace hydroinv
