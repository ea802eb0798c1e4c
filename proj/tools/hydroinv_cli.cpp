// hydroinv: command-line driver for the ensemble / inverse-model / GLUE workflow.
//
// Every command reads a JSON run config (--config), writes its artifacts
// into the output directory (--out) and leaves a manifest_<command>.json
// describing inputs, outputs and the seed used.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "hydroinv/calibrate.hpp"
#include "hydroinv/ensemble.hpp"
#include "hydroinv/forcing.hpp"
#include "hydroinv/io.hpp"
#include "hydroinv/metrics.hpp"
#include "hydroinv/rng.hpp"
#include "hydroinv/run_config.hpp"
#include "hydroinv/sensitivity.hpp"
#include "hydroinv/tuner.hpp"

namespace fs = std::filesystem;
using namespace hydroinv;

namespace {

struct Context {
    RunConfig cfg;
    std::string config_text;
    fs::path out;

    std::string path(const std::string& name) const { return (out / name).string(); }
    Manifest manifest(const std::string& command) const {
        Manifest m;
        m.command = command;
        m.seed = cfg.seed;
        m.config_digest = io::digest(config_text);
        return m;
    }
};

// Stream salts so each stage draws from its own named stream of the run seed.
enum Stream : std::uint64_t { kForcing = 1, kSample, kSplit, kTruth, kNoise, kTune, kSweep };

std::uint64_t stream_seed(const RunConfig& c, Stream s) { return mix_seed(c.seed, s); }

std::string require(const Context& ctx, const std::string& name, const std::string& producer) {
    const auto p = ctx.path(name);
    if (!fs::exists(p)) throw InputError("missing artifact " + p + "; run `" + producer + "` first");
    return p;
}

ForcingSeries load_run_forcing(const Context& ctx, Manifest& m) {
    std::string p = ctx.cfg.forcing;
    if (!fs::exists(p)) p = require(ctx, "forcing.csv", "gen-forcing");
    m.inputs[p] = io::file_digest(p);
    return load_forcing_file(p, ctx.cfg.site);
}

DischargeSeries load_observations(const Context& ctx, Manifest& m) {
    std::string p = ctx.cfg.observations;
    if (!fs::exists(p)) {
        p = ctx.path("observations.csv");
        if (!fs::exists(p)) {
            throw InputError("missing observations " + ctx.cfg.observations +
                             "; provide a file or run `simulate --name observations` first");
        }
    }
    m.inputs[p] = io::file_digest(p);
    return read_series(p);
}

Window calibration_window(const RunConfig& c) { return {c.calibration_start(), c.calibration_days}; }
Window validation_window(const RunConfig& c) {
    return {c.calibration_start() + std::chrono::days(c.calibration_days), c.validation_days};
}

std::vector<double> slice(const DischargeSeries& s, const Window& w, const std::string& what) {
    const auto off = (w.start - s.start).count();
    if (off < 0 || static_cast<std::size_t>(off + w.days) > s.size()) {
        throw InputError(what + " do not cover " + format_date(w.start) + ".." + format_date(w.end()));
    }
    return {s.q_m3s.begin() + off, s.q_m3s.begin() + off + w.days};
}

EnsembleDataset load_dataset(const Context& ctx, Manifest& m) {
    const auto pp = require(ctx, "parameters.csv", "sample");
    const auto qp = require(ctx, "ensemble_discharge.csv", "run-ensemble");
    m.inputs[pp] = io::file_digest(pp);
    m.inputs[qp] = io::file_digest(qp);
    const auto sets = read_parameter_sets(pp);
    const Matrix q = io::read_matrix_file(qp, false);
    return assemble(q, sets, ctx.cfg.split, stream_seed(ctx.cfg, kSplit), ctx.cfg.calibration_start());
}

std::vector<std::string> model_dirs(const Context& ctx) {
    const auto root = require(ctx, "models", "train");
    std::vector<std::string> dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) dirs.push_back(e.path().string());
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw InputError("no trained models under " + root + "; run `train` first");
    return dirs;
}

std::vector<Estimator> load_estimators(const Context& ctx, Manifest& m) {
    std::vector<Estimator> out;
    for (const auto& d : model_dirs(ctx)) {
        m.inputs[d + "/weights.f64"] = io::file_digest(d + "/weights.f64");
        out.push_back(load_estimator(d));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_gen_forcing(Context& ctx) {
    auto m = ctx.manifest("gen-forcing");
    ClimateSpec climate;
    const auto f = generate_forcing(stream_seed(ctx.cfg, kForcing), ctx.cfg.forcing_days(), climate, ctx.cfg.site);
    write_forcing_file(ctx.path("forcing.csv"), f);
    m.outputs["forcing.csv"];
    m.notes["days"] = std::to_string(f.size());
    m.notes["start"] = format_date(f.days.front().date);
    write_manifest(ctx.out.string(), m);
}

void cmd_sample(Context& ctx, int n) {
    auto m = ctx.manifest("sample");
    if (n <= 0) n = ctx.cfg.ensemble_size;
    const auto sets = sample_uniform(ParameterSpace::standard(), n, stream_seed(ctx.cfg, kSample));
    write_parameter_sets(ctx.path("parameters.csv"), sets);
    m.outputs["parameters.csv"];
    m.notes["realizations"] = std::to_string(n);
    write_manifest(ctx.out.string(), m);
}

void cmd_simulate(Context& ctx, const std::string& params_file, std::size_t row, bool truth, double noise,
                  const std::string& name) {
    auto m = ctx.manifest("simulate");
    const auto forcing = load_run_forcing(ctx, m);
    ParameterSet set;
    if (truth) {
        set = sample_uniform(ParameterSpace::standard(), 1, stream_seed(ctx.cfg, kTruth)).front();
        write_parameter_sets(ctx.path(name + "_parameters.csv"), std::vector<ParameterSet>{set});
        m.outputs[name + "_parameters.csv"];
    } else if (!params_file.empty()) {
        const auto sets = read_parameter_sets(params_file);
        if (row >= sets.size()) throw InputError(params_file + " has no row " + std::to_string(row));
        set = sets[row];
        m.inputs[params_file] = io::file_digest(params_file);
    } else {
        set = ParameterSet::midpoint();
    }
    auto q = simulate(set, forcing, ctx.cfg.warmup_days);
    if (noise > 0.0) {
        const Matrix noisy = perturb(q.q_m3s, {noise, 1, stream_seed(ctx.cfg, kNoise)});
        const auto r = noisy.row(0);
        q.q_m3s.assign(r.begin(), r.end());
        m.notes["noise_level"] = io::format_double(noise);
    }
    write_series(ctx.path(name + ".csv"), q.start, q.q_m3s);
    m.outputs[name + ".csv"];
    write_manifest(ctx.out.string(), m);
}

void cmd_run_ensemble(Context& ctx) {
    auto m = ctx.manifest("run-ensemble");
    const auto forcing = load_run_forcing(ctx, m);
    const auto pp = require(ctx, "parameters.csv", "sample");
    m.inputs[pp] = io::file_digest(pp);
    const auto sets = read_parameter_sets(pp);
    const Matrix full = run_ensemble(sets, forcing, ctx.cfg.warmup_days);
    const auto days = static_cast<std::size_t>(ctx.cfg.calibration_days);
    if (full.cols() < days) throw InputError("forcing is too short for the calibration window");
    Matrix q(full.rows(), days);
    for (std::size_t i = 0; i < full.rows(); ++i) q.set_row(i, full.row(i).subspan(0, days));
    io::write_matrix_file(ctx.path("ensemble_discharge.csv"), q);

    const auto d = assemble(q, sets, ctx.cfg.split, stream_seed(ctx.cfg, kSplit), ctx.cfg.calibration_start());
    std::ostringstream split;
    split << "realization,split\n";
    std::vector<std::string> label(q.rows());
    for (auto i : d.train) label[i] = "train";
    for (auto i : d.validation) label[i] = "validation";
    for (auto i : d.test) label[i] = "test";
    for (std::size_t i = 0; i < label.size(); ++i) split << i << ',' << label[i] << '\n';
    io::write_text_file(ctx.path("split.csv"), split.str());

    const auto s = summarize_ensemble(q);
    Matrix summary(2, days);
    summary.set_row(0, s.mean);
    summary.set_row(1, s.stddev);
    io::write_matrix_file(ctx.path("ensemble_summary.csv"), summary);

    Matrix scaler(2, days);
    scaler.set_row(0, d.features.mean());
    scaler.set_row(1, d.features.stddev());
    io::write_matrix_file(ctx.path("feature_scaler.csv"), scaler);

    m.outputs["ensemble_discharge.csv"];
    m.outputs["split.csv"];
    m.outputs["ensemble_summary.csv"];
    m.outputs["feature_scaler.csv"];
    m.notes["fractions"] = io::format_double(ctx.cfg.split.train) + "/" + io::format_double(ctx.cfg.split.validation) +
                           "/" + io::format_double(ctx.cfg.split.test);
    m.notes["split_seed"] = std::to_string(stream_seed(ctx.cfg, kSplit));
    m.notes["split"] = std::to_string(d.train.size()) + "/" + std::to_string(d.validation.size()) + "/" +
                       std::to_string(d.test.size());
    m.notes["calibration_start"] = format_date(ctx.cfg.calibration_start());
    write_manifest(ctx.out.string(), m);
}

void cmd_sensitivity(Context& ctx) {
    auto m = ctx.manifest("sensitivity");
    const auto d = load_dataset(ctx, m);
    FeatureSpec spec;
    spec.bins = ctx.cfg.mi_bins;
    if (ctx.cfg.mi_per_time_step) spec.mode = FeatureMode::PerTimeStep;
    const auto r = rank_parameters(d, spec);
    io::write_text_file(ctx.path("sensitivity.csv"), format_ranking(r));
    m.outputs["sensitivity.csv"];
    write_manifest(ctx.out.string(), m);
}

TuneOptions tune_options(const RunConfig& c) {
    TuneOptions o;
    o.budget = c.tune_budget;
    o.top_k = c.top_k;
    o.seed = stream_seed(c, kTune);
    o.epoch_cap = c.epoch_cap;
    return o;
}

void cmd_tune(Context& ctx) {
    auto m = ctx.manifest("tune");
    const auto d = load_dataset(ctx, m);
    const TargetScaler targets(ParameterSpace::standard(), ctx.cfg.target_columns());
    const auto r = tune(d, targets, SearchSpace{}, tune_options(ctx.cfg));
    io::write_text_file(ctx.path("tune_report.csv"), format_tune_report(r));
    m.outputs["tune_report.csv"];
    write_manifest(ctx.out.string(), m);
}

void cmd_train(Context& ctx) {
    auto m = ctx.manifest("train");
    const auto d = load_dataset(ctx, m);
    const TargetScaler targets(ParameterSpace::standard(), ctx.cfg.target_columns());
    std::vector<HyperConfig> configs;
    if (fs::exists(ctx.path("tune_report.csv"))) {
        m.inputs[ctx.path("tune_report.csv")] = io::file_digest(ctx.path("tune_report.csv"));
        for (const auto& e : parse_tune_report(io::read_text_file(ctx.path("tune_report.csv"))).ranked) {
            configs.push_back(e.config);
        }
    } else {
        configs.push_back(ctx.cfg.model);
    }
    fs::remove_all(ctx.path("models"));
    std::ostringstream history;
    history << "model,epoch,train_mse,validation_mse\n";
    const auto opts = tune_options(ctx.cfg);
    for (std::size_t k = 0; k < configs.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "rank_%02zu", k + 1);
        Estimator e;
        e.label = name;
        e.features = d.features;
        e.targets = targets;
        const auto entry = evaluate_config(d, targets, configs[k], opts, &e.model);
        save_estimator(e, ctx.path(std::string("models/") + name));
        m.outputs[std::string("models/") + name + "/weights.f64"];
        m.notes[std::string(name)] = configs[k].label() + " val_mse=" + io::format_double(entry.validation_mse);
        std::cerr << name << ' ' << configs[k].label() << " validation mse " << entry.validation_mse << '\n';
    }
    write_manifest(ctx.out.string(), m);
}

void cmd_estimate(Context& ctx) {
    auto m = ctx.manifest("estimate");
    const auto obs = load_observations(ctx, m);
    const auto q = slice(obs, calibration_window(ctx.cfg), "observations");
    const auto models = load_estimators(ctx, m);
    std::vector<ParameterSet> sets;
    Matrix raw(models.size(), models[0].targets.width());
    std::ostringstream flags;
    flags << "model,parameter,raw_scaled,clamped\n";
    for (std::size_t k = 0; k < models.size(); ++k) {
        const auto e = estimate(models[k], q);
        sets.push_back(e.set);
        raw.set_row(k, e.raw_scaled);
        for (std::size_t j = 0; j < e.raw_scaled.size(); ++j) {
            flags << models[k].label << ',' << ParameterSpace::standard()[models[k].targets.columns()[j]].name << ','
                  << io::format_double(e.raw_scaled[j]) << ',' << (e.clamped[j] ? 1 : 0) << '\n';
        }
    }
    write_parameter_sets(ctx.path("estimates.csv"), sets);
    io::write_text_file(ctx.path("estimates_raw.csv"), flags.str());
    m.outputs["estimates.csv"];
    m.outputs["estimates_raw.csv"];
    write_manifest(ctx.out.string(), m);
}

void cmd_noise_sweep(Context& ctx) {
    auto m = ctx.manifest("noise-sweep");
    const auto obs = load_observations(ctx, m);
    const auto q = slice(obs, calibration_window(ctx.cfg), "observations");
    const auto models = load_estimators(ctx, m);
    std::vector<double> levels{0.0};
    levels.insert(levels.end(), ctx.cfg.noise_levels.begin(), ctx.cfg.noise_levels.end());
    const auto r = noise_sweep(models, q, levels, {0.0, ctx.cfg.noise_realizations, stream_seed(ctx.cfg, kSweep)});
    io::write_text_file(ctx.path("noise_sweep.csv"), format_noise_sweep(r));
    m.outputs["noise_sweep.csv"];
    write_manifest(ctx.out.string(), m);
}

void cmd_glue(Context& ctx) {
    auto m = ctx.manifest("glue");
    const auto obs = load_observations(ctx, m);
    const auto q = slice(obs, calibration_window(ctx.cfg), "observations");
    const auto pp = require(ctx, "parameters.csv", "sample");
    const auto qp = require(ctx, "ensemble_discharge.csv", "run-ensemble");
    m.inputs[pp] = io::file_digest(pp);
    m.inputs[qp] = io::file_digest(qp);
    const auto sets = read_parameter_sets(pp);
    const auto b = glue_select(io::read_matrix_file(qp, false), q, ctx.cfg.glue_threshold, ctx.cfg.top_k);
    std::ostringstream os;
    os << "realization,kge,behavioral\n";
    for (std::size_t i = 0; i < b.metric.size(); ++i) {
        os << i << ',' << io::format_double(b.metric[i]) << ',' << (b.contains(i) ? 1 : 0) << '\n';
    }
    io::write_text_file(ctx.path("glue_members.csv"), os.str());
    std::vector<ParameterSet> top;
    for (auto i : b.top) top.push_back(sets[i]);
    if (top.empty()) throw InputError("GLUE: no behavioral members at threshold " + io::format_double(b.threshold));
    write_parameter_sets(ctx.path("glue_sets.csv"), top);
    m.outputs["glue_members.csv"];
    m.outputs["glue_sets.csv"];
    m.notes["behavioral"] = std::to_string(b.members.size());
    write_manifest(ctx.out.string(), m);
}

CalibrationResult evaluate_sets(const Context& ctx, Manifest& m, const std::string& file, const std::string& producer,
                                const std::string& method) {
    const auto p = require(ctx, file, producer);
    m.inputs[p] = io::file_digest(p);
    const auto sets = read_parameter_sets(p);
    const auto forcing = load_run_forcing(ctx, m);
    const auto obs = load_observations(ctx, m);
    const auto cw = calibration_window(ctx.cfg);
    const auto vw = validation_window(ctx.cfg);
    return calibrate_and_validate(sets, forcing, cw, vw, slice(obs, cw, "observations"),
                                  slice(obs, vw, "observations"), ctx.cfg.warmup_days, method);
}

void cmd_evaluate(Context& ctx, const std::string& method) {
    auto m = ctx.manifest("evaluate");
    const bool dl = method == "dl";
    if (!dl && method != "glue") throw InputError("--method must be dl or glue");
    const auto r = dl ? evaluate_sets(ctx, m, "estimates.csv", "estimate", "dl")
                      : evaluate_sets(ctx, m, "glue_sets.csv", "glue", "glue");
    std::ostringstream os;
    for (const auto* p : {&r.calibration, &r.validation}) {
        for (std::size_t i = 0; i < p->reports.size(); ++i) {
            os << "set=" << i + 1 << (i == p->best ? " best" : "") << '\n' << format_report(p->reports[i]);
        }
        os << "band_width=" << io::format_double(p->band.mean_width) << '\n'
           << "coverage=" << io::format_double(p->band.coverage) << "\n\n";
    }
    const auto name = "evaluation_" + method + ".txt";
    io::write_text_file(ctx.path(name), os.str());
    m.outputs[name];
    m.command = "evaluate-" + method;
    write_manifest(ctx.out.string(), m);
}

void cmd_compare(Context& ctx) {
    auto m = ctx.manifest("compare");
    require(ctx, "glue_sets.csv", "glue");
    require(ctx, "estimates.csv", "estimate");
    const auto dl = evaluate_sets(ctx, m, "estimates.csv", "estimate", "dl");
    const auto glue = evaluate_sets(ctx, m, "glue_sets.csv", "glue", "glue");
    io::write_text_file(ctx.path("comparison.txt"), format_comparison(compare(dl, glue)));
    m.outputs["comparison.txt"];
    write_manifest(ctx.out.string(), m);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inverse calibration of a conceptual rainfall-runoff model with 1D CNNs and GLUE"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Override the run seed");
    app.add_option("--out", out, "Output directory (overrides config `out`)");

    auto* gen = app.add_subcommand("gen-forcing", "Generate synthetic daily forcing covering warm-up, calibration and validation");
    auto* sample = app.add_subcommand("sample", "Draw uniform parameter sets within the calibration bounds");
    int n = 0;
    sample->add_option("-n,--size", n, "Ensemble size (default: config ensemble_size)");

    auto* sim = app.add_subcommand("simulate", "Run the model for one parameter set");
    std::string params_file, name = "simulated";
    std::size_t row = 0;
    bool truth = false;
    double noise = 0.0;
    sim->add_option("--params", params_file, "Parameter-set CSV (default: bound midpoints)");
    sim->add_option("--row", row, "Row of --params to use");
    sim->add_flag("--truth", truth, "Draw a fresh random parameter set from the truth stream");
    sim->add_option("--noise", noise, "Relative observation error level applied to the output");
    sim->add_option("--name", name, "Output basename (use `observations` for twin runs)");

    auto* ens = app.add_subcommand("run-ensemble", "Simulate every sampled set and record the data split");
    auto* sens = app.add_subcommand("sensitivity", "Rank parameters by mutual information");
    auto* tn = app.add_subcommand("tune", "Budgeted hyperparameter search");
    int budget = -1, epoch_cap = -1;
    tn->add_option("--budget", budget, "Random configurations to evaluate");
    tn->add_option("--epoch-cap", epoch_cap, "Truncate every configuration's epochs");
    auto* tr = app.add_subcommand("train", "Train the top configurations (or the configured model)");
    tr->add_option("--epoch-cap", epoch_cap, "Truncate every configuration's epochs");
    auto* est = app.add_subcommand("estimate", "Estimate parameters from the observations with every trained model");
    auto* sweep = app.add_subcommand("noise-sweep", "Estimate parameters from noisy copies of the observations");
    auto* glue = app.add_subcommand("glue", "Select behavioral ensemble members by KGE");
    auto* ev = app.add_subcommand("evaluate", "Score estimated or behavioral sets over both periods");
    std::string method = "dl";
    ev->add_option("--method", method, "dl or glue")->check(CLI::IsMember({"dl", "glue"}));
    auto* cmp = app.add_subcommand("compare", "Compare DL and GLUE calibrations");

    CLI11_PARSE(app, argc, argv);

    try {
        Context ctx;
        if (!config_path.empty()) ctx.config_text = io::read_text_file(config_path);
        ctx.cfg = ctx.config_text.empty() ? RunConfig{} : parse_run_config(ctx.config_text);
        if (seed) ctx.cfg.seed = *seed;
        if (!out.empty()) ctx.cfg.out = out;
        if (budget >= 0) ctx.cfg.tune_budget = budget;
        if (epoch_cap >= 0) ctx.cfg.epoch_cap = epoch_cap;
        ctx.config_text = dump_run_config(ctx.cfg);
        ctx.out = ctx.cfg.out;
        fs::create_directories(ctx.out);

        if (*gen) cmd_gen_forcing(ctx);
        else if (*sample) cmd_sample(ctx, n);
        else if (*sim) cmd_simulate(ctx, params_file, row, truth, noise, name);
        else if (*ens) cmd_run_ensemble(ctx);
        else if (*sens) cmd_sensitivity(ctx);
        else if (*tn) cmd_tune(ctx);
        else if (*tr) cmd_train(ctx);
        else if (*est) cmd_estimate(ctx);
        else if (*sweep) cmd_noise_sweep(ctx);
        else if (*glue) cmd_glue(ctx);
        else if (*ev) cmd_evaluate(ctx, method);
        else if (*cmp) cmd_compare(ctx);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
