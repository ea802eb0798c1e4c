#include "hydroinv/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hydroinv/io.hpp"
#include "hydroinv/rng.hpp"

namespace hydroinv {

Matrix perturb(std::span<const double> q, const NoiseSpec& spec) {
    if (!(spec.level >= 0.0)) throw InputError("noise level must be non-negative");
    if (spec.realizations < 1) throw InputError("noise realizations must be >= 1");
    for (double v : q) {
        if (!std::isfinite(v)) throw InputError("perturb: discharge contains a non-finite value");
    }
    Matrix out(static_cast<std::size_t>(spec.realizations), q.size());
    if (spec.level == 0.0) {
        for (std::size_t r = 0; r < out.rows(); ++r) out.set_row(r, q);
        return out;
    }
    const double eps = spec.epsilon();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t t = 0; t < q.size(); ++t) out(r, t) = std::max(0.0, q[t] + eps * q[t] * n01(rng));
    }
    return out;
}

FiveNumber five_number(std::vector<double> v) {
    if (v.empty()) throw InputError("five-number summary of an empty sample");
    std::sort(v.begin(), v.end());
    const auto q = [&](double p) {
        const double pos = p * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    return {v.front(), q(0.25), q(0.5), q(0.75), v.back()};
}

// ---------------------------------------------------------------------------
// Estimators

void save_estimator(const Estimator& e, const std::string& dir) {
    nn::save_model(e.model, dir, "scalers.json");
    nlohmann::ordered_json j;
    j["label"] = e.label;
    j["feature_mean"] = e.features.mean();
    j["feature_std"] = e.features.stddev();
    j["target_columns"] = e.targets.columns();
    io::write_text_file((std::filesystem::path(dir) / "scalers.json").string(), j.dump() + "\n");
}

Estimator load_estimator(const std::string& dir, const ParameterSpace& space) {
    const auto path = (std::filesystem::path(dir) / "scalers.json").string();
    if (!std::filesystem::exists(path)) throw InputError("missing " + path + " (produced by `train`)");
    Estimator e;
    e.model = nn::load_model(dir);
    try {
        const auto j = nlohmann::json::parse(io::read_text_file(path));
        e.label = j.value("label", "");
        e.features = FeatureScaler::from_stats(j.at("feature_mean").get<std::vector<double>>(),
                                               j.at("feature_std").get<std::vector<double>>());
        e.targets = TargetScaler(space, j.at("target_columns").get<std::vector<std::size_t>>());
    } catch (const nlohmann::json::exception& ex) {
        throw InputError(path + ": " + ex.what());
    }
    return e;
}

namespace {

Estimate unscale_row(const Estimator& e, std::span<const double> scaled) {
    Estimate out{ParameterSet::midpoint(), std::vector<double>(scaled.begin(), scaled.end()),
                 std::vector<bool>(scaled.size(), false)};
    for (std::size_t j = 0; j < scaled.size(); ++j) {
        double s = scaled[j];
        if (s < 0.0 || s > 1.0) {
            out.clamped[j] = true;
            s = std::clamp(s, 0.0, 1.0);
        }
        out.set[e.targets.columns()[j]] = e.targets.lower(j) + s * (e.targets.upper(j) - e.targets.lower(j));
    }
    return out;
}

void check_estimator(const Estimator& e, std::size_t len) {
    if (e.model.updates == 0) throw InputError("estimate: model is untrained");
    if (!e.features.fitted()) throw InputError("estimate: feature scaler is not fitted");
    if (len != static_cast<std::size_t>(e.model.arch().input_length)) {
        throw InputError("estimate: discharge length " + std::to_string(len) + " does not match model input " +
                         std::to_string(e.model.arch().input_length));
    }
    if (e.targets.width() != static_cast<std::size_t>(e.model.arch().outputs)) {
        throw InputError("estimate: target scaler width does not match model outputs");
    }
}

}  // namespace

Estimate estimate(const Estimator& e, std::span<const double> q) {
    check_estimator(e, q.size());
    Matrix x(1, q.size());
    x.set_row(0, e.features.transform_row(q));
    const Matrix y = nn::predict(e.model, x);
    return unscale_row(e, y.row(0));
}

std::vector<Estimate> estimate_many(const Estimator& e, const Matrix& q) {
    check_estimator(e, q.cols());
    const Matrix y = nn::predict(e.model, e.features.transform(q));
    std::vector<Estimate> out;
    out.reserve(y.rows());
    for (std::size_t r = 0; r < y.rows(); ++r) out.push_back(unscale_row(e, y.row(r)));
    return out;
}

// ---------------------------------------------------------------------------
// Noise sweep

NoiseSweepResult noise_sweep(std::span<const Estimator> models, std::span<const double> q,
                             const std::vector<double>& levels, const NoiseSpec& spec) {
    if (models.empty()) throw InputError("noise sweep needs at least one model");
    const auto& cols = models[0].targets.columns();
    for (const auto& m : models) {
        if (m.targets.columns() != cols) throw InputError("noise sweep models estimate different parameters");
        check_estimator(m, q.size());
    }
    NoiseSweepResult r;
    for (std::size_t c : cols) r.parameters.push_back(ParameterSpace::standard()[c].name);
    for (std::size_t k = 0; k < models.size(); ++k) {
        r.models.push_back(models[k].label.empty() ? "model" + std::to_string(k + 1) : models[k].label);
    }
    const std::size_t width = cols.size();
    for (double level : levels) {
        NoiseSpec s = spec;
        s.level = level;
        s.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(std::llround(level * 1e6)));
        const Matrix noisy = perturb(q, s);

        NoiseSweepLevel L;
        L.level = level;
        std::vector<std::vector<double>> pooled(width);
        for (const auto& m : models) {
            const auto est = estimate_many(m, noisy);
            std::vector<FiveNumber> phys(width), scal(width);
            std::vector<double> means(width, 0.0);
            for (std::size_t j = 0; j < width; ++j) {
                std::vector<double> pv, sv;
                for (const auto& e : est) {
                    pv.push_back(e.set[cols[j]]);
                    sv.push_back(std::clamp(e.raw_scaled[j], 0.0, 1.0));
                }
                means[j] = std::accumulate(pv.begin(), pv.end(), 0.0) / static_cast<double>(pv.size());
                pooled[j].insert(pooled[j].end(), pv.begin(), pv.end());
                phys[j] = five_number(std::move(pv));
                scal[j] = five_number(std::move(sv));
            }
            L.physical.push_back(std::move(phys));
            L.scaled.push_back(std::move(scal));
            L.model_means.push_back(std::move(means));
        }
        for (auto& p : pooled) L.pooled_physical.push_back(five_number(std::move(p)));
        r.levels.push_back(std::move(L));
    }
    return r;
}

std::string format_noise_sweep(const NoiseSweepResult& r) {
    std::ostringstream os;
    os << "level,model,parameter,min,q1,median,q3,max,mean\n";
    for (const auto& L : r.levels) {
        for (std::size_t k = 0; k < r.models.size(); ++k) {
            for (std::size_t j = 0; j < r.parameters.size(); ++j) {
                const auto& f = L.physical[k][j];
                os << io::format_double(L.level) << ',' << r.models[k] << ',' << r.parameters[j] << ','
                   << io::format_double(f.min) << ',' << io::format_double(f.q1) << ','
                   << io::format_double(f.median) << ',' << io::format_double(f.q3) << ','
                   << io::format_double(f.max) << ',' << io::format_double(L.model_means[k][j]) << '\n';
            }
        }
        for (std::size_t j = 0; j < r.parameters.size(); ++j) {
            const auto& f = L.pooled_physical[j];
            os << io::format_double(L.level) << ",pooled," << r.parameters[j] << ',' << io::format_double(f.min)
               << ',' << io::format_double(f.q1) << ',' << io::format_double(f.median) << ','
               << io::format_double(f.q3) << ',' << io::format_double(f.max) << ",\n";
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// GLUE

bool BehavioralSet::contains(std::size_t i) const { return std::binary_search(members.begin(), members.end(), i); }

BehavioralSet glue_select(const Matrix& discharge, std::span<const double> obs, double threshold, std::size_t top_k) {
    if (discharge.rows() == 0) throw InputError("GLUE: empty ensemble");
    if (discharge.cols() != obs.size()) {
        throw InputError("GLUE: observation length " + std::to_string(obs.size()) + " does not match simulated length " +
                         std::to_string(discharge.cols()));
    }
    BehavioralSet b;
    b.threshold = threshold;
    b.metric.resize(discharge.rows());
    const auto n = static_cast<std::ptrdiff_t>(discharge.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        b.metric[static_cast<std::size_t>(i)] = kge(obs, discharge.row(static_cast<std::size_t>(i)));
    }
    for (std::size_t i = 0; i < b.metric.size(); ++i) {
        if (b.metric[i] >= threshold) b.members.push_back(i);
    }
    b.top = b.members;
    std::stable_sort(b.top.begin(), b.top.end(), [&](std::size_t x, std::size_t y) { return b.metric[x] > b.metric[y]; });
    if (b.top.size() > top_k) b.top.resize(top_k);
    return b;
}

// ---------------------------------------------------------------------------
// Calibration / validation

bool overlaps(const Window& a, const Window& b) { return a.start <= b.end() && b.start <= a.end(); }

namespace {

PeriodResult score_period(const std::string& label, const Window& w, const Matrix& sims, std::span<const double> obs,
                          std::size_t best) {
    PeriodResult p;
    p.period = label;
    p.window = w;
    p.simulated = sims;
    p.best = best;
    for (std::size_t i = 0; i < sims.rows(); ++i) p.reports.push_back(evaluate(obs, sims.row(i), label));
    if (sims.rows() >= 3) {
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < sims.rows(); ++i) {
            if (i != best) rest.push_back(i);
        }
        p.band = band_stats(obs, sims.select_rows(rest));
    } else if (sims.rows() == 2) {
        p.band = band_stats(obs, sims);
    }
    return p;
}

}  // namespace

CalibrationResult calibrate_and_validate(std::span<const ParameterSet> sets, const ForcingSeries& forcing,
                                         const Window& cal, const Window& val, std::span<const double> obs_cal,
                                         std::span<const double> obs_val, int warmup_days, const std::string& method) {
    if (sets.empty()) throw InputError("calibrate: no parameter sets");
    if (cal.days < 2 || val.days < 2) throw InputError("calibrate: windows must span at least 2 days");
    if (overlaps(cal, val)) throw InputError("calibrate: calibration and validation windows overlap");
    if (obs_cal.size() != static_cast<std::size_t>(cal.days) || obs_val.size() != static_cast<std::size_t>(val.days)) {
        throw InputError("calibrate: observation length does not match its window");
    }
    if (forcing.empty()) throw InputError("calibrate: empty forcing");
    const Date sim_start = forcing.days.front().date + std::chrono::days(warmup_days);
    const auto offset = [&](const Window& w, const char* name) {
        const auto off = (w.start - sim_start).count();
        if (off < 0 || static_cast<std::size_t>(off + w.days) > forcing.size() - static_cast<std::size_t>(warmup_days)) {
            throw InputError(std::string("calibrate: ") + name + " window " + format_date(w.start) + ".." +
                             format_date(w.end()) + " is not covered by the forcing after warm-up");
        }
        return static_cast<std::size_t>(off);
    };
    const std::size_t oc = offset(cal, "calibration");
    const std::size_t ov = offset(val, "validation");

    Matrix full = run_ensemble(sets, forcing, warmup_days);
    Matrix mc(sets.size(), static_cast<std::size_t>(cal.days)), mv(sets.size(), static_cast<std::size_t>(val.days));
    for (std::size_t i = 0; i < sets.size(); ++i) {
        const auto row = full.row(i);
        mc.set_row(i, row.subspan(oc, static_cast<std::size_t>(cal.days)));
        mv.set_row(i, row.subspan(ov, static_cast<std::size_t>(val.days)));
    }
    std::vector<double> cal_kge(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) cal_kge[i] = kge(obs_cal, mc.row(i));
    const auto best = static_cast<std::size_t>(std::max_element(cal_kge.begin(), cal_kge.end()) - cal_kge.begin());

    CalibrationResult r;
    r.method = method;
    r.sets.assign(sets.begin(), sets.end());
    r.calibration = score_period("calibration", cal, mc, obs_cal, best);
    r.validation = score_period("validation", val, mv, obs_val, best);
    return r;
}

// ---------------------------------------------------------------------------
// Comparison

namespace {

MethodSummary summarize(const CalibrationResult& c, const PeriodResult& p) {
    MethodSummary s;
    s.method = c.method;
    s.best = p.reports.at(p.best);
    std::vector<double> r2, nse_v, lognse_v, kge_v;
    for (const auto& m : p.reports) {
        r2.push_back(m.r2);
        nse_v.push_back(m.nse);
        lognse_v.push_back(m.lognse);
        kge_v.push_back(m.kge);
    }
    s.r2 = five_number(r2);
    s.nse = five_number(nse_v);
    s.lognse = five_number(lognse_v);
    s.kge = five_number(kge_v);
    s.band = p.band;
    return s;
}

bool same_window(const Window& a, const Window& b) { return a.start == b.start && a.days == b.days; }

}  // namespace

ComparisonReport compare(const CalibrationResult& a, const CalibrationResult& b, const ParameterSpace& space) {
    if (!same_window(a.calibration.window, b.calibration.window) ||
        !same_window(a.validation.window, b.validation.window)) {
        throw InputError("compare: the two results cover different periods");
    }
    ComparisonReport r;
    r.parameters = space.names();
    for (std::size_t j = 0; j < space.size(); ++j) {
        std::vector<double> va, vb;
        for (const auto& s : a.sets) va.push_back(s[j]);
        for (const auto& s : b.sets) vb.push_back(s[j]);
        r.iqr_a.push_back(five_number(va).iqr());
        r.iqr_b.push_back(five_number(vb).iqr());
    }
    r.periods.push_back({"calibration", summarize(a, a.calibration), summarize(b, b.calibration)});
    r.periods.push_back({"validation", summarize(a, a.validation), summarize(b, b.validation)});
    return r;
}

std::string format_comparison(const ComparisonReport& r) {
    std::ostringstream os;
    const auto f = io::format_double;
    for (const auto& p : r.periods) {
        os << "[period " << p.period << "]\n";
        os << "method,best_r2,best_nse,best_lognse,best_kge,median_r2,median_nse,median_lognse,median_kge,"
              "band_width,coverage\n";
        for (const auto* m : {&p.a, &p.b}) {
            os << m->method << ',' << f(m->best.r2) << ',' << f(m->best.nse) << ',' << f(m->best.lognse) << ','
               << f(m->best.kge) << ',' << f(m->r2.median) << ',' << f(m->nse.median) << ','
               << f(m->lognse.median) << ',' << f(m->kge.median) << ',' << f(m->band.mean_width) << ','
               << f(m->band.coverage) << '\n';
        }
        os << '\n';
    }
    const std::string na = r.periods.empty() ? "a" : r.periods[0].a.method;
    const std::string nb = r.periods.empty() ? "b" : r.periods[0].b.method;
    os << "[parameter spread]\nparameter,iqr_" << na << ",iqr_" << nb << '\n';
    for (std::size_t j = 0; j < r.parameters.size(); ++j) {
        os << r.parameters[j] << ',' << f(r.iqr_a[j]) << ',' << f(r.iqr_b[j]) << '\n';
    }
    os << "\n[reference]\n# reference best scores (r2,nse,lognse,kge): DL 0.53,0.67,0.87,0.74; GLUE 0.48,0.6,0.7,0.68\n";
    return os.str();
}

}  // namespace hydroinv
