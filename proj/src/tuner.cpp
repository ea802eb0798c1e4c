#include "hydroinv/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "hydroinv/io.hpp"
#include "hydroinv/rng.hpp"

namespace hydroinv {

nn::ArchitectureSpec HyperConfig::architecture(int input_length, int outputs) const {
    nn::ArchitectureSpec a;
    a.input_length = input_length;
    a.input_channels = 1;
    a.dropout = dropout;
    a.outputs = outputs;
    for (int i = 0; i < n_layers; ++i) a.stages.push_back({std::max(1, base_filters >> i), std::max(1, base_kernel >> i)});
    return a;
}

std::string HyperConfig::label() const {
    char buf[128];
    std::snprintf(buf, sizeof buf, "L%d-F%d-K%d-D%g-LR%g-E%d", n_layers, base_filters, base_kernel, dropout,
                  learning_rate, epochs);
    return buf;
}

std::vector<GridEntry> expand_grid(const SearchSpace& s, int input_length) {
    std::vector<GridEntry> out;
    out.reserve(s.n_layers.size() * s.base_filters.size() * s.base_kernel.size() * s.dropout.size() *
                s.learning_rate.size() * s.epochs.size());
    for (int l : s.n_layers)
        for (int f : s.base_filters)
            for (int k : s.base_kernel)
                for (double d : s.dropout)
                    for (double lr : s.learning_rate)
                        for (int e : s.epochs) {
                            HyperConfig c{l, f, k, d, lr, e};
                            out.push_back({c, c.architecture(input_length, 1).feasible()});
                        }
    std::sort(out.begin(), out.end(), [](const GridEntry& a, const GridEntry& b) { return a.config < b.config; });
    return out;
}

std::uint64_t config_seed(const HyperConfig& c, std::uint64_t seed) {
    std::uint64_t h = mix_seed(seed, static_cast<std::uint64_t>(c.n_layers));
    h = mix_seed(h, static_cast<std::uint64_t>(c.base_filters));
    h = mix_seed(h, static_cast<std::uint64_t>(c.base_kernel));
    h = mix_seed(h, static_cast<std::uint64_t>(c.dropout * 1000.0 + 0.5));
    h = mix_seed(h, static_cast<std::uint64_t>(-std::log10(c.learning_rate) * 1000.0 + 0.5));
    return mix_seed(h, static_cast<std::uint64_t>(c.epochs));
}

std::vector<HyperConfig> select_configs(const SearchSpace& space, int input_length, const TuneOptions& opt) {
    std::vector<HyperConfig> feasible;
    for (const auto& g : expand_grid(space, input_length)) {
        if (g.feasible) feasible.push_back(g.config);
    }
    std::vector<HyperConfig> chosen;
    if (opt.budget <= 0 || static_cast<std::size_t>(opt.budget) >= feasible.size()) {
        chosen = feasible;
    } else {
        std::vector<std::size_t> idx(feasible.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::mt19937_64 rng(mix_seed(opt.seed, 0x7u));
        // Partial Fisher-Yates: the first `budget` slots are a uniform sample without replacement.
        for (std::size_t i = 0; i < static_cast<std::size_t>(opt.budget); ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
            std::swap(idx[i], idx[pick(rng)]);
            chosen.push_back(feasible[idx[i]]);
        }
    }
    const auto tuned = HyperConfig::tuned();
    if (opt.include_tuned && tuned.architecture(input_length, 1).feasible() &&
        std::find(chosen.begin(), chosen.end(), tuned) == chosen.end()) {
        chosen.insert(chosen.begin(), tuned);
    }
    if (chosen.empty()) throw InputError("hyperparameter grid is empty after feasibility filtering");
    return chosen;
}

TuneEntry evaluate_config(const EnsembleDataset& d, const TargetScaler& targets, const HyperConfig& config,
                          const TuneOptions& opt, nn::InverseModel* trained) {
    if (d.train.empty() || d.validation.empty()) throw InputError("tuning needs non-empty training and validation splits");
    const int len = static_cast<int>(d.discharge.cols());
    const auto seed = config_seed(config, opt.seed);
    nn::InverseModel model(config.architecture(len, static_cast<int>(targets.width())), seed);
    nn::TrainConfig tc;
    tc.learning_rate = config.learning_rate;
    tc.epochs = opt.epoch_cap > 0 ? std::min(opt.epoch_cap, config.epochs) : config.epochs;
    tc.batch_size = opt.batch_size;
    tc.seed = mix_seed(seed, 0x5u);
    const Matrix xv = d.inputs(d.validation);
    const Matrix yv = d.targets(d.validation, targets);
    nn::fit(model, d.inputs(d.train), d.targets(d.train, targets), xv, yv, tc);
    TuneEntry e{config, nn::mse(nn::predict(model, xv), yv), model.weight_count(), seed};
    if (trained) *trained = std::move(model);
    return e;
}

void rank_entries(std::vector<TuneEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const TuneEntry& a, const TuneEntry& b) {
        if (a.validation_mse != b.validation_mse) return a.validation_mse < b.validation_mse;
        return a.config < b.config;
    });
}

TuneResult tune(const EnsembleDataset& d, const TargetScaler& targets, const SearchSpace& space,
                const TuneOptions& opt) {
    const auto configs = select_configs(space, static_cast<int>(d.discharge.cols()), opt);
    TuneResult r;
    for (const auto& c : configs) r.ranked.push_back(evaluate_config(d, targets, c, opt));
    r.evaluated = configs.size();
    rank_entries(r.ranked);
    if (r.ranked.size() > opt.top_k) r.ranked.resize(opt.top_k);
    return r;
}

std::string format_tune_report(const TuneResult& r) {
    std::ostringstream os;
    os << "# evaluated: " << r.evaluated << '\n';
    os << "rank,n_layers,base_filters,base_kernel,dropout,learning_rate,epochs,validation_mse,weight_count,seed\n";
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
        const auto& e = r.ranked[i];
        os << i + 1 << ',' << e.config.n_layers << ',' << e.config.base_filters << ',' << e.config.base_kernel << ','
           << io::format_double(e.config.dropout) << ',' << io::format_double(e.config.learning_rate) << ','
           << e.config.epochs << ',' << io::format_double(e.validation_mse) << ',' << e.weight_count << ','
           << e.seed << '\n';
    }
    return os.str();
}

TuneResult parse_tune_report(const std::string& text) {
    TuneResult r;
    std::istringstream is(text);
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.rfind("# evaluated:", 0) == 0) {
            r.evaluated = std::stoul(line.substr(12));
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        const auto f = io::split(line);
        if (f.size() != 10) throw InputError("tune report: expected 10 fields, got " + std::to_string(f.size()));
        TuneEntry e;
        e.config.n_layers = static_cast<int>(io::parse_double(f[1]));
        e.config.base_filters = static_cast<int>(io::parse_double(f[2]));
        e.config.base_kernel = static_cast<int>(io::parse_double(f[3]));
        e.config.dropout = io::parse_double(f[4]);
        e.config.learning_rate = io::parse_double(f[5]);
        e.config.epochs = static_cast<int>(io::parse_double(f[6]));
        e.validation_mse = io::parse_double(f[7]);
        e.weight_count = static_cast<std::size_t>(io::parse_double(f[8]));
        e.seed = std::stoull(std::string(f[9]));
        r.ranked.push_back(e);
    }
    return r;
}

}  // namespace hydroinv
