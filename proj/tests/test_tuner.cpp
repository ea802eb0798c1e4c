#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "hydroinv/tuner.hpp"

using namespace hydroinv;

namespace {

EnsembleDataset small_dataset(std::size_t rows, std::size_t days) {
    const auto sets = sample_uniform(ParameterSpace::standard(), static_cast<int>(rows), 3);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    Matrix q(rows, days);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t t = 0; t < days; ++t)
            q(r, t) = sets[r][Param::SFTMP] * std::sin(0.2 * t) + 0.1 * n01(rng);
    return assemble(q, sets, {}, 5);
}

TargetScaler sensitive() {
    std::vector<std::size_t> cols;
    for (auto p : kSensitiveParams) cols.push_back(index(p));
    return TargetScaler(ParameterSpace::standard(), cols);
}

}  // namespace

TEST_CASE("full grid has 11,250 configurations in lexicographic order") {
    const auto grid = expand_grid({}, 3654);
    CHECK(grid.size() == 5 * 5 * 5 * 5 * 3 * 6);
    CHECK(grid.size() == 11250);
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i - 1].config < grid[i].config);
    std::set<std::tuple<int, int, int, double, double, int>> unique;
    for (const auto& g : grid) unique.insert(g.config.tuple());
    CHECK(unique.size() == grid.size());
}

TEST_CASE("halving rule reproduces the tuned trunk") {
    HyperConfig c;
    c.n_layers = 3;
    c.base_filters = 128;
    c.base_kernel = 16;
    const auto a = c.architecture(3654, 21);
    CHECK(a.stages == std::vector<nn::ConvStage>{{128, 16}, {64, 8}, {32, 4}});
    CHECK(a.weight_count() == 379093);
    CHECK(HyperConfig::tuned().architecture(3654, 7).weight_count() == 177031);
    HyperConfig deep;
    deep.n_layers = 5;
    deep.base_filters = 16;
    deep.base_kernel = 2;
    const auto d = deep.architecture(3654, 1);
    CHECK(d.stages.back() == nn::ConvStage{1, 1});
}

TEST_CASE("configurations that exhaust a length-64 input are infeasible") {
    HyperConfig c;
    c.n_layers = 5;
    c.base_kernel = 32;
    CHECK(!c.architecture(64, 1).feasible());
    const auto grid = expand_grid({}, 64);
    const auto infeasible = std::count_if(grid.begin(), grid.end(), [](const GridEntry& g) { return !g.feasible; });
    CHECK(infeasible > 0);
    CHECK(infeasible < static_cast<std::ptrdiff_t>(grid.size()));
    for (const auto& g : grid) CHECK(g.feasible == g.config.architecture(64, 1).feasible());
}

TEST_CASE("budgeted selection samples without replacement and includes the tuned config") {
    TuneOptions opt;
    opt.budget = 20;
    opt.seed = 7;
    const auto chosen = select_configs({}, 3654, opt);
    CHECK(chosen.size() == 21);
    CHECK(chosen.front() == HyperConfig::tuned());
    std::set<std::tuple<int, int, int, double, double, int>> unique;
    for (const auto& c : chosen) {
        unique.insert(c.tuple());
        CHECK(c.architecture(3654, 1).feasible());
    }
    CHECK(unique.size() == chosen.size());
    CHECK(select_configs({}, 3654, opt) == chosen);
    opt.seed = 8;
    CHECK(select_configs({}, 3654, opt) != chosen);

    SearchSpace none;
    none.n_layers = {5};
    none.base_kernel = {32};
    opt.include_tuned = false;
    CHECK_THROWS_AS(select_configs(none, 64, opt), InputError);
}

TEST_CASE("ties in validation MSE are broken lexicographically") {
    HyperConfig a, b, c;
    a.n_layers = 2;
    b.n_layers = 1;
    c.n_layers = 1;
    c.dropout = 0.0;
    std::vector<TuneEntry> e{{a, 0.5, 1, 0}, {b, 0.5, 1, 0}, {c, 0.7, 1, 0}, {c, 0.1, 1, 0}};
    rank_entries(e);
    CHECK(e[0].validation_mse == 0.1);
    CHECK(e[1].config == b);
    CHECK(e[2].config == a);
    CHECK(e[3].validation_mse == 0.7);
}

TEST_CASE("budget-20 tuning is deterministic and keeps the top ten") {
    const auto ds = small_dataset(40, 64);
    TuneOptions opt;
    opt.budget = 20;
    opt.seed = 11;
    opt.epoch_cap = 1;
    const auto first = tune(ds, sensitive(), {}, opt);
    const auto second = tune(ds, sensitive(), {}, opt);
    CHECK(first.evaluated == 21);
    REQUIRE(first.ranked.size() == 10);
    for (std::size_t i = 1; i < first.ranked.size(); ++i)
        CHECK(first.ranked[i - 1].validation_mse <= first.ranked[i].validation_mse);
    REQUIRE(second.ranked.size() == first.ranked.size());
    for (std::size_t i = 0; i < first.ranked.size(); ++i) {
        CHECK(first.ranked[i].config == second.ranked[i].config);
        CHECK(first.ranked[i].validation_mse == second.ranked[i].validation_mse);
        CHECK(first.ranked[i].seed == second.ranked[i].seed);
        CHECK(first.ranked[i].weight_count == first.ranked[i].config.architecture(64, 7).weight_count());
    }

    // Re-evaluating the winner reproduces its recorded score exactly.
    const auto& best = first.ranked.front();
    CHECK(evaluate_config(ds, sensitive(), best.config, opt).validation_mse == best.validation_mse);

    // The report round-trips.
    const auto parsed = parse_tune_report(format_tune_report(first));
    REQUIRE(parsed.ranked.size() == first.ranked.size());
    for (std::size_t i = 0; i < parsed.ranked.size(); ++i) {
        CHECK(parsed.ranked[i].config == first.ranked[i].config);
        CHECK(parsed.ranked[i].validation_mse == first.ranked[i].validation_mse);
    }
}

TEST_CASE("tuning needs both training and validation rows") {
    auto ds = small_dataset(40, 64);
    ds.validation.clear();
    TuneOptions opt;
    opt.budget = 1;
    opt.epoch_cap = 1;
    CHECK_THROWS_AS(tune(ds, sensitive(), {}, opt), InputError);
}
