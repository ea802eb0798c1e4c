#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "hydroinv/ensemble.hpp"
#include "hydroinv/sensitivity.hpp"

using namespace hydroinv;

namespace {

// Independent oracle: sort-based ranks, equal-frequency bins, joint histogram.
double brute_force_plugin(const std::vector<double>& x, const std::vector<double>& y, int bins) {
    const std::size_t n = x.size();
    auto bin_of = [&](const std::vector<double>& v) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
        std::vector<int> b(n);
        for (std::size_t r = 0; r < n; ++r) b[idx[r]] = static_cast<int>(r * bins / n);
        return b;
    };
    const auto bx = bin_of(x), by = bin_of(y);
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> px, py;
    for (std::size_t i = 0; i < n; ++i) {
        joint[{bx[i], by[i]}] += 1.0;
        px[bx[i]] += 1.0;
        py[by[i]] += 1.0;
    }
    double mi = 0.0;
    for (const auto& [k, c] : joint) mi += c / n * std::log(c * n / (px[k.first] * py[k.second]));
    return mi;
}

std::vector<double> uniforms(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

}  // namespace

TEST_CASE("default bin count") {
    CHECK(default_bins(10000) == 50);
    CHECK(default_bins(1000) == 16);
    CHECK(default_bins(4) == 2);
}

TEST_CASE("identical variables give the bin entropy") {
    const auto x = uniforms(10000, 1);
    CHECK(mutual_information_plugin(x, x, 10) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    const double mi = mutual_information(x, x, 10);
    CHECK(std::abs(mi - std::log(10.0)) < 0.05 * std::log(10.0));
    CHECK(mi == doctest::Approx(std::log(10.0) + 9.0 / 20000.0).epsilon(1e-12));
}

TEST_CASE("plug-in estimate matches a brute-force joint histogram") {
    const auto x = uniforms(3000, 2);
    auto y = uniforms(3000, 3);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
    for (int bins : {2, 7, 20}) CHECK(mutual_information_plugin(x, y, bins) == doctest::Approx(brute_force_plugin(x, y, bins)).epsilon(1e-12));
}

TEST_CASE("independent uniforms carry almost no information") {
    const auto x = uniforms(10000, 4);
    const auto y = uniforms(10000, 5);
    CHECK(mutual_information(x, y, default_bins(x.size())) < 0.05);
    CHECK(mutual_information(x, y, 10) >= 0.0);
}

TEST_CASE("bivariate Gaussian with rho 0.9") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n01;
    const double rho = 0.9;
    std::vector<double> x(10000), y(10000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = n01(rng);
        y[i] = rho * x[i] + std::sqrt(1.0 - rho * rho) * n01(rng);
    }
    const double truth = -0.5 * std::log(1.0 - rho * rho);
    CHECK(truth == doctest::Approx(0.8303656).epsilon(1e-6));
    CHECK(std::abs(mutual_information(x, y, default_bins(x.size())) - truth) < 0.1);
}

TEST_CASE("monotone transforms leave the estimate unchanged exactly") {
    const auto x = uniforms(2000, 7);
    auto y = uniforms(2000, 8);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = y[i] * y[i] + x[i];
    std::vector<double> ex(x.size()), cy(y.size());
    std::transform(x.begin(), x.end(), ex.begin(), [](double v) { return std::exp(3.0 * v); });
    std::transform(y.begin(), y.end(), cy.begin(), [](double v) { return v * v * v - 4.0; });
    CHECK(mutual_information(ex, cy, 20) == mutual_information(x, y, 20));
}

TEST_CASE("estimator preconditions") {
    const auto x = uniforms(40, 9);
    CHECK_THROWS_AS(mutual_information(x, uniforms(39, 1), 5), InputError);
    CHECK_THROWS_AS(mutual_information(x, x, 11), InputError);
    CHECK_THROWS_AS(mutual_information(x, x, 1), InputError);
    CHECK_NOTHROW(mutual_information(x, x, 10));
}

TEST_CASE("tied values share the bin of their first rank") {
    const std::vector<double> x{3.0, 1.0, 1.0, 1.0, 2.0, 5.0, 4.0, 0.0};
    CHECK(rank_bins(x, 4) == std::vector<int>{2, 0, 0, 0, 2, 3, 3, 0});
}

TEST_CASE("summary features") {
    // Two years of a ramp: month means and peaks are known.
    const Date start = make_date(2001, 1, 1);
    Matrix q(1, 730);
    for (std::size_t t = 0; t < 730; ++t) q(0, t) = static_cast<double>(t % 365);
    const auto f = summary_features(q, start);
    REQUIRE(f.cols() == 15);
    CHECK(summary_feature_names().size() == 15);
    CHECK(f(0, 0) == doctest::Approx(15.0));   // January: days 0..30
    CHECK(f(0, 11) == doctest::Approx(349.0)); // December: days 334..364
    CHECK(f(0, 12) == doctest::Approx(364.0));
    CHECK(f(0, 13) == doctest::Approx(0.05 * 729.0 / 2.0).epsilon(0.02));
    FeatureSpec only_peak;
    only_peak.monthly_means = false;
    only_peak.percentiles = false;
    CHECK(summary_features(q, start, only_peak).cols() == 1);
}

TEST_CASE("ranking invariants on a synthetic response") {
    const std::size_t n = 600;
    const auto& space = ParameterSpace::standard();
    const auto sets = sample_uniform(space, static_cast<int>(n), 12);
    Matrix params = to_matrix(sets);
    // Discharge driven by SFTMP strongly and CN weakly.
    Matrix q(n, 365);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t t = 0; t < 365; ++t)
            q(r, t) = std::exp(0.3 * params(r, index(Param::SFTMP)) * std::sin(t / 58.0) + 0.01 * params(r, index(Param::CN))) +
                      std::abs(noise(rng));

    // Append a dummy column and a duplicate of SFTMP.
    Matrix ext(n, kNumParams + 2);
    const auto dummy = uniforms(n, 99);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < kNumParams; ++j) ext(r, j) = params(r, j);
        ext(r, kNumParams) = dummy[r];
        ext(r, kNumParams + 1) = params(r, index(Param::SFTMP));
    }
    auto names = space.names();
    names.push_back("DUMMY");
    names.push_back("SFTMP_COPY");
    const auto ranking = rank_parameters(ext, q, make_date(2000, 1, 1), {}, names);

    CHECK(ranking.scores.size() == kNumParams + 2);
    for (double s : ranking.scores) CHECK(s >= 0.0);
    auto sorted = ranking.order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
    for (std::size_t i = 1; i < ranking.order.size(); ++i)
        CHECK(ranking.scores[ranking.order[i - 1]] >= ranking.scores[ranking.order[i]]);

    CHECK(ranking.scores[kNumParams] < 0.05);
    CHECK(ranking.scores[kNumParams + 1] == ranking.scores[index(Param::SFTMP)]);
    CHECK(ranking.rank_of(index(Param::SFTMP)) <= 2);

    // Permuting realizations leaves every score unchanged.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
    const auto shuffled = rank_parameters(ext.select_rows(perm), q.select_rows(perm), make_date(2000, 1, 1), {}, names);
    CHECK(shuffled.scores == ranking.scores);

    const auto text = format_ranking(ranking);
    CHECK(text.find("\nrank,parameter,score\n1,") != std::string::npos);
}

TEST_CASE("dummy parameter with no model effect ranks last") {
    const auto forcing = generate_forcing(31, 365 + 730);
    const auto& space = ParameterSpace::standard();
    const auto sets = sample_uniform(space, 300, 4);
    const auto q = run_ensemble(sets, forcing);
    Matrix ext(300, kNumParams + 1);
    const auto noise = uniforms(300, 5);
    const auto p = to_matrix(sets);
    for (std::size_t r = 0; r < 300; ++r) {
        for (std::size_t j = 0; j < kNumParams; ++j) ext(r, j) = p(r, j);
        ext(r, kNumParams) = noise[r];
    }
    auto names = space.names();
    names.push_back("DUMMY");
    const auto ranking = rank_parameters(ext, q, forcing.days[365].date, {}, names);
    const double dummy = ranking.scores[kNumParams];
    CHECK(dummy < 0.05);
    // Weakly coupled parameters sit in the same estimator noise floor as the
    // dummy, so the dummy must rank below every parameter clearly above it.
    std::size_t informative = 0;
    for (std::size_t j = 0; j < kNumParams; ++j) {
        if (ranking.scores[j] > 0.03) {
            ++informative;
            CHECK(ranking.rank_of(j) < ranking.rank_of(kNumParams));
        }
    }
    CHECK(informative >= 3);
}

TEST_CASE("rank_parameters preconditions") {
    const auto sets = sample_uniform(ParameterSpace::standard(), 50, 1);
    Matrix q(50, 400, 1.0);
    CHECK_THROWS_AS(rank_parameters(to_matrix(sets), q, make_date(2000, 1, 1), {}), InputError);
    const auto more = sample_uniform(ParameterSpace::standard(), 120, 1);
    FeatureSpec none;
    none.monthly_means = none.annual_peak = none.percentiles = false;
    CHECK_THROWS_AS(rank_parameters(to_matrix(more), Matrix(120, 400, 1.0), make_date(2000, 1, 1), none), InputError);
}

TEST_CASE("snowfall threshold ranks in the top three of a 1000-member twin ensemble") {
    const auto forcing = generate_forcing(20240101, 365 + 3654);
    const auto sets = sample_uniform(ParameterSpace::standard(), 1000, 2);
    const auto q = run_ensemble(sets, forcing);
    const auto ranking = rank_parameters(to_matrix(sets), q, forcing.days[365].date, {}, ParameterSpace::standard().names());
    CAPTURE(format_ranking(ranking));
    CHECK(ranking.rank_of(index(Param::SFTMP)) <= 3);
}
