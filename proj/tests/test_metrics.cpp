#include <doctest.h>

#include <cmath>
#include <random>

#include "hydroinv/metrics.hpp"
#include "hydroinv/parameters.hpp"

using namespace hydroinv;

namespace {

constexpr double kTol = 1e-12;

std::vector<double> flows(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::lognormal_distribution<double> d(1.0, 0.8);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

std::vector<double> scaled(const std::vector<double>& v, double a, double b = 0.0) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = a * v[i] + b;
    return out;
}

}  // namespace

TEST_CASE("NSE closed forms") {
    const std::vector<double> obs{1, 2, 3};
    CHECK(nse(obs, obs) == 1.0);
    CHECK(std::abs(nse(obs, std::vector<double>{2, 2, 2})) < kTol);
    CHECK(std::abs(nse(obs, std::vector<double>{1, 2, 5}) - (-1.0)) < kTol);
    CHECK_THROWS_AS(nse(std::vector<double>{2, 2, 2}, obs), InputError);
    CHECK_THROWS_AS(nse(obs, std::vector<double>{1, 2}), InputError);
    CHECK_THROWS_AS(nse(std::vector<double>{1}, std::vector<double>{1}), InputError);
}

TEST_CASE("logNSE closed forms") {
    const double e = std::exp(1.0);
    const std::vector<double> obs{1, e, e * e};
    CHECK(lognse(obs, obs) == 1.0);
    CHECK(std::abs(lognse(obs, std::vector<double>{e, e, e}, 0.0)) < kTol);
    const std::vector<double> with_zero{0.0, 1.0, 2.0};
    CHECK_THROWS_AS(lognse(with_zero, obs, 0.0), InputError);
    CHECK_THROWS_AS(lognse(obs, with_zero, 0.0), InputError);
    CHECK_NOTHROW(lognse(with_zero, obs));
}

TEST_CASE("logNSE equals NSE of the logged series") {
    const auto obs = flows(500, 1);
    const auto sim = flows(500, 2);
    std::vector<double> lo(obs.size()), ls(sim.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        lo[i] = std::log(obs[i] + 0.01);
        ls[i] = std::log(sim[i] + 0.01);
    }
    CHECK(std::abs(lognse(obs, sim, 0.01) - nse(lo, ls)) < kTol);
}

TEST_CASE("KGE closed forms") {
    const auto q = flows(365, 3);
    CHECK(kge(q, q) == 1.0);
    // sim = 2 obs: r = 1, both ratios 2.
    CHECK(std::abs(kge(q, scaled(q, 2.0)) - (1.0 - std::sqrt(2.0))) < kTol);
    // Roles reversed: ratios 1/2.
    CHECK(std::abs(kge(scaled(q, 2.0), q) - (1.0 - std::sqrt(0.5))) < kTol);
    double mu = 0.0;
    for (double v : q) mu += v;
    mu /= q.size();
    CHECK(std::abs(kge(q, scaled(q, 1.0, mu))) < kTol);
    CHECK_THROWS_AS(kge(std::vector<double>{1, 1, 1}, q), InputError);
    CHECK_THROWS_AS(kge(std::vector<double>{-1, 0, 1}, std::vector<double>{1, 2, 3}), InputError);
}

TEST_CASE("Pearson and R2") {
    const std::vector<double> obs{1, 2, 3, 4};
    const std::vector<double> sim{2, 1, 4, 3};
    CHECK(std::abs(pearson(obs, sim) - 0.6) < kTol);
    CHECK(std::abs(r2_score(obs, sim) - 0.36) < kTol);
    const auto q = flows(100, 4);
    CHECK(std::abs(pearson(q, scaled(q, 3.0, 7.0)) - 1.0) < kTol);
    CHECK(std::abs(r2_score(q, scaled(q, 3.0, 7.0)) - 1.0) < kTol);
    CHECK(std::abs(pearson(q, scaled(q, -1.0)) + 1.0) < kTol);
    CHECK_THROWS_AS(pearson(obs, std::vector<double>{5, 5, 5, 5}), InputError);
}

TEST_CASE("metric upper bounds and scale invariance") {
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto obs = flows(50, 10 + s);
        const auto sim = flows(50, 1000 + s);
        CHECK(nse(obs, sim) <= 1.0);
        CHECK(lognse(obs, sim) <= 1.0);
        CHECK(kge(obs, sim) <= 1.0);
        CHECK(r2_score(obs, sim) <= 1.0);
        const double r = pearson(obs, sim);
        CHECK(r >= -1.0);
        CHECK(r <= 1.0);
        const double c = 0.5 + 0.1 * static_cast<double>(s);
        CHECK(nse(scaled(obs, c), scaled(sim, c)) == doctest::Approx(nse(obs, sim)).epsilon(1e-12));
        CHECK(pearson(scaled(obs, c), scaled(sim, c)) == doctest::Approx(r).epsilon(1e-12));
    }
}

TEST_CASE("percent error sign convention") {
    CHECK(percent_error(3.0, 3.0).value == 0.0);
    CHECK(percent_error(2.0, 1.0).value == -50.0);
    CHECK(percent_error(-4.0, -5.0).value == -25.0);
    const auto z = percent_error(0.0, 0.25);
    CHECK(z.absolute);
    CHECK(z.value == 0.25);
    const auto v = percent_error(std::vector<double>{2.0, -4.0}, std::vector<double>{1.0, -5.0});
    CHECK(v[0].value == -50.0);
    CHECK(v[1].value == -25.0);
}

TEST_CASE("prediction band statistics") {
    const std::vector<double> obs{1, 2};
    Matrix m(2, 2);
    m.set_row(0, std::vector<double>{0, 0});
    m.set_row(1, std::vector<double>{2, 4});
    const auto b = band_stats(obs, m);
    CHECK(b.mean_width == 3.0);
    CHECK(b.coverage == 1.0);

    Matrix same(2, 2);
    same.set_row(0, obs);
    same.set_row(1, obs);
    CHECK(band_stats(obs, same).mean_width == 0.0);
    CHECK(band_stats(obs, same).coverage == 1.0);

    Matrix low(2, 2, 0.5);
    CHECK(band_stats(obs, low).coverage == 0.0);
    CHECK_THROWS_AS(band_stats(obs, Matrix(1, 2)), InputError);
}

TEST_CASE("metric report round-trip") {
    const auto obs = flows(200, 5);
    const auto sim = flows(200, 6);
    const auto r = evaluate(obs, sim, "calibration");
    CHECK(r.period == "calibration");
    CHECK(r.nse == nse(obs, sim));
    CHECK(r.r2 == r2_score(obs, sim));
    const auto back = parse_report(format_report(r));
    CHECK(back.period == r.period);
    CHECK(back.nse == r.nse);
    CHECK(back.lognse == r.lognse);
    CHECK(back.kge == r.kge);
    CHECK(back.pearson_r == r.pearson_r);
    CHECK(back.r2 == r.r2);
}
