#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "hydroinv/network.hpp"
#include "hydroinv/parameters.hpp"

using namespace hydroinv;
using namespace hydroinv::nn;

namespace {

ArchitectureSpec tiny_spec(double dropout = 0.0) {
    ArchitectureSpec a;
    a.input_length = 32;
    a.stages = {{4, 4}, {4, 2}};
    a.dropout = dropout;
    a.outputs = 3;
    return a;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (auto& v : m.storage()) v = u(rng);
    return m;
}

ConvView view(const std::vector<double>& k, const std::vector<double>& b, int in, int out, int taps) {
    return ConvView{k, b, in, out, taps};
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("hydroinv_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("tuned architecture weight counts") {
    CHECK(ArchitectureSpec::tuned(21).weight_count() == 379093);
    CHECK(ArchitectureSpec::tuned(7).weight_count() == 177031);
    CHECK(ArchitectureSpec::tuned(1).weight_count() == 90433);
    CHECK(ArchitectureSpec::tuned(21).lengths() == std::vector<int>{3639, 1819, 1812, 906, 903, 451});
    CHECK(ArchitectureSpec::tuned(21).flatten_length() == 14432);
    for (int out : {21, 7, 1}) {
        const InverseModel m(ArchitectureSpec::tuned(out), 1);
        CHECK(m.weight_count() == m.arch().weight_count());
    }
}

TEST_CASE("weight count formula matches the containers for assorted specs") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> f(1, 9), k(1, 6), n(1, 3);
    for (int trial = 0; trial < 50; ++trial) {
        ArchitectureSpec a;
        a.input_length = 40 + trial;
        a.outputs = f(rng);
        for (int s = n(rng); s > 0; --s) a.stages.push_back({f(rng), k(rng)});
        if (!a.feasible()) continue;
        CHECK(InverseModel(a, trial).weight_count() == a.weight_count());
    }
}

TEST_CASE("architecture validation") {
    auto a = tiny_spec();
    a.stages = {{4, 16}, {4, 8}, {4, 4}};
    CHECK(!a.feasible());
    CHECK(a.lengths().empty());
    CHECK_THROWS_AS(a.validate(), std::invalid_argument);
    CHECK_THROWS_AS(InverseModel(a, 1), std::invalid_argument);
    auto b = tiny_spec();
    b.dropout = 1.0;
    CHECK_THROWS_AS(b.validate(), std::invalid_argument);
}

TEST_CASE("Glorot uniform initializer") {
    CHECK(glorot_bound(3, 3) == 1.0);
    CHECK_THROWS(glorot_bound(0, 3));
    const auto w = glorot_uniform_init(20, 30, 100000, 9);
    const double b = glorot_bound(20, 30);
    double sum = 0.0, sq = 0.0;
    for (double v : w) {
        CHECK_MESSAGE(std::abs(v) <= b, v);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / w.size();
    const double var = sq / w.size() - mean * mean;
    CHECK(std::abs(var - b * b / 3.0) < 0.05 * b * b / 3.0);
    CHECK(glorot_uniform_init(20, 30, 100, 9) == std::vector<double>(w.begin(), w.begin() + 100));
    CHECK(glorot_uniform_init(20, 30, 100, 10) != std::vector<double>(w.begin(), w.begin() + 100));
}

TEST_CASE("biases start at zero and init is seeded") {
    const InverseModel a(tiny_spec(), 5), b(tiny_spec(), 5), c(tiny_spec(), 6);
    CHECK(a == b);
    CHECK(!(a == c));
    for (const auto& blk : a.blocks())
        if (blk.name.ends_with(".bias"))
            for (double v : blk.values) CHECK(v == 0.0);
}

TEST_CASE("conv1d forward hand examples") {
    Tensor x(1, 4);
    x.data = {1, 2, 3, 4};
    Tensor y;
    const std::vector<double> zero{0.0};
    std::vector<double> k{1, 0};  // [tap][out][in]
    conv1d_relu_forward(x, view(k, zero, 1, 1, 2), y);
    CHECK(y.data == std::vector<double>{1, 2, 3});
    k = {1, 1};
    conv1d_relu_forward(x, view(k, zero, 1, 1, 2), y);
    CHECK(y.data == std::vector<double>{3, 5, 7});
    // ReLU clips negatives.
    k = {-1, 0};
    const std::vector<double> bias{2.5};
    conv1d_relu_forward(x, view(k, bias, 1, 1, 2), y);
    CHECK(y.data == std::vector<double>{1.5, 0.5, 0.0});
    const std::vector<double> k5(5, 1.0);
    CHECK_THROWS_AS(conv1d_relu_forward(x, view(k5, zero, 1, 1, 5), y), std::invalid_argument);

    Tensor big(1, 3654);
    const std::vector<double> k16(16, 0.1);
    conv1d_relu_forward(big, view(k16, zero, 1, 1, 16), y);
    CHECK(y.length == 3639);
}

TEST_CASE("optimized and reference convolutions agree") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (auto [in, out, taps] : {std::tuple{1, 8, 16}, std::tuple{8, 6, 8}, std::tuple{12, 5, 4}}) {
        Tensor x(in, 60);
        for (auto& v : x.data) v = n01(rng);
        std::vector<double> k(static_cast<std::size_t>(in * out * taps)), b(out);
        for (auto& v : k) v = n01(rng);
        for (auto& v : b) v = 0.1 * n01(rng);
        const auto w = view(k, b, in, out, taps);
        Tensor ya, yb;
        conv1d_relu_forward(x, w, ya);
        conv1d_relu_forward_reference(x, w, yb);
        for (std::size_t i = 0; i < ya.data.size(); ++i) CHECK(ya.data[i] == doctest::Approx(yb.data[i]).epsilon(1e-12));

        Tensor ga(out, ya.length), gb;
        for (auto& v : ga.data) v = n01(rng);
        gb = ga;
        std::vector<double> dka(k.size()), dkb(k.size()), dba(out), dbb(out);
        Tensor dxa, dxb;
        conv1d_relu_backward(x, w, ya, ga, dka, dba, &dxa);
        conv1d_relu_backward_reference(x, w, yb, gb, dkb, dbb, &dxb);
        for (std::size_t i = 0; i < k.size(); ++i) CHECK(dka[i] == doctest::Approx(dkb[i]).epsilon(1e-12));
        for (std::size_t i = 0; i < dxa.data.size(); ++i) CHECK(dxa.data[i] == doctest::Approx(dxb.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("max pooling") {
    Tensor x(1, 4), y;
    x.data = {1, 3, 2, 0};
    std::vector<int> arg;
    maxpool2_forward(x, y, arg);
    CHECK(y.data == std::vector<double>{3, 2});
    CHECK(arg == std::vector<int>{1, 2});
    Tensor z(1, 3);
    z.data = {5, 5, 5};
    maxpool2_forward(z, y, arg);
    CHECK(y.data == std::vector<double>{5});
    CHECK(arg == std::vector<int>{0});
    Tensor one(1, 1);
    CHECK_THROWS_AS(maxpool2_forward(one, y, arg), std::invalid_argument);
}

TEST_CASE("forward pass properties") {
    const auto x = random_matrix(4, 32, 1);
    SUBCASE("inference is deterministic and keeps the row count") {
        const InverseModel m(tiny_spec(0.3), 2);
        const auto a = predict(m, x);
        CHECK(a == predict(m, x));
        CHECK(a == forward(m, x, false));
        CHECK(a.rows() == 4);
        CHECK(a.cols() == 3);
        CHECK(forward(m, x, true, 7) != a);
        CHECK(forward(m, x, true, 7) == forward(m, x, true, 7));
    }
    SUBCASE("zero dropout makes training and inference agree") {
        const InverseModel m(tiny_spec(0.0), 2);
        CHECK(forward(m, x, true, 3) == forward(m, x, false));
    }
    SUBCASE("all-zero weights give all-zero outputs") {
        InverseModel m(tiny_spec(0.2), 2);
        for (auto& b : m.blocks()) std::fill(b.values.begin(), b.values.end(), 0.0);
        const auto y = predict(m, x);
        for (double v : y.storage()) CHECK(v == 0.0);
    }
    SUBCASE("width mismatch") {
        const InverseModel m(tiny_spec(), 2);
        CHECK_THROWS_AS(predict(m, random_matrix(2, 31, 1)), std::invalid_argument);
    }
}

TEST_CASE("dropout masks use inverted scaling and are reproducible") {
    const auto m = dropout_mask(1, 5, 2, 10000, 0.2);
    std::size_t kept = 0;
    for (double v : m) {
        CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.8)));
        kept += v != 0.0;
    }
    CHECK(std::abs(static_cast<double>(kept) / m.size() - 0.8) < 0.02);
    CHECK(dropout_mask(1, 5, 2, 10000, 0.2) == m);
    CHECK(dropout_mask(1, 6, 2, 10000, 0.2) != m);
}

TEST_CASE("perfect predictions give zero loss and zero gradients") {
    const InverseModel m(tiny_spec(), 3);
    const auto x = random_matrix(5, 32, 4);
    const auto y = predict(m, x);
    const auto r = backward(m, x, y, false);
    CHECK(r.loss == 0.0);
    for (const auto& g : r.grads)
        for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("backprop matches central finite differences on the tiny spec") {
    for (double dropout : {0.0, 0.25}) {
        CAPTURE(dropout);
        InverseModel m(tiny_spec(dropout), 11);
        // Non-zero biases so every parameter group is exercised away from init.
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-0.1, 0.1);
        for (auto& b : m.blocks())
            if (b.name.ends_with(".bias"))
                for (auto& v : b.values) v = u(rng);
        const auto x = random_matrix(3, 32, 6, -2.0, 2.0);
        const auto y = random_matrix(3, 3, 7, 0.0, 1.0);
        const std::int64_t step = 4;
        const auto analytic = backward(m, x, y, true, step);
        const auto reference = backward_reference(m, x, y, true, step);
        const double h = 1e-5;
        double worst = 0.0;
        std::size_t checked = 0;
        for (std::size_t b = 0; b < m.blocks().size(); ++b) {
            for (std::size_t i = 0; i < m.blocks()[b].values.size(); ++i) {
                double& w = m.blocks()[b].values[i];
                const double w0 = w;
                w = w0 + h;
                const double lp = backward(m, x, y, true, step).loss;
                w = w0 - h;
                const double lm = backward(m, x, y, true, step).loss;
                w = w0;
                const double numeric = (lp - lm) / (2.0 * h);
                const double a = analytic.grads[b][i];
                // Coordinates that are zero in both (dead ReLUs) compare absolutely.
                const double scale = std::max({std::abs(a), std::abs(numeric), 1e-7});
                worst = std::max(worst, std::abs(a - numeric) / scale);
                CHECK(reference.grads[b][i] == doctest::Approx(a).epsilon(1e-10));
                ++checked;
            }
        }
        CHECK(checked == m.weight_count());
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("dense-only model reproduces the linear-regression gradient") {
    ArchitectureSpec a;
    a.input_length = 3;
    a.outputs = 1;
    InverseModel m(a, 1);
    m.blocks()[0].values = {0.5, -1.0, 2.0};
    const Matrix x = random_matrix(5, 3, 8);
    const Matrix y = random_matrix(5, 1, 9);
    const auto r = backward(m, x, y, false);
    for (int j = 0; j < 3; ++j) {
        double expected = 0.0;
        for (int i = 0; i < 5; ++i) {
            const double pred = 0.5 * x(i, 0) - 1.0 * x(i, 1) + 2.0 * x(i, 2);
            expected += 2.0 / 5.0 * x(i, j) * (pred - y(i, 0));
        }
        CHECK(r.grads[0][j] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("Adam update") {
    SUBCASE("zero gradient leaves weights unchanged") {
        std::vector<WeightBlock> w{{"w", {1.0, -2.0}}};
        AdamState s{{{0.0, 0.0}}, {{0.0, 0.0}}, 0};
        adam_step(w, {{0.0, 0.0}}, s, 0.01, 1);
        CHECK(w[0].values == std::vector<double>{1.0, -2.0});
    }
    SUBCASE("first step closed form") {
        const std::vector<double> g{0.3, -2e-3, 5.0, 1e-9};
        std::vector<WeightBlock> w{{"w", {1.0, 1.0, 1.0, 1.0}}};
        AdamState s{{std::vector<double>(4)}, {std::vector<double>(4)}, 0};
        const double lr = 1e-3;
        adam_step(w, {g}, s, lr, 1);
        for (std::size_t i = 0; i < g.size(); ++i)
            CHECK(w[0].values[i] == doctest::Approx(1.0 - lr * g[i] / (std::abs(g[i]) + 1e-8)).epsilon(1e-14));
    }
}

TEST_CASE("training") {
    SUBCASE("five-sample overfit") {
        InverseModel m(tiny_spec(), 21);
        const auto x = random_matrix(5, 32, 22, -2.0, 2.0);
        const auto y = random_matrix(5, 3, 23, 0.0, 1.0);
        TrainConfig cfg;
        cfg.learning_rate = 1e-3;
        cfg.epochs = 500;
        cfg.seed = 1;
        const auto h = fit(m, x, y, x, y, cfg);
        CHECK(h.train_mse.size() == 500);
        CHECK(h.validation_mse.size() == 500);
        CHECK(h.train_mse.back() < 1e-3);
    }
    SUBCASE("zero epochs keeps the initialization") {
        InverseModel m(tiny_spec(), 21);
        const InverseModel init = m;
        TrainConfig cfg;
        cfg.epochs = 0;
        const auto h = fit(m, Matrix(), Matrix(), Matrix(), Matrix(), cfg);
        CHECK(h.train_mse.empty());
        CHECK(m == init);
    }
    SUBCASE("800 rows at batch 10 take 80 steps per epoch") {
        ArchitectureSpec a;
        a.input_length = 6;
        a.outputs = 2;
        InverseModel m(a, 3);
        TrainConfig cfg;
        cfg.epochs = 2;
        cfg.learning_rate = 1e-3;
        const auto x = random_matrix(800, 6, 1);
        const auto y = random_matrix(800, 2, 2, 0.0, 1.0);
        fit(m, x, y, x.select_rows(std::vector<std::size_t>{0, 1}), y.select_rows(std::vector<std::size_t>{0, 1}), cfg);
        CHECK(m.updates == 160);
        CHECK(m.epoch == 2);
    }
    SUBCASE("empty splits and bad configs are rejected") {
        InverseModel m(tiny_spec(), 1);
        TrainConfig cfg;
        cfg.epochs = 1;
        const auto x = random_matrix(4, 32, 1);
        const auto y = random_matrix(4, 3, 1);
        CHECK_THROWS_AS(fit(m, Matrix(0, 32), Matrix(0, 3), x, y, cfg), InputError);
        CHECK_THROWS_AS(fit(m, x, y, Matrix(0, 32), Matrix(0, 3), cfg), InputError);
        cfg.batch_size = 0;
        CHECK_THROWS(fit(m, x, y, x, y, cfg));
        cfg.batch_size = 10;
        cfg.learning_rate = 0.0;
        CHECK_THROWS(fit(m, x, y, x, y, cfg));
    }
    SUBCASE("seeded runs are bit-identical and the schedule is resumable") {
        const auto x = random_matrix(23, 32, 5);
        const auto y = random_matrix(23, 3, 6, 0.0, 1.0);
        TrainConfig cfg;
        cfg.learning_rate = 1e-3;
        cfg.epochs = 4;
        cfg.batch_size = 4;
        cfg.seed = 99;
        InverseModel a(tiny_spec(0.2), 8), b(tiny_spec(0.2), 8), c(tiny_spec(0.2), 8);
        const auto ha = fit(a, x, y, x, y, cfg);
        const auto hb = fit(b, x, y, x, y, cfg);
        CHECK(a == b);
        CHECK(ha.train_mse == hb.train_mse);
        cfg.epochs = 2;
        fit(c, x, y, x, y, cfg);
        fit(c, x, y, x, y, cfg);
        CHECK(c == a);
    }
}

TEST_CASE("save and load give bit-identical predictions") {
    InverseModel m(tiny_spec(0.2), 31);
    const auto x = random_matrix(6, 32, 1);
    const auto y = random_matrix(6, 3, 2, 0.0, 1.0);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.learning_rate = 1e-3;
    fit(m, x, y, x, y, cfg);
    const auto dir = temp_dir("model");
    save_model(m, dir.string(), "scalers.json");
    const auto loaded = load_model(dir.string());
    CHECK(loaded == m);
    CHECK(predict(loaded, x) == predict(m, x));

    // Continuing training from the checkpoint matches continuing in memory.
    auto resumed = loaded;
    fit(resumed, x, y, x, y, cfg);
    fit(m, x, y, x, y, cfg);
    CHECK(resumed == m);

    std::filesystem::resize_file(dir / "weights.f64", 8);
    CHECK_THROWS(load_model(dir.string()));
    std::filesystem::remove_all(dir);
    CHECK_THROWS(load_model(dir.string()));
}
