// Serial reference vs optimized kernels on the tuned network shapes.
//
//   bench_kernels [repeats]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>

#include "hydroinv/ensemble.hpp"
#include "hydroinv/forcing.hpp"
#include "hydroinv/kernels.hpp"
#include "hydroinv/network.hpp"

using namespace hydroinv;
using namespace hydroinv::nn;

namespace {

double seconds(const std::function<void()>& fn, int repeats) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < repeats; ++r) fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / repeats;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

void report(const char* name, double ref, double opt, double diff) {
    std::printf("%-28s reference %9.4f s   optimized %9.4f s   speedup %6.1fx   max|diff| %.2e\n", name, ref, opt,
                ref / opt, diff);
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
    std::printf("threads: %d\n", omp_get_max_threads());

    const auto arch = ArchitectureSpec::tuned(7);
    InverseModel model(arch, 42);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;

    // Per-stage convolution forward.
    Tensor x(1, arch.input_length);
    for (auto& v : x.data) v = n01(rng);
    Tensor in = x;
    for (std::size_t s = 0; s < arch.stages.size(); ++s) {
        Tensor y_ref, y_opt, pooled;
        std::vector<int> argmax;
        const auto w = model.conv(s);
        const double tr = seconds([&] { conv1d_relu_forward_reference(in, w, y_ref); }, repeats);
        const double to = seconds([&] { conv1d_relu_forward(in, w, y_opt); }, repeats);
        char name[64];
        std::snprintf(name, sizeof name, "conv%zu forward (%dx%d)", s, w.out, w.taps);
        report(name, tr, to, max_abs_diff(y_ref.data, y_opt.data));
        maxpool2_forward(y_opt, pooled, argmax);
        in = std::move(pooled);
    }

    // Whole-batch gradient.
    const int batch = 4;
    Matrix xb(batch, static_cast<std::size_t>(arch.input_length)), yb(batch, 7);
    for (auto& v : xb.storage()) v = n01(rng);
    for (auto& v : yb.storage()) v = 0.5 + 0.1 * n01(rng);
    BackwardResult g_ref, g_opt;
    const double tr = seconds([&] { g_ref = backward_reference(model, xb, yb, true, 1); }, 1);
    const double to = seconds([&] { g_opt = backward(model, xb, yb, true, 1); }, repeats);
    double diff = 0.0;
    for (std::size_t b = 0; b < g_ref.grads.size(); ++b) diff = std::max(diff, max_abs_diff(g_ref.grads[b], g_opt.grads[b]));
    report("batch-4 forward+backward", tr, to, diff);

    // Ensemble simulation.
    const auto forcing = generate_forcing(1, 365 + 3654);
    const auto sets = sample_uniform(ParameterSpace::standard(), 200, 3);
    Matrix q_ref, q_opt;
    const double er = seconds([&] { q_ref = run_ensemble_serial(sets, forcing); }, 1);
    const double eo = seconds([&] { q_opt = run_ensemble(sets, forcing); }, 1);
    report("ensemble (200 x 4019 days)", er, eo, max_abs_diff(q_ref.storage(), q_opt.storage()));
    return 0;
}
