#include "hydroinv/network.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "hydroinv/io.hpp"
#include "hydroinv/parameters.hpp"
#include "hydroinv/rng.hpp"

namespace hydroinv::nn {

// ---------------------------------------------------------------------------
// Architecture

ArchitectureSpec ArchitectureSpec::tuned(int outputs, int input_length, double dropout) {
    return {input_length, 1, {{128, 16}, {64, 8}, {32, 4}}, dropout, outputs};
}

std::vector<int> ArchitectureSpec::lengths() const {
    std::vector<int> out;
    int len = input_length;
    for (const auto& s : stages) {
        if (s.kernel < 1 || len < s.kernel) return {};
        len = len - s.kernel + 1;
        out.push_back(len);
        if (len < 2) return {};
        len /= 2;
        out.push_back(len);
    }
    return out;
}

int ArchitectureSpec::flatten_length() const {
    if (stages.empty()) return input_length * input_channels;
    const auto l = lengths();
    if (l.empty()) return 0;
    return l.back() * stages.back().filters;
}

bool ArchitectureSpec::feasible() const {
    if (input_length < 1 || input_channels < 1 || outputs < 1) return false;
    for (const auto& s : stages) {
        if (s.filters < 1 || s.kernel < 1) return false;
    }
    return flatten_length() > 0;
}

std::size_t ArchitectureSpec::weight_count() const {
    std::size_t n = 0;
    std::size_t in = static_cast<std::size_t>(input_channels);
    for (const auto& s : stages) {
        n += static_cast<std::size_t>(s.kernel) * in * static_cast<std::size_t>(s.filters) +
             static_cast<std::size_t>(s.filters);
        in = static_cast<std::size_t>(s.filters);
    }
    const auto flat = static_cast<std::size_t>(std::max(flatten_length(), 0));
    return n + flat * static_cast<std::size_t>(outputs) + static_cast<std::size_t>(outputs);
}

void ArchitectureSpec::validate() const {
    if (input_length < 1) throw std::invalid_argument("architecture: input length must be positive");
    if (input_channels < 1) throw std::invalid_argument("architecture: input channels must be positive");
    if (outputs < 1) throw std::invalid_argument("architecture: output width must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("architecture: dropout must be in [0,1)");
    for (const auto& s : stages) {
        if (s.filters < 1 || s.kernel < 1) throw std::invalid_argument("architecture: filters and kernel must be >= 1");
    }
    if (flatten_length() <= 0) throw std::invalid_argument("architecture: stages exhaust the input sequence");
}

// ---------------------------------------------------------------------------
// Initialization

double glorot_bound(int fan_in, int fan_out) {
    if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("glorot: fans must be >= 1");
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

std::vector<double> glorot_uniform_init(int fan_in, int fan_out, std::size_t count, std::uint64_t seed) {
    const double bound = glorot_bound(fan_in, fan_out);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> w(count);
    for (auto& x : w) x = u(rng);
    return w;
}

InverseModel::InverseModel(ArchitectureSpec arch, std::uint64_t seed) : arch_(std::move(arch)), seed_(seed) {
    arch_.validate();
    int in = arch_.input_channels;
    for (std::size_t s = 0; s < arch_.stages.size(); ++s) {
        const auto& st = arch_.stages[s];
        const std::size_t count = static_cast<std::size_t>(st.kernel) * in * st.filters;
        blocks_.push_back({"conv" + std::to_string(s) + ".kernel",
                           glorot_uniform_init(in * st.kernel, st.filters * st.kernel, count, mix_seed(seed, s + 1))});
        blocks_.push_back({"conv" + std::to_string(s) + ".bias", std::vector<double>(st.filters, 0.0)});
        in = st.filters;
    }
    const int flat = arch_.flatten_length();
    blocks_.push_back({"dense.kernel",
                       glorot_uniform_init(flat, arch_.outputs, static_cast<std::size_t>(flat) * arch_.outputs,
                                           mix_seed(seed, arch_.stages.size() + 1))});
    blocks_.push_back({"dense.bias", std::vector<double>(arch_.outputs, 0.0)});
    adam_.m = zero_gradients();
    adam_.v = zero_gradients();
}

std::size_t InverseModel::weight_count() const noexcept {
    std::size_t n = 0;
    for (const auto& b : blocks_) n += b.values.size();
    return n;
}

Gradients InverseModel::zero_gradients() const {
    Gradients g;
    g.reserve(blocks_.size());
    for (const auto& b : blocks_) g.emplace_back(b.values.size(), 0.0);
    return g;
}

ConvView InverseModel::conv(std::size_t stage) const {
    const int in = stage == 0 ? arch_.input_channels : arch_.stages[stage - 1].filters;
    const auto& st = arch_.stages[stage];
    return {blocks_[2 * stage].values, blocks_[2 * stage + 1].values, in, st.filters, st.kernel};
}

bool InverseModel::operator==(const InverseModel& o) const {
    if (!(arch_ == o.arch_) || seed_ != o.seed_ || epoch != o.epoch || updates != o.updates) return false;
    if (blocks_.size() != o.blocks_.size()) return false;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        if (blocks_[i].name != o.blocks_[i].name || blocks_[i].values != o.blocks_[i].values) return false;
    }
    return adam_.t == o.adam_.t && adam_.m == o.adam_.m && adam_.v == o.adam_.v;
}

// ---------------------------------------------------------------------------
// Forward / backward

std::vector<double> dropout_mask(std::uint64_t seed, std::int64_t step, std::size_t sample, std::size_t width,
                                 double rate) {
    std::vector<double> mask(width, 1.0);
    if (rate <= 0.0) return mask;
    std::mt19937_64 rng(mix_seed(mix_seed(seed ^ 0xd50u, static_cast<std::uint64_t>(step)), sample));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (auto& m : mask) m = u(rng) < rate ? 0.0 : keep_scale;
    return mask;
}

namespace {

using ConvForward = void (*)(const Tensor&, const ConvView&, Tensor&);
using ConvBackward = void (*)(const Tensor&, const ConvView&, const Tensor&, Tensor&, std::span<double>,
                              std::span<double>, Tensor*);

void check_batch(const InverseModel& model, const Matrix& batch) {
    if (batch.cols() != static_cast<std::size_t>(model.arch().input_length * model.arch().input_channels)) {
        throw std::invalid_argument("forward: row width " + std::to_string(batch.cols()) +
                                    " does not match input length " +
                                    std::to_string(model.arch().input_length));
    }
}

void forward_sample(const InverseModel& model, std::span<const double> row, bool training, std::int64_t step,
                    std::size_t sample, SampleCache& cache, ConvForward conv_fn) {
    const auto& arch = model.arch();
    const std::size_t n_stages = arch.stages.size();
    cache.conv_in.resize(n_stages);
    cache.relu_out.resize(n_stages);
    cache.argmax.resize(n_stages);

    Tensor current(arch.input_channels, arch.input_length);
    std::copy(row.begin(), row.end(), current.data.begin());
    for (std::size_t s = 0; s < n_stages; ++s) {
        cache.conv_in[s] = std::move(current);
        conv_fn(cache.conv_in[s], model.conv(s), cache.relu_out[s]);
        maxpool2_forward(cache.relu_out[s], current, cache.argmax[s]);
    }
    cache.flat = std::move(current.data);
    cache.dense_in = cache.flat;
    cache.mask.clear();
    if (training && arch.dropout > 0.0) {
        cache.mask = dropout_mask(model.seed(), step, sample, cache.flat.size(), arch.dropout);
        for (std::size_t j = 0; j < cache.dense_in.size(); ++j) cache.dense_in[j] *= cache.mask[j];
    }
    cache.output.assign(static_cast<std::size_t>(arch.outputs), 0.0);
    dense_forward(model.dense_weights(), model.dense_bias(), cache.dense_in, cache.output);
}

void backward_sample(const InverseModel& model, SampleCache& cache, std::span<const double> target, double scale,
                     Gradients& grads, ConvBackward conv_fn) {
    const auto& arch = model.arch();
    const std::size_t n_stages = arch.stages.size();
    std::vector<double> dy(cache.output.size());
    for (std::size_t j = 0; j < dy.size(); ++j) dy[j] = scale * (cache.output[j] - target[j]);

    std::vector<double> dflat(cache.dense_in.size());
    dense_backward(model.dense_weights(), cache.dense_in, dy, grads[2 * n_stages], grads[2 * n_stages + 1], dflat);
    if (!cache.mask.empty()) {
        for (std::size_t j = 0; j < dflat.size(); ++j) dflat[j] *= cache.mask[j];
    }
    if (n_stages == 0) return;

    Tensor grad_pool(arch.stages.back().filters, static_cast<int>(dflat.size()) / arch.stages.back().filters);
    grad_pool.data = std::move(dflat);
    for (std::size_t s = n_stages; s-- > 0;) {
        const Tensor& relu = cache.relu_out[s];
        Tensor grad_relu;
        maxpool2_backward(grad_pool, cache.argmax[s], relu.channels, relu.length, grad_relu);
        Tensor grad_in;
        conv_fn(cache.conv_in[s], model.conv(s), relu, grad_relu, grads[2 * s], grads[2 * s + 1],
                s > 0 ? &grad_in : nullptr);
        grad_pool = std::move(grad_in);
    }
}

BackwardResult backward_impl(const InverseModel& model, const Matrix& batch, const Matrix& targets, bool training,
                             std::int64_t step, bool reference) {
    check_batch(model, batch);
    if (targets.rows() != batch.rows() || targets.cols() != static_cast<std::size_t>(model.arch().outputs)) {
        throw std::invalid_argument("backward: target shape mismatch");
    }
    const std::size_t n = batch.rows();
    if (n == 0) throw std::invalid_argument("backward: empty batch");
    const double scale = 2.0 / static_cast<double>(n * targets.cols());
    std::vector<Gradients> per_sample(n);
    std::vector<double> sq(n, 0.0);
    const ConvForward fwd = reference ? conv1d_relu_forward_reference : conv1d_relu_forward;
    const ConvBackward bwd = reference ? conv1d_relu_backward_reference : conv1d_relu_backward;

    const auto body = [&](std::size_t i) {
        SampleCache cache;
        forward_sample(model, batch.row(i), training, step, i, cache, fwd);
        per_sample[i] = model.zero_gradients();
        const auto t = targets.row(i);
        for (std::size_t j = 0; j < t.size(); ++j) sq[i] += (cache.output[j] - t[j]) * (cache.output[j] - t[j]);
        backward_sample(model, cache, t, scale, per_sample[i], bwd);
    };
    if (reference) {
        for (std::size_t i = 0; i < n; ++i) body(i);
    } else {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) body(static_cast<std::size_t>(i));
    }

    // Fixed-order reduction keeps results independent of the thread schedule.
    BackwardResult r{std::move(per_sample[0]), 0.0};
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t b = 0; b < r.grads.size(); ++b) {
            auto& dst = r.grads[b];
            const auto& src = per_sample[i][b];
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
    }
    for (double v : sq) r.loss += v;
    r.loss /= static_cast<double>(n * targets.cols());
    return r;
}

}  // namespace

Matrix forward(const InverseModel& model, const Matrix& batch, bool training, std::int64_t step,
               std::vector<SampleCache>* caches) {
    check_batch(model, batch);
    const std::size_t n = batch.rows();
    Matrix out(n, static_cast<std::size_t>(model.arch().outputs));
    if (caches) caches->assign(n, {});
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        SampleCache local;
        SampleCache& cache = caches ? (*caches)[i] : local;
        forward_sample(model, batch.row(i), training, step, i, cache, conv1d_relu_forward);
        out.set_row(i, cache.output);
    }
    return out;
}

BackwardResult backward(const InverseModel& model, const Matrix& batch, const Matrix& targets, bool training,
                        std::int64_t step) {
    return backward_impl(model, batch, targets, training, step, false);
}

BackwardResult backward_reference(const InverseModel& model, const Matrix& batch, const Matrix& targets,
                                  bool training, std::int64_t step) {
    return backward_impl(model, batch, targets, training, step, true);
}

// ---------------------------------------------------------------------------
// Optimization

void adam_step(std::vector<WeightBlock>& weights, const Gradients& grads, AdamState& state, double lr,
               std::int64_t t, const AdamConfig& c) {
    if (t < 1) throw std::invalid_argument("adam: step index must be >= 1");
    if (grads.size() != weights.size()) throw std::invalid_argument("adam: gradient block count mismatch");
    if (state.m.size() != weights.size()) {
        state.m.clear();
        state.v.clear();
        for (const auto& w : weights) {
            state.m.emplace_back(w.values.size(), 0.0);
            state.v.emplace_back(w.values.size(), 0.0);
        }
    }
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
    for (std::size_t b = 0; b < weights.size(); ++b) {
        auto& w = weights[b].values;
        auto& m = state.m[b];
        auto& v = state.v[b];
        const auto& g = grads[b];
        if (g.size() != w.size()) throw std::invalid_argument("adam: gradient size mismatch in " + weights[b].name);
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= lr * mhat / (std::sqrt(vhat) + c.epsilon);
        }
    }
    state.t = t;
}

double mse(const Matrix& p, const Matrix& t) {
    if (p.rows() != t.rows() || p.cols() != t.cols()) throw std::invalid_argument("mse: shape mismatch");
    if (p.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < p.storage().size(); ++i) {
        const double d = p.storage()[i] - t.storage()[i];
        s += d * d;
    }
    return s / static_cast<double>(p.storage().size());
}

Matrix predict(const InverseModel& model, const Matrix& rows) { return forward(model, rows, false); }

TrainingHistory fit(InverseModel& model, const Matrix& x_train, const Matrix& y_train, const Matrix& x_val,
                    const Matrix& y_val, const TrainConfig& config, const EpochCallback& on_epoch) {
    if (config.batch_size < 1) throw std::invalid_argument("fit: batch size must be >= 1");
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("fit: learning rate must be positive");
    if (config.epochs < 0) throw std::invalid_argument("fit: epochs must be non-negative");
    TrainingHistory history;
    if (config.epochs == 0) return history;
    if (x_train.rows() == 0) throw InputError("fit: empty training split");
    if (x_val.rows() == 0) throw InputError("fit: empty validation split");
    if (x_train.rows() != y_train.rows() || x_val.rows() != y_val.rows()) {
        throw std::invalid_argument("fit: input/target row mismatch");
    }

    const std::size_t n = x_train.rows();
    const auto bs = static_cast<std::size_t>(config.batch_size);
    std::vector<std::size_t> order(n);
    for (int e = 0; e < config.epochs; ++e) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(model.epoch)));
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t count = std::min(bs, n - start);
            const std::span<const std::size_t> idx(order.data() + start, count);
            const Matrix xb = x_train.select_rows(idx);
            const Matrix yb = y_train.select_rows(idx);
            ++model.updates;
            const auto r = backward(model, xb, yb, true, model.updates);
            adam_step(model.blocks(), r.grads, model.optimizer(), config.learning_rate, model.updates);
            loss_sum += r.loss * static_cast<double>(count);
        }
        ++model.epoch;
        history.train_mse.push_back(loss_sum / static_cast<double>(n));
        history.validation_mse.push_back(mse(predict(model, x_val), y_val));
        if (on_epoch) on_epoch(model.epoch, history.train_mse.back(), history.validation_mse.back());
    }
    return history;
}

// ---------------------------------------------------------------------------
// Persistence

void save_model(const InverseModel& model, const std::string& dir, const std::string& scaler_ref) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::ordered_json j;
    j["format"] = "hydroinv-model";
    j["format_version"] = 1;
    const auto& a = model.arch();
    j["architecture"]["input_length"] = a.input_length;
    j["architecture"]["input_channels"] = a.input_channels;
    j["architecture"]["dropout"] = a.dropout;
    j["architecture"]["outputs"] = a.outputs;
    j["architecture"]["stages"] = nlohmann::json::array();
    for (const auto& s : a.stages) j["architecture"]["stages"].push_back({{"filters", s.filters}, {"kernel", s.kernel}});
    j["seed"] = model.seed();
    j["epoch"] = model.epoch;
    j["updates"] = model.updates;
    j["scaler_ref"] = scaler_ref;
    j["weights_file"] = "weights.f64";
    j["optimizer_file"] = "optimizer.f64";
    j["blocks"] = nlohmann::json::array();
    for (const auto& b : model.blocks()) j["blocks"].push_back({{"name", b.name}, {"count", b.values.size()}});
    j["weight_count"] = model.weight_count();
    io::write_text_file((fs::path(dir) / "manifest.json").string(), j.dump(2) + "\n");

    std::ofstream w(fs::path(dir) / "weights.f64", std::ios::binary);
    for (const auto& b : model.blocks()) io::write_f64_le(w, b.values);
    std::ofstream o(fs::path(dir) / "optimizer.f64", std::ios::binary);
    for (const auto& m : model.optimizer().m) io::write_f64_le(o, m);
    for (const auto& v : model.optimizer().v) io::write_f64_le(o, v);
}

InverseModel load_model(const std::string& dir) {
    namespace fs = std::filesystem;
    const auto manifest_path = (fs::path(dir) / "manifest.json").string();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_text_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError("model manifest " + manifest_path + ": " + e.what());
    }
    if (j.value("format", "") != "hydroinv-model") throw InputError("model manifest: field 'format' invalid");
    ArchitectureSpec a;
    const auto& ja = j.at("architecture");
    a.input_length = ja.at("input_length").get<int>();
    a.input_channels = ja.at("input_channels").get<int>();
    a.dropout = ja.at("dropout").get<double>();
    a.outputs = ja.at("outputs").get<int>();
    for (const auto& s : ja.at("stages")) a.stages.push_back({s.at("filters").get<int>(), s.at("kernel").get<int>()});

    InverseModel model(a, j.at("seed").get<std::uint64_t>());
    model.epoch = j.at("epoch").get<int>();
    model.updates = j.at("updates").get<std::int64_t>();
    const auto& jb = j.at("blocks");
    if (jb.size() != model.blocks().size()) throw InputError("model manifest: field 'blocks' has wrong length");
    std::ifstream w(fs::path(dir) / "weights.f64", std::ios::binary);
    if (!w) throw InputError("missing weights file in " + dir);
    for (std::size_t b = 0; b < model.blocks().size(); ++b) {
        auto& block = model.blocks()[b];
        if (jb[b].at("name").get<std::string>() != block.name ||
            jb[b].at("count").get<std::size_t>() != block.values.size()) {
            throw InputError("model manifest: block " + block.name + " does not match architecture");
        }
        block.values = io::read_f64_le(w, block.values.size());
    }
    std::ifstream o(fs::path(dir) / "optimizer.f64", std::ios::binary);
    if (o) {
        auto& st = model.optimizer();
        for (auto& m : st.m) m = io::read_f64_le(o, m.size());
        for (auto& v : st.v) v = io::read_f64_le(o, v.size());
        st.t = model.updates;
    }
    return model;
}

}  // namespace hydroinv::nn
