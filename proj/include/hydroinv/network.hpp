#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hydroinv/kernels.hpp"
#include "hydroinv/matrix.hpp"

namespace hydroinv::nn {

struct ConvStage {
    int filters = 0;
    int kernel = 0;
    bool operator==(const ConvStage&) const = default;
};

/**
 * 1D CNN layout: [conv(valid, stride 1) -> ReLU -> maxpool(2)] x N,
 * flatten, dropout, dense linear head.
 */
struct ArchitectureSpec {
    int input_length = 0;
    int input_channels = 1;
    std::vector<ConvStage> stages;
    double dropout = 0.0;
    int outputs = 0;

    /// Tuned trunk: (128,16), (64,8), (32,4) on 3654 days, dropout 0.2.
    static ArchitectureSpec tuned(int outputs, int input_length = 3654, double dropout = 0.2);

    /// Sequence length after every conv and pool, in order (conv0, pool0, conv1, ...).
    /// Returns an empty vector when the stages exhaust the sequence.
    std::vector<int> lengths() const;
    int flatten_length() const;
    bool feasible() const;
    /// Closed-form trainable weight count.
    std::size_t weight_count() const;
    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;

    bool operator==(const ArchitectureSpec&) const = default;
};

/// Named flat weight block; blocks are kept in declaration order.
struct WeightBlock {
    std::string name;
    std::vector<double> values;
};

using Gradients = std::vector<std::vector<double>>;

struct AdamState {
    Gradients m;
    Gradients v;
    std::int64_t t = 0;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Glorot/Xavier uniform: U(-b, b), b = sqrt(6 / (fan_in + fan_out)).
std::vector<double> glorot_uniform_init(int fan_in, int fan_out, std::size_t count, std::uint64_t seed);
double glorot_bound(int fan_in, int fan_out);

class InverseModel {
public:
    InverseModel() = default;
    /// Glorot-initialized kernels, zero biases; deterministic in `seed`.
    InverseModel(ArchitectureSpec arch, std::uint64_t seed);

    const ArchitectureSpec& arch() const noexcept { return arch_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::vector<WeightBlock>& blocks() noexcept { return blocks_; }
    const std::vector<WeightBlock>& blocks() const noexcept { return blocks_; }
    /// Sum of block sizes (enumeration of the containers).
    std::size_t weight_count() const noexcept;
    Gradients zero_gradients() const;

    ConvView conv(std::size_t stage) const;
    const std::vector<double>& dense_weights() const { return blocks_[2 * arch_.stages.size()].values; }
    const std::vector<double>& dense_bias() const { return blocks_[2 * arch_.stages.size() + 1].values; }

    AdamState& optimizer() noexcept { return adam_; }
    const AdamState& optimizer() const noexcept { return adam_; }
    int epoch = 0;
    std::int64_t updates = 0;  ///< optimizer steps taken; drives dropout masks

    bool operator==(const InverseModel& o) const;

private:
    ArchitectureSpec arch_;
    std::uint64_t seed_ = 0;
    std::vector<WeightBlock> blocks_;
    AdamState adam_;
};

/// Per-sample activations retained for backpropagation.
struct SampleCache {
    std::vector<Tensor> conv_in;    ///< input to each conv stage
    std::vector<Tensor> relu_out;   ///< post-ReLU conv outputs
    std::vector<std::vector<int>> argmax;
    std::vector<double> flat;       ///< flattened last pool output
    std::vector<double> mask;       ///< dropout multipliers (empty when inactive)
    std::vector<double> dense_in;
    std::vector<double> output;
};

/// Dropout multipliers for one sample at one optimizer step (schedule independent).
std::vector<double> dropout_mask(std::uint64_t seed, std::int64_t step, std::size_t sample, std::size_t width,
                                 double rate);

/**
 * Forward pass over batch rows.
 *
 * With `training` set, dropout is active using masks drawn from
 * (model seed, `step`, row index); otherwise the pass is deterministic.
 * Throws std::invalid_argument on a width mismatch.
 */
Matrix forward(const InverseModel& model, const Matrix& batch, bool training, std::int64_t step = 0,
               std::vector<SampleCache>* caches = nullptr);

struct BackwardResult {
    Gradients grads;
    double loss = 0.0;  ///< mean over batch and outputs of squared error
};

/// Gradients of the batch MSE for a training-mode pass at `step`.
BackwardResult backward(const InverseModel& model, const Matrix& batch, const Matrix& targets, bool training = true,
                        std::int64_t step = 0);
/// Same result computed with the naive reference kernels, serially.
BackwardResult backward_reference(const InverseModel& model, const Matrix& batch, const Matrix& targets,
                                  bool training = true, std::int64_t step = 0);

/// One Adam update on every block; `t` is the 1-based step index.
void adam_step(std::vector<WeightBlock>& weights, const Gradients& grads, AdamState& state, double lr,
               std::int64_t t, const AdamConfig& config = {});

struct TrainConfig {
    double learning_rate = 1e-5;
    int epochs = 500;
    int batch_size = 10;
    std::uint64_t seed = 0;  ///< shuffling seed
};

struct TrainingHistory {
    std::vector<double> train_mse;
    std::vector<double> validation_mse;
};

/// Called after each epoch with (epoch, train mse, validation mse).
using EpochCallback = std::function<void(int, double, double)>;

/**
 * Mini-batch Adam on MSE. Training rows are reshuffled each epoch; the
 * recorded training MSE is the batch-size-weighted mean of batch losses
 * over the epoch, validation MSE is an inference pass.
 */
TrainingHistory fit(InverseModel& model, const Matrix& x_train, const Matrix& y_train, const Matrix& x_val,
                    const Matrix& y_val, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Inference-mode predictions (dropout disabled).
Matrix predict(const InverseModel& model, const Matrix& rows);
double mse(const Matrix& predictions, const Matrix& targets);

/// Writes manifest.json, weights.f64 (blocks in declaration order) and optimizer.f64 into `dir`.
void save_model(const InverseModel& model, const std::string& dir, const std::string& scaler_ref = "");
InverseModel load_model(const std::string& dir);

}  // namespace hydroinv::nn
