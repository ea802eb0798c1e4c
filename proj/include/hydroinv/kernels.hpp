#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hydroinv::nn {

/// channels x length, row-major.
struct Tensor {
    int channels = 0;
    int length = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c, int l, double fill = 0.0)
        : channels(c), length(l), data(static_cast<std::size_t>(c) * static_cast<std::size_t>(l), fill) {}

    double& operator()(int c, int t) { return data[static_cast<std::size_t>(c) * length + t]; }
    double operator()(int c, int t) const { return data[static_cast<std::size_t>(c) * length + t]; }
    void resize(int c, int l) {
        channels = c;
        length = l;
        data.assign(static_cast<std::size_t>(c) * static_cast<std::size_t>(l), 0.0);
    }
};

/**
 * Read-only view of one convolution layer.
 *
 * kernel layout: [tap][out_channel][in_channel], i.e. `taps` contiguous
 * out x in blocks; bias has `out` entries.
 */
struct ConvView {
    std::span<const double> kernel;
    std::span<const double> bias;
    int in = 0;
    int out = 0;
    int taps = 0;

    double w(int k, int o, int i) const {
        return kernel[(static_cast<std::size_t>(k) * out + o) * in + i];
    }
};

/// Valid (no padding, stride 1) cross-correlation plus bias, then ReLU.
/// Throws std::invalid_argument when input length < taps.
void conv1d_relu_forward(const Tensor& input, const ConvView& w, Tensor& output);
void conv1d_relu_forward_reference(const Tensor& input, const ConvView& w, Tensor& output);

/**
 * Backward pass of conv1d_relu_forward.
 *
 * `grad_output` holds dL/d(relu output) and is masked in place to
 * dL/d(pre-activation) using `output`. Kernel and bias gradients are
 * accumulated (+=). When `grad_input` is non-null it is overwritten.
 */
void conv1d_relu_backward(const Tensor& input, const ConvView& w, const Tensor& output, Tensor& grad_output,
                          std::span<double> grad_kernel, std::span<double> grad_bias, Tensor* grad_input);
void conv1d_relu_backward_reference(const Tensor& input, const ConvView& w, const Tensor& output,
                                    Tensor& grad_output, std::span<double> grad_kernel,
                                    std::span<double> grad_bias, Tensor* grad_input);

/// Width-2 max pooling; trailing odd element dropped; ties pick the first element.
/// `argmax` receives the flat input index of each output's maximum.
void maxpool2_forward(const Tensor& input, Tensor& output, std::vector<int>& argmax);
/// Scatters grad_output into a zeroed grad_input of the pooled input's shape.
void maxpool2_backward(const Tensor& grad_output, const std::vector<int>& argmax, int in_channels,
                       int in_length, Tensor& grad_input);

/// y = W x + b with W (out x in) row-major.
void dense_forward(std::span<const double> weights, std::span<const double> bias, std::span<const double> x,
                   std::span<double> y);
/// Accumulates dW += dy x^T, db += dy; overwrites dx = W^T dy when non-empty.
void dense_backward(std::span<const double> weights, std::span<const double> x, std::span<const double> dy,
                    std::span<double> grad_weights, std::span<double> grad_bias, std::span<double> dx);

}  // namespace hydroinv::nn
