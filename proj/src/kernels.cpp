#include "hydroinv/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <stdexcept>

namespace hydroinv::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

// Below this receptive-field size the per-tap products degenerate into
// outer products, so an explicit im2col GEMM is faster.
constexpr int kIm2colMaxField = 64;

void check_shapes(const Tensor& input, const ConvView& w) {
    if (input.channels != w.in) throw std::invalid_argument("conv1d: input channel mismatch");
    if (input.length < w.taps) throw std::invalid_argument("conv1d: input shorter than kernel");
    if (w.kernel.size() != static_cast<std::size_t>(w.taps) * w.out * w.in ||
        w.bias.size() != static_cast<std::size_t>(w.out)) {
        throw std::invalid_argument("conv1d: weight container size mismatch");
    }
}

/// rows (i * taps + k), columns t: input(i, t + k).
RowMat im2col(const Tensor& input, int taps, int out_len) {
    RowMat cols(input.channels * taps, out_len);
    for (int i = 0; i < input.channels; ++i) {
        const double* src = input.data.data() + static_cast<std::size_t>(i) * input.length;
        for (int k = 0; k < taps; ++k) std::copy_n(src + k, out_len, cols.row(i * taps + k).data());
    }
    return cols;
}

/// Kernel rearranged to out x (in * taps) matching im2col rows.
RowMat kernel_matrix(const ConvView& w) {
    RowMat m(w.out, w.in * w.taps);
    for (int o = 0; o < w.out; ++o)
        for (int i = 0; i < w.in; ++i)
            for (int k = 0; k < w.taps; ++k) m(o, i * w.taps + k) = w.w(k, o, i);
    return m;
}

}  // namespace

void conv1d_relu_forward(const Tensor& input, const ConvView& w, Tensor& output) {
    check_shapes(input, w);
    const int out_len = input.length - w.taps + 1;
    output.resize(w.out, out_len);
    Map y(output.data.data(), w.out, out_len);
    const Eigen::Map<const Eigen::VectorXd> b(w.bias.data(), w.out);
    y.colwise() = b;

    if (w.in * w.taps <= kIm2colMaxField) {
        y.noalias() += kernel_matrix(w) * im2col(input, w.taps, out_len);
    } else {
        const MapC x(input.data.data(), w.in, input.length);
        for (int k = 0; k < w.taps; ++k) {
            const MapC wk(w.kernel.data() + static_cast<std::size_t>(k) * w.out * w.in, w.out, w.in);
            y.noalias() += wk * x.middleCols(k, out_len);
        }
    }
    y = y.cwiseMax(0.0);
}

void conv1d_relu_forward_reference(const Tensor& input, const ConvView& w, Tensor& output) {
    check_shapes(input, w);
    const int out_len = input.length - w.taps + 1;
    output.resize(w.out, out_len);
    for (int o = 0; o < w.out; ++o) {
        for (int t = 0; t < out_len; ++t) {
            double acc = w.bias[static_cast<std::size_t>(o)];
            for (int i = 0; i < w.in; ++i)
                for (int k = 0; k < w.taps; ++k) acc += w.w(k, o, i) * input(i, t + k);
            output(o, t) = acc > 0.0 ? acc : 0.0;
        }
    }
}

void conv1d_relu_backward(const Tensor& input, const ConvView& w, const Tensor& output, Tensor& grad_output,
                          std::span<double> grad_kernel, std::span<double> grad_bias, Tensor* grad_input) {
    check_shapes(input, w);
    const int out_len = output.length;
    Map g(grad_output.data.data(), w.out, out_len);
    const MapC y(output.data.data(), w.out, out_len);
    g = (y.array() > 0.0).select(g, 0.0);

    Eigen::Map<Eigen::VectorXd> db(grad_bias.data(), w.out);
    db += g.rowwise().sum();

    if (w.in * w.taps <= kIm2colMaxField) {
        const RowMat dw = g * im2col(input, w.taps, out_len).transpose();
        for (int o = 0; o < w.out; ++o)
            for (int i = 0; i < w.in; ++i)
                for (int k = 0; k < w.taps; ++k)
                    grad_kernel[(static_cast<std::size_t>(k) * w.out + o) * w.in + i] += dw(o, i * w.taps + k);
        if (grad_input) {
            const RowMat dcols = kernel_matrix(w).transpose() * g;
            grad_input->resize(w.in, input.length);
            for (int i = 0; i < w.in; ++i) {
                double* dst = grad_input->data.data() + static_cast<std::size_t>(i) * input.length;
                for (int k = 0; k < w.taps; ++k) {
                    const double* src = dcols.row(i * w.taps + k).data();
                    for (int t = 0; t < out_len; ++t) dst[t + k] += src[t];
                }
            }
        }
        return;
    }

    const MapC x(input.data.data(), w.in, input.length);
    for (int k = 0; k < w.taps; ++k) {
        Map dwk(grad_kernel.data() + static_cast<std::size_t>(k) * w.out * w.in, w.out, w.in);
        dwk.noalias() += g * x.middleCols(k, out_len).transpose();
    }
    if (grad_input) {
        grad_input->resize(w.in, input.length);
        Map dx(grad_input->data.data(), w.in, input.length);
        for (int k = 0; k < w.taps; ++k) {
            const MapC wk(w.kernel.data() + static_cast<std::size_t>(k) * w.out * w.in, w.out, w.in);
            dx.middleCols(k, out_len).noalias() += wk.transpose() * g;
        }
    }
}

void conv1d_relu_backward_reference(const Tensor& input, const ConvView& w, const Tensor& output,
                                    Tensor& grad_output, std::span<double> grad_kernel,
                                    std::span<double> grad_bias, Tensor* grad_input) {
    check_shapes(input, w);
    const int out_len = output.length;
    for (int o = 0; o < w.out; ++o)
        for (int t = 0; t < out_len; ++t)
            if (!(output(o, t) > 0.0)) grad_output(o, t) = 0.0;
    if (grad_input) grad_input->resize(w.in, input.length);
    for (int o = 0; o < w.out; ++o) {
        for (int t = 0; t < out_len; ++t) {
            const double g = grad_output(o, t);
            grad_bias[static_cast<std::size_t>(o)] += g;
            for (int i = 0; i < w.in; ++i) {
                for (int k = 0; k < w.taps; ++k) {
                    grad_kernel[(static_cast<std::size_t>(k) * w.out + o) * w.in + i] += g * input(i, t + k);
                    if (grad_input) (*grad_input)(i, t + k) += g * w.w(k, o, i);
                }
            }
        }
    }
}

void maxpool2_forward(const Tensor& input, Tensor& output, std::vector<int>& argmax) {
    if (input.length < 2) throw std::invalid_argument("maxpool: input length must be at least 2");
    const int out_len = input.length / 2;
    output.resize(input.channels, out_len);
    argmax.resize(static_cast<std::size_t>(input.channels) * out_len);
    for (int c = 0; c < input.channels; ++c) {
        const double* src = input.data.data() + static_cast<std::size_t>(c) * input.length;
        const int base = c * input.length;
        for (int t = 0; t < out_len; ++t) {
            const double a = src[2 * t];
            const double b = src[2 * t + 1];
            const bool second = b > a;
            output(c, t) = second ? b : a;
            argmax[static_cast<std::size_t>(c) * out_len + t] = base + 2 * t + (second ? 1 : 0);
        }
    }
}

void maxpool2_backward(const Tensor& grad_output, const std::vector<int>& argmax, int in_channels, int in_length,
                       Tensor& grad_input) {
    grad_input.resize(in_channels, in_length);
    for (std::size_t j = 0; j < argmax.size(); ++j) grad_input.data[static_cast<std::size_t>(argmax[j])] += grad_output.data[j];
}

void dense_forward(std::span<const double> weights, std::span<const double> bias, std::span<const double> x,
                   std::span<double> y) {
    const auto out = static_cast<Eigen::Index>(y.size());
    const auto in = static_cast<Eigen::Index>(x.size());
    if (weights.size() != static_cast<std::size_t>(out * in) || bias.size() != y.size()) {
        throw std::invalid_argument("dense: shape mismatch");
    }
    const MapC wm(weights.data(), out, in);
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), in);
    Eigen::Map<Eigen::VectorXd> yv(y.data(), out);
    yv = Eigen::Map<const Eigen::VectorXd>(bias.data(), out);
    yv.noalias() += wm * xv;
}

void dense_backward(std::span<const double> weights, std::span<const double> x, std::span<const double> dy,
                    std::span<double> grad_weights, std::span<double> grad_bias, std::span<double> dx) {
    const auto out = static_cast<Eigen::Index>(dy.size());
    const auto in = static_cast<Eigen::Index>(x.size());
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), in);
    const Eigen::Map<const Eigen::VectorXd> g(dy.data(), out);
    Map gw(grad_weights.data(), out, in);
    gw.noalias() += g * xv.transpose();
    Eigen::Map<Eigen::VectorXd>(grad_bias.data(), out) += g;
    if (!dx.empty()) {
        const MapC wm(weights.data(), out, in);
        Eigen::Map<Eigen::VectorXd>(dx.data(), in).noalias() = wm.transpose() * g;
    }
}

}  // namespace hydroinv::nn
