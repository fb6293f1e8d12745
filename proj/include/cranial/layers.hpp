#pragma once

#include <vector>

#include "cranial/tensor.hpp"

namespace cranial {

/// Weights (out, in, k, k, k) with kx fastest, plus one bias per output channel.
struct ConvKernel {
  int out_channels = 1;
  int in_channels = 1;
  int size = 1;
  std::vector<double> weights;
  std::vector<double> bias;

  ConvKernel() = default;
  ConvKernel(int out_ch, int in_ch, int k);

  [[nodiscard]] std::size_t taps() const noexcept { return static_cast<std::size_t>(size) * size * size; }
  [[nodiscard]] std::size_t weight_index(int o, int i, int kx, int ky, int kz) const noexcept {
    return ((static_cast<std::size_t>(o) * in_channels + i) * taps()) +
           (static_cast<std::size_t>(kz) * size + ky) * size + kx;
  }

  friend bool operator==(const ConvKernel&, const ConvKernel&) = default;
};

struct ConvGradients {
  Tensor input;
  std::vector<double> weights;
  std::vector<double> bias;
};

/// Spatial dims after a same-padded convolution: ceil(n / stride).
Dims conv_output_dims(const Dims& in, int stride);

/// Same-padded cross-correlation, padding (k - 1) / 2, stride 1 or 2.
Tensor conv3d_forward(const Tensor& x, const ConvKernel& k, int stride);
ConvGradients conv3d_backward(const Tensor& x, const ConvKernel& k, const Tensor& grad_out, int stride);

/// Stride-2 transposed convolution, output = 2 * input per axis. It is the
/// adjoint of conv3d_forward(stride 2) with weights w'[i][o] = w[o][i],
/// plus a per-channel bias.
Tensor deconv3d_forward(const Tensor& x, const ConvKernel& k);
ConvGradients deconv3d_backward(const Tensor& x, const ConvKernel& k, const Tensor& grad_out);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

/// Logistic function; backward takes the forward *output*.
Tensor sigmoid_forward(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out);

struct DiceLoss {
  double loss = 0.0;
  Tensor grad;  // d loss / d pred
};

/// 1 - (2 sum(p g) + eps) / (sum p + sum g + eps).
DiceLoss dice_loss(const Tensor& pred, const Tensor& target, double eps = 1e-6);

}  // namespace cranial
