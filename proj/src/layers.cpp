#include "cranial/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace cranial {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

// Upper bound on the im2col buffer, in doubles (~64 MB).
constexpr std::size_t kMaxColumnBuffer = std::size_t{1} << 23;

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// Geometry of a same-padded convolution from `in` to `out` dims.
struct ConvGeometry {
  int channels;  // channels of the sampled (input) side
  Dims in;
  Dims out;
  int k;
  int stride;
  [[nodiscard]] int pad() const { return (k - 1) / 2; }
  [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(channels) * k * k * k; }
  [[nodiscard]] std::size_t slab(int z0, int z1) const {
    return static_cast<std::size_t>(z1 - z0) * out.ny * out.nx;
  }
  // Output z-slab height that keeps the column buffer bounded.
  [[nodiscard]] int slab_height() const {
    const std::size_t per_slice = rows() * out.ny * out.nx;
    return std::max(1, static_cast<int>(std::min<std::size_t>(out.nz, kMaxColumnBuffer / std::max<std::size_t>(1, per_slice))));
  }
};

// Valid output-x range [lo, hi) for kernel column kx.
std::pair<int, int> x_range(const ConvGeometry& g, int kx) {
  const int p = g.pad();
  const int lo = std::max(0, floor_div(p - kx + g.stride - 1, g.stride));
  const int hi = std::min(g.out.nx, floor_div(g.in.nx - 1 + p - kx, g.stride) + 1);
  return {lo, std::max(lo, hi)};
}

// Gathers input patches for output slices [z0, z1) into a rows() x slab matrix.
void im2col(const double* in, const ConvGeometry& g, int z0, int z1, double* cols) {
  const int k = g.k, s = g.stride, p = g.pad();
  const std::size_t width = g.slab(z0, z1);
  const std::size_t in_plane = static_cast<std::size_t>(g.in.nx) * g.in.ny;
  for (int c = 0; c < g.channels; ++c) {
    const double* in_c = in + static_cast<std::size_t>(c) * in_plane * g.in.nz;
    for (int kz = 0; kz < k; ++kz) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const std::size_t row = ((static_cast<std::size_t>(c) * k + kz) * k + ky) * k + kx;
          double* dst = cols + row * width;
          const auto [xlo, xhi] = x_range(g, kx);
          for (int oz = z0; oz < z1; ++oz) {
            const int iz = oz * s + kz - p;
            for (int oy = 0; oy < g.out.ny; ++oy, dst += g.out.nx) {
              const int iy = oy * s + ky - p;
              if (iz < 0 || iz >= g.in.nz || iy < 0 || iy >= g.in.ny) {
                std::fill(dst, dst + g.out.nx, 0.0);
                continue;
              }
              const double* src = in_c + static_cast<std::size_t>(iz) * in_plane + static_cast<std::size_t>(iy) * g.in.nx;
              std::fill(dst, dst + xlo, 0.0);
              for (int ox = xlo; ox < xhi; ++ox) dst[ox] = src[ox * s + kx - p];
              std::fill(dst + xhi, dst + g.out.nx, 0.0);
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-adds columns back onto the input lattice.
void col2im(const double* cols, const ConvGeometry& g, int z0, int z1, double* in) {
  const int k = g.k, s = g.stride, p = g.pad();
  const std::size_t width = g.slab(z0, z1);
  const std::size_t in_plane = static_cast<std::size_t>(g.in.nx) * g.in.ny;
  for (int c = 0; c < g.channels; ++c) {
    double* in_c = in + static_cast<std::size_t>(c) * in_plane * g.in.nz;
    for (int kz = 0; kz < k; ++kz) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const std::size_t row = ((static_cast<std::size_t>(c) * k + kz) * k + ky) * k + kx;
          const double* src = cols + row * width;
          const auto [xlo, xhi] = x_range(g, kx);
          for (int oz = z0; oz < z1; ++oz) {
            const int iz = oz * s + kz - p;
            for (int oy = 0; oy < g.out.ny; ++oy, src += g.out.nx) {
              const int iy = oy * s + ky - p;
              if (iz < 0 || iz >= g.in.nz || iy < 0 || iy >= g.in.ny) continue;
              double* dst = in_c + static_cast<std::size_t>(iz) * in_plane + static_cast<std::size_t>(iy) * g.in.nx;
              for (int ox = xlo; ox < xhi; ++ox) dst[ox * s + kx - p] += src[ox];
            }
          }
        }
      }
    }
  }
}

void check_kernel(const ConvKernel& k) {
  if (k.size <= 0 || k.size % 2 == 0) throw ShapeError("kernel size must be odd and positive");
  if (k.weights.size() != static_cast<std::size_t>(k.out_channels) * k.in_channels * k.taps() ||
      k.bias.size() != static_cast<std::size_t>(k.out_channels)) {
    throw ShapeError("kernel parameter arrays do not match their declared shape");
  }
}

// (out * k^3) x in matrix with [(o, tap)][i] = w[o][i][tap].
RowMat transposed_weights(const ConvKernel& k) {
  const std::size_t taps = k.taps();
  RowMat wt(static_cast<Eigen::Index>(k.out_channels * taps), k.in_channels);
  for (int o = 0; o < k.out_channels; ++o) {
    for (int i = 0; i < k.in_channels; ++i) {
      const double* w = k.weights.data() + (static_cast<std::size_t>(o) * k.in_channels + i) * taps;
      for (std::size_t t = 0; t < taps; ++t) wt(static_cast<Eigen::Index>(o * taps + t), i) = w[t];
    }
  }
  return wt;
}

void add_bias(Tensor& y, const std::vector<double>& bias) {
  for (int c = 0; c < y.channels(); ++c) {
    for (double& v : y.channel(c)) v += bias[static_cast<std::size_t>(c)];
  }
}

std::vector<double> channel_sums(const Tensor& t) {
  std::vector<double> out(static_cast<std::size_t>(t.channels()), 0.0);
  for (int c = 0; c < t.channels(); ++c) {
    double s = 0.0;
    for (double v : t.channel(c)) s += v;
    out[static_cast<std::size_t>(c)] = s;
  }
  return out;
}

}  // namespace

ConvKernel::ConvKernel(int out_ch, int in_ch, int k)
    : out_channels(out_ch), in_channels(in_ch), size(k),
      weights(static_cast<std::size_t>(out_ch) * in_ch * k * k * k, 0.0),
      bias(static_cast<std::size_t>(out_ch), 0.0) {
  if (out_ch <= 0 || in_ch <= 0) throw ShapeError("kernel channels must be positive");
  if (k <= 0 || k % 2 == 0) throw ShapeError("kernel size must be odd and positive");
}

Dims conv_output_dims(const Dims& in, int stride) {
  return {(in.nx + stride - 1) / stride, (in.ny + stride - 1) / stride, (in.nz + stride - 1) / stride};
}

Tensor conv3d_forward(const Tensor& x, const ConvKernel& k, int stride) {
  check_kernel(k);
  if (stride != 1 && stride != 2) throw ShapeError("conv3d: stride must be 1 or 2");
  if (x.channels() != k.in_channels) {
    throw ShapeError("conv3d: input has " + std::to_string(x.channels()) + " channels, kernel expects " +
                     std::to_string(k.in_channels));
  }
  const ConvGeometry g{k.in_channels, x.spatial(), conv_output_dims(x.spatial(), stride), k.size, stride};
  Tensor y({k.out_channels, g.out});
  const auto total = static_cast<Eigen::Index>(g.out.count());
  const ConstStridedMap w(k.weights.data(), k.out_channels, static_cast<Eigen::Index>(g.rows()), Eigen::OuterStride<>(static_cast<Eigen::Index>(g.rows())));

  const int h = g.slab_height();
  std::vector<double> cols;
  for (int z0 = 0; z0 < g.out.nz; z0 += h) {
    const int z1 = std::min(g.out.nz, z0 + h);
    const auto width = static_cast<Eigen::Index>(g.slab(z0, z1));
    cols.resize(g.rows() * static_cast<std::size_t>(width));
    im2col(x.data(), g, z0, z1, cols.data());
    const ConstStridedMap c(cols.data(), static_cast<Eigen::Index>(g.rows()), width, Eigen::OuterStride<>(width));
    StridedMap out(y.data() + static_cast<std::size_t>(z0) * g.out.nx * g.out.ny, k.out_channels, width,
                   Eigen::OuterStride<>(total));
    out.noalias() = w * c;
  }
  add_bias(y, k.bias);
  return y;
}

ConvGradients conv3d_backward(const Tensor& x, const ConvKernel& k, const Tensor& grad_out, int stride) {
  check_kernel(k);
  if (stride != 1 && stride != 2) throw ShapeError("conv3d: stride must be 1 or 2");
  const ConvGeometry g{k.in_channels, x.spatial(), conv_output_dims(x.spatial(), stride), k.size, stride};
  if (x.channels() != k.in_channels || grad_out.shape() != TensorShape{k.out_channels, g.out}) {
    throw ShapeError("conv3d_backward: shapes inconsistent with the forward pass");
  }
  ConvGradients grads{Tensor(x.shape()), std::vector<double>(k.weights.size(), 0.0), channel_sums(grad_out)};
  const auto total = static_cast<Eigen::Index>(g.out.count());
  const auto rows = static_cast<Eigen::Index>(g.rows());
  const ConstStridedMap w(k.weights.data(), k.out_channels, rows, Eigen::OuterStride<>(rows));
  StridedMap dw(grads.weights.data(), k.out_channels, rows, Eigen::OuterStride<>(rows));

  const int h = g.slab_height();
  std::vector<double> cols;
  std::vector<double> dcols;
  for (int z0 = 0; z0 < g.out.nz; z0 += h) {
    const int z1 = std::min(g.out.nz, z0 + h);
    const auto width = static_cast<Eigen::Index>(g.slab(z0, z1));
    cols.resize(g.rows() * static_cast<std::size_t>(width));
    dcols.resize(cols.size());
    im2col(x.data(), g, z0, z1, cols.data());
    const ConstStridedMap c(cols.data(), rows, width, Eigen::OuterStride<>(width));
    const ConstStridedMap dy(grad_out.data() + static_cast<std::size_t>(z0) * g.out.nx * g.out.ny, k.out_channels,
                             width, Eigen::OuterStride<>(total));
    dw.noalias() += dy * c.transpose();
    StridedMap dc(dcols.data(), rows, width, Eigen::OuterStride<>(width));
    dc.noalias() = w.transpose() * dy;
    col2im(dcols.data(), g, z0, z1, grads.input.data());
  }
  return grads;
}

Tensor deconv3d_forward(const Tensor& x, const ConvKernel& k) {
  check_kernel(k);
  if (x.channels() != k.in_channels) {
    throw ShapeError("deconv3d: input has " + std::to_string(x.channels()) + " channels, kernel expects " +
                     std::to_string(k.in_channels));
  }
  const Dims& n = x.spatial();
  const Dims up{2 * n.nx, 2 * n.ny, 2 * n.nz};
  // The adjoint conv samples the upsampled lattice (out channels) down to `n`.
  const ConvGeometry g{k.out_channels, up, n, k.size, 2};
  Tensor y({k.out_channels, up});
  const RowMat wt = transposed_weights(k);
  const auto total = static_cast<Eigen::Index>(n.count());
  const auto rows = static_cast<Eigen::Index>(g.rows());

  const int h = g.slab_height();
  std::vector<double> cols;
  for (int z0 = 0; z0 < n.nz; z0 += h) {
    const int z1 = std::min(n.nz, z0 + h);
    const auto width = static_cast<Eigen::Index>(g.slab(z0, z1));
    cols.resize(g.rows() * static_cast<std::size_t>(width));
    const ConstStridedMap xin(x.data() + static_cast<std::size_t>(z0) * n.nx * n.ny, k.in_channels, width,
                              Eigen::OuterStride<>(total));
    StridedMap c(cols.data(), rows, width, Eigen::OuterStride<>(width));
    c.noalias() = wt * xin;
    col2im(cols.data(), g, z0, z1, y.data());
  }
  add_bias(y, k.bias);
  return y;
}

ConvGradients deconv3d_backward(const Tensor& x, const ConvKernel& k, const Tensor& grad_out) {
  check_kernel(k);
  const Dims& n = x.spatial();
  const Dims up{2 * n.nx, 2 * n.ny, 2 * n.nz};
  if (x.channels() != k.in_channels || grad_out.shape() != TensorShape{k.out_channels, up}) {
    throw ShapeError("deconv3d_backward: shapes inconsistent with the forward pass");
  }
  const ConvGeometry g{k.out_channels, up, n, k.size, 2};
  const RowMat wt = transposed_weights(k);
  RowMat dwt = RowMat::Zero(wt.rows(), wt.cols());
  ConvGradients grads{Tensor(x.shape()), std::vector<double>(k.weights.size(), 0.0), channel_sums(grad_out)};
  const auto total = static_cast<Eigen::Index>(n.count());
  const auto rows = static_cast<Eigen::Index>(g.rows());

  const int h = g.slab_height();
  std::vector<double> cols;
  for (int z0 = 0; z0 < n.nz; z0 += h) {
    const int z1 = std::min(n.nz, z0 + h);
    const auto width = static_cast<Eigen::Index>(g.slab(z0, z1));
    cols.resize(g.rows() * static_cast<std::size_t>(width));
    im2col(grad_out.data(), g, z0, z1, cols.data());
    const ConstStridedMap c(cols.data(), rows, width, Eigen::OuterStride<>(width));
    const std::size_t off = static_cast<std::size_t>(z0) * n.nx * n.ny;
    const ConstStridedMap xin(x.data() + off, k.in_channels, width, Eigen::OuterStride<>(total));
    StridedMap dx(grads.input.data() + off, k.in_channels, width, Eigen::OuterStride<>(total));
    dx.noalias() = wt.transpose() * c;
    dwt.noalias() += c * xin.transpose();
  }
  const std::size_t taps = k.taps();
  for (int o = 0; o < k.out_channels; ++o) {
    for (int i = 0; i < k.in_channels; ++i) {
      double* w = grads.weights.data() + (static_cast<std::size_t>(o) * k.in_channels + i) * taps;
      for (std::size_t t = 0; t < taps; ++t) w[t] = dwt(static_cast<Eigen::Index>(o * taps + t), i);
    }
  }
  return grads;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  if (x.shape() != grad_out.shape()) throw ShapeError("relu_backward: shape mismatch");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(x[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

Tensor sigmoid_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) {
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out) {
  if (y.shape() != grad_out.shape()) throw ShapeError("sigmoid_backward: shape mismatch");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y[i] * (1.0 - y[i]);
  return g;
}

DiceLoss dice_loss(const Tensor& pred, const Tensor& target, double eps) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("dice_loss: prediction " + to_string(pred.shape()) + " vs target " + to_string(target.shape()));
  }
  double inter = 0.0, sum_p = 0.0, sum_g = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] * target[i];
    sum_p += pred[i];
    sum_g += target[i];
  }
  const double num = 2.0 * inter + eps;
  const double den = sum_p + sum_g + eps;
  DiceLoss out{1.0 - num / den, Tensor(pred.shape())};
  const double den2 = den * den;
  for (std::size_t i = 0; i < pred.size(); ++i) out.grad[i] = -(2.0 * target[i] * den - num) / den2;
  return out;
}

}  // namespace cranial
