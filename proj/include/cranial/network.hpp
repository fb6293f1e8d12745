#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "cranial/layers.hpp"

namespace cranial {

enum class LayerKind {
  Conv,      // stride-1 same-padded convolution
  ConvDown,  // stride-2 convolution, halves each axis
  Deconv,    // stride-2 transposed convolution, doubles each axis
  Relu,
};

std::string to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int kernel = 3;
  int in_channels = 1;
  int out_channels = 1;

  [[nodiscard]] bool has_parameters() const noexcept { return kind != LayerKind::Relu; }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Ordered layer chain mapping a 1-channel volume of `input_dims` to a
/// 1-channel volume of the same dims; a sigmoid is always applied last.
struct NetworkConfig {
  std::string name;
  Dims input_dims{};
  std::vector<LayerSpec> layers;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Throws ShapeError unless channels chain from 1 to 1, kernels are odd,
/// down/up counts match and every downsampled axis is even.
void validate(const NetworkConfig& config);

/// Sum over parameterised layers of k^3 * in * out + out.
std::size_t param_count(const NetworkConfig& config);

/// Encoder-decoder ladder: for each entry of `channels` a stride-2
/// convolution (followed by `convs_per_level` stride-1 convolutions), then
/// the mirror-image chain of transposed convolutions back to one channel.
NetworkConfig make_ladder(std::string name, Dims input_dims, int kernel, const std::vector<int>& channels,
                          int convs_per_level = 0);

nlohmann::json to_json(const NetworkConfig& c);
NetworkConfig network_config_from_json(const nlohmann::json& j);

struct Model {
  NetworkConfig config;
  std::vector<ConvKernel> params;  // one per parameterised layer, in order
  std::uint64_t seed = 0;

  friend bool operator==(const Model&, const Model&) = default;
};

/// Uniform(-a, a) weights with a = sqrt(6 / fan_in), zero biases. Deconv
/// fan-in counts the k^3 / 8 taps that reach each output voxel.
Model init_model(const NetworkConfig& config, std::uint64_t seed);

/// Model whose weights and biases are all zero (uniform 0.5 output).
Model zero_model(const NetworkConfig& config);

/// Activations of every layer: values[0] is the input, values[i + 1] the
/// output of layer i, and back() the sigmoid probabilities.
struct ForwardTrace {
  std::vector<Tensor> values;
  [[nodiscard]] const Tensor& output() const { return values.back(); }
};

ForwardTrace forward_trace(const Model& model, const Tensor& input);
Tensor forward(const Model& model, const Tensor& input);

struct ParamGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
};

/// Reverse pass given d loss / d probabilities.
ParamGradients backward(const Model& model, const ForwardTrace& trace, const Tensor& grad_output);

}  // namespace cranial
