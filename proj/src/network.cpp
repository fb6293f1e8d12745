#include "cranial/network.hpp"

#include <cmath>

#include "cranial/rng.hpp"

namespace cranial {

using nlohmann::json;

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::ConvDown: return "conv_down";
    case LayerKind::Deconv: return "deconv";
    case LayerKind::Relu: return "relu";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "conv") return LayerKind::Conv;
  if (s == "conv_down") return LayerKind::ConvDown;
  if (s == "deconv") return LayerKind::Deconv;
  if (s == "relu") return LayerKind::Relu;
  throw ShapeError("unknown layer kind '" + s + "'");
}

void validate(const NetworkConfig& config) {
  if (!config.input_dims.positive()) throw ShapeError(config.name + ": input dims must be positive");
  int channels = 1;
  Dims dims = config.input_dims;
  int depth = 0;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& l = config.layers[i];
    const std::string where = config.name + " layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
    if (!l.has_parameters()) {
      if (l.in_channels != channels || l.out_channels != channels) {
        throw ShapeError(where + ": activation must keep " + std::to_string(channels) + " channels");
      }
      continue;
    }
    if (l.kernel <= 0 || l.kernel % 2 == 0) throw ShapeError(where + ": kernel must be odd");
    if (l.in_channels != channels) {
      throw ShapeError(where + ": expects " + std::to_string(l.in_channels) + " channels, previous layer gives " +
                       std::to_string(channels));
    }
    if (l.out_channels <= 0) throw ShapeError(where + ": output channels must be positive");
    channels = l.out_channels;
    if (l.kind == LayerKind::ConvDown) {
      if (dims.nx % 2 || dims.ny % 2 || dims.nz % 2) {
        throw ShapeError(where + ": cannot halve odd dims " + to_string(dims));
      }
      dims = {dims.nx / 2, dims.ny / 2, dims.nz / 2};
      ++depth;
    } else if (l.kind == LayerKind::Deconv) {
      if (--depth < 0) throw ShapeError(where + ": more upsampling than downsampling");
      dims = {dims.nx * 2, dims.ny * 2, dims.nz * 2};
    }
  }
  if (depth != 0) throw ShapeError(config.name + ": stride-2 down and up counts differ");
  if (channels != 1) throw ShapeError(config.name + ": network must end with one channel");
}

std::size_t param_count(const NetworkConfig& config) {
  std::size_t total = 0;
  for (const LayerSpec& l : config.layers) {
    if (!l.has_parameters()) continue;
    const auto k = static_cast<std::size_t>(l.kernel);
    total += k * k * k * static_cast<std::size_t>(l.in_channels) * static_cast<std::size_t>(l.out_channels) +
             static_cast<std::size_t>(l.out_channels);
  }
  return total;
}

NetworkConfig make_ladder(std::string name, Dims input_dims, int kernel, const std::vector<int>& channels,
                          int convs_per_level) {
  NetworkConfig cfg{std::move(name), input_dims, {}};
  auto relu = [&](int c) { cfg.layers.push_back({LayerKind::Relu, 1, c, c}); };
  int prev = 1;
  for (int c : channels) {
    cfg.layers.push_back({LayerKind::ConvDown, kernel, prev, c});
    relu(c);
    for (int r = 0; r < convs_per_level; ++r) {
      cfg.layers.push_back({LayerKind::Conv, kernel, c, c});
      relu(c);
    }
    prev = c;
  }
  for (std::size_t i = channels.size(); i-- > 0;) {
    const int next = i == 0 ? 1 : channels[i - 1];
    cfg.layers.push_back({LayerKind::Deconv, kernel, prev, next});
    if (i != 0) relu(next);
    prev = next;
  }
  return cfg;
}

json to_json(const NetworkConfig& c) {
  json layers = json::array();
  for (const LayerSpec& l : c.layers) {
    if (l.has_parameters()) {
      layers.push_back({{"kind", to_string(l.kind)}, {"kernel", l.kernel}, {"in", l.in_channels}, {"out", l.out_channels}});
    } else {
      layers.push_back({{"kind", to_string(l.kind)}});
    }
  }
  return {{"name", c.name}, {"input_dims", {c.input_dims.nx, c.input_dims.ny, c.input_dims.nz}}, {"layers", layers}};
}

NetworkConfig network_config_from_json(const json& j) {
  NetworkConfig c;
  c.name = j.value("name", std::string("network"));
  const auto& d = j.at("input_dims");
  c.input_dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
  if (j.contains("ladder")) {
    // Shorthand: {"kernel": k, "channels": [...], "convs_per_level": n}
    const auto& l = j["ladder"];
    return make_ladder(c.name, c.input_dims, l.at("kernel").get<int>(), l.at("channels").get<std::vector<int>>(),
                       l.value("convs_per_level", 0));
  }
  int channels = 1;
  for (const auto& lj : j.at("layers")) {
    LayerSpec l;
    l.kind = layer_kind_from_string(lj.at("kind").get<std::string>());
    if (l.has_parameters()) {
      l.kernel = lj.at("kernel").get<int>();
      l.in_channels = lj.at("in").get<int>();
      l.out_channels = lj.at("out").get<int>();
      channels = l.out_channels;
    } else {
      l.kernel = 1;
      l.in_channels = l.out_channels = channels;
    }
    c.layers.push_back(l);
  }
  return c;
}

Model init_model(const NetworkConfig& config, std::uint64_t seed) {
  validate(config);
  Model m{config, {}, seed};
  Rng rng(seed);
  for (const LayerSpec& l : config.layers) {
    if (!l.has_parameters()) continue;
    ConvKernel k(l.out_channels, l.in_channels, l.kernel);
    double fan_in = static_cast<double>(l.in_channels) * static_cast<double>(k.taps());
    if (l.kind == LayerKind::Deconv) fan_in /= 8.0;
    const double a = std::sqrt(6.0 / fan_in);
    for (double& w : k.weights) w = rng.uniform(-a, a);
    m.params.push_back(std::move(k));
  }
  return m;
}

Model zero_model(const NetworkConfig& config) {
  validate(config);
  Model m{config, {}, 0};
  for (const LayerSpec& l : config.layers) {
    if (l.has_parameters()) m.params.emplace_back(l.out_channels, l.in_channels, l.kernel);
  }
  return m;
}

ForwardTrace forward_trace(const Model& model, const Tensor& input) {
  if (input.shape() != TensorShape{1, model.config.input_dims}) {
    throw ShapeError(model.config.name + ": input " + to_string(input.shape()) + " does not match configured " +
                     to_string(TensorShape{1, model.config.input_dims}));
  }
  ForwardTrace trace;
  trace.values.reserve(model.config.layers.size() + 2);
  trace.values.push_back(input);
  std::size_t p = 0;
  for (const LayerSpec& l : model.config.layers) {
    const Tensor& x = trace.values.back();
    switch (l.kind) {
      case LayerKind::Conv: trace.values.push_back(conv3d_forward(x, model.params[p++], 1)); break;
      case LayerKind::ConvDown: trace.values.push_back(conv3d_forward(x, model.params[p++], 2)); break;
      case LayerKind::Deconv: trace.values.push_back(deconv3d_forward(x, model.params[p++])); break;
      case LayerKind::Relu: trace.values.push_back(relu_forward(x)); break;
    }
  }
  trace.values.push_back(sigmoid_forward(trace.values.back()));
  return trace;
}

Tensor forward(const Model& model, const Tensor& input) {
  return std::move(forward_trace(model, input).values.back());
}

ParamGradients backward(const Model& model, const ForwardTrace& trace, const Tensor& grad_output) {
  const auto& layers = model.config.layers;
  if (trace.values.size() != layers.size() + 2) throw ShapeError("backward: trace does not match the model");
  ParamGradients grads;
  grads.weights.resize(model.params.size());
  grads.bias.resize(model.params.size());

  Tensor g = sigmoid_backward(trace.values.back(), grad_output);
  std::size_t p = model.params.size();
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Tensor& x = trace.values[i];
    const LayerSpec& l = layers[i];
    if (l.kind == LayerKind::Relu) {
      g = relu_backward(x, g);
      continue;
    }
    --p;
    ConvGradients cg = l.kind == LayerKind::Deconv ? deconv3d_backward(x, model.params[p], g)
                                                   : conv3d_backward(x, model.params[p], g, l.kind == LayerKind::ConvDown ? 2 : 1);
    grads.weights[p] = std::move(cg.weights);
    grads.bias[p] = std::move(cg.bias);
    if (i > 0) g = std::move(cg.input);
  }
  return grads;
}

}  // namespace cranial
