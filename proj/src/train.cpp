#include "cranial/train.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

#include "cranial/rng.hpp"

namespace cranial {

using nlohmann::json;

json to_json(const TrainConfig& c) {
  return {{"steps", c.steps},         {"learning_rate", c.learning_rate}, {"seed", c.seed},
          {"log_interval", c.log_interval}, {"beta1", c.beta1},       {"beta2", c.beta2},
          {"epsilon", c.epsilon},     {"dice_epsilon", c.dice_epsilon}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.steps = j.value("steps", c.steps);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.log_interval = j.value("log_interval", c.log_interval);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.dice_epsilon = j.value("dice_epsilon", c.dice_epsilon);
  return c;
}

namespace {

struct AdamSlot {
  std::vector<double> m;
  std::vector<double> v;
};

void adam_update(std::vector<double>& param, const std::vector<double>& grad, AdamSlot& slot,
                 const TrainConfig& c, double bias1, double bias2) {
  if (slot.m.empty()) {
    slot.m.assign(param.size(), 0.0);
    slot.v.assign(param.size(), 0.0);
  }
  const double lr = c.learning_rate;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    slot.m[i] = c.beta1 * slot.m[i] + (1.0 - c.beta1) * g;
    slot.v[i] = c.beta2 * slot.v[i] + (1.0 - c.beta2) * g * g;
    const double mhat = slot.m[i] / bias1;
    const double vhat = slot.v[i] / bias2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + c.epsilon);
  }
}

}  // namespace

TrainResult train(Model& model, std::span<const TrainingPair> data, const TrainConfig& config,
                  const std::function<void(const LossPoint&)>& on_log) {
  if (data.empty()) throw std::invalid_argument("train: dataset is empty");
  if (config.steps < 1) throw std::invalid_argument("train: steps must be >= 1");
  if (!(config.learning_rate >= 0.0)) throw std::invalid_argument("train: learning rate must be non-negative");
  if (config.log_interval < 1) throw std::invalid_argument("train: log interval must be >= 1");

  Rng rng(config.seed ^ 0x5ca1ab1eULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  std::vector<AdamSlot> weight_slots(model.params.size());
  std::vector<AdamSlot> bias_slots(model.params.size());
  TrainResult result;
  result.step_losses.reserve(static_cast<std::size_t>(config.steps));
  double interval_sum = 0.0;
  int interval_count = 0;

  for (int step = 1; step <= config.steps; ++step) {
    if (cursor == order.size()) {
      rng.shuffle(order);
      cursor = 0;
    }
    const TrainingPair& pair = data[order[cursor++]];
    const ForwardTrace trace = forward_trace(model, pair.input);
    const DiceLoss loss = dice_loss(trace.output(), pair.target, config.dice_epsilon);
    if (!std::isfinite(loss.loss)) {
      throw TrainingDiverged("training diverged at step " + std::to_string(step) + ": loss is not finite");
    }
    const ParamGradients grads = backward(model, trace, loss.grad);

    const double bias1 = 1.0 - std::pow(config.beta1, step);
    const double bias2 = 1.0 - std::pow(config.beta2, step);
    for (std::size_t p = 0; p < model.params.size(); ++p) {
      adam_update(model.params[p].weights, grads.weights[p], weight_slots[p], config, bias1, bias2);
      adam_update(model.params[p].bias, grads.bias[p], bias_slots[p], config, bias1, bias2);
    }
    for (const ConvKernel& k : model.params) {
      for (double w : k.weights) {
        if (!std::isfinite(w)) {
          throw TrainingDiverged("training diverged at step " + std::to_string(step) + ": non-finite weights");
        }
      }
    }

    result.step_losses.push_back(loss.loss);
    interval_sum += loss.loss;
    ++interval_count;
    if (step % config.log_interval == 0 || step == config.steps) {
      LossPoint point{step, loss.loss, interval_sum / interval_count};
      result.curve.push_back(point);
      if (on_log) on_log(point);
      interval_sum = 0.0;
      interval_count = 0;
    }
  }
  return result;
}

std::string loss_curve_csv(const std::vector<LossPoint>& curve) {
  std::string out = "step,loss,interval_mean\n";
  char buf[64];
  for (const LossPoint& p : curve) {
    out += std::to_string(p.step);
    for (double v : {p.loss, p.interval_mean}) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out += ',';
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

}  // namespace cranial
