#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "cranial/network.hpp"

namespace cranial {

/// Batch size is always one.
struct TrainConfig {
  int steps = 1000;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  int log_interval = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double dice_epsilon = 1e-6;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainingPair {
  Tensor input;
  Tensor target;
};

struct LossPoint {
  int step = 0;            // 1-based step index
  double loss = 0.0;       // loss at this step
  double interval_mean = 0.0;  // mean loss over the steps since the previous point
};

struct TrainResult {
  std::vector<LossPoint> curve;
  std::vector<double> step_losses;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adam on per-step dice loss over a seeded shuffle of `data`, one pair per
/// step. Throws TrainingDiverged if the loss or parameters become non-finite.
TrainResult train(Model& model, std::span<const TrainingPair> data, const TrainConfig& config,
                  const std::function<void(const LossPoint&)>& on_log = {});

/// CSV with header "step,loss,interval_mean".
std::string loss_curve_csv(const std::vector<LossPoint>& curve);

}  // namespace cranial
