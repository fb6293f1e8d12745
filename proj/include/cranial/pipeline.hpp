#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "cranial/bbox.hpp"
#include "cranial/dataset.hpp"
#include "cranial/network.hpp"
#include "cranial/train.hpp"

namespace cranial {

enum class PipelineMode {
  Direct,      // networks predict the implant
  Completion,  // networks predict the complete skull; implant by set difference
};

std::string to_string(PipelineMode m);
PipelineMode pipeline_mode_from_string(const std::string& s);

struct PipelineConfig {
  Dims coarse_dims{32, 32, 16};
  Dims fine_canvas_dims{64, 64, 32};
  int margin = 5;
  int z_extent = 32;
  double threshold = 0.5;
  PipelineMode mode = PipelineMode::Direct;
  ZAnchor z_anchor = ZAnchor::Centroid;
  bool fallback_whole_volume = false;
  // Completion mode only: coarse skull voxels closer than this (in voxels) to
  // the remaining bone are ignored when locating the defect.
  double completion_guard = 2.0;
  // Keep only the largest 26-connected piece of the final implant (one
  // defect per skull); drops stray voxels at the crop border.
  bool keep_largest_component = false;
};

/// Throws std::invalid_argument on non-positive dims, a negative margin or a
/// threshold outside (0, 1].
void validate(const PipelineConfig& c);

nlohmann::json to_json(const PipelineConfig& c);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

/// Everything a training or inference run needs, as stored in one JSON file:
/// {"pipeline": {...}, "coarse_network": {...}, "fine_network": {...},
///  "train": {"coarse": {...}, "fine": {...}}}.
struct RunConfig {
  PipelineConfig pipeline;
  NetworkConfig coarse_network;
  NetworkConfig fine_network;
  TrainConfig coarse_train;
  TrainConfig fine_train;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

class LocalizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coarse estimate at full resolution: downsample, N1, quadratic-spline upsample.
ProbabilityMap predict_coarse(const Model& coarse, const Mask& defective, const PipelineConfig& cfg);

/// Box around the binarized coarse implant, margin-expanded and clamped to the canvas.
BBox localize(const Mask& coarse_implant, const PipelineConfig& cfg);
BBox localize(const ProbabilityMap& coarse, const PipelineConfig& cfg);

/// Implant estimate used for localization. Direct mode: the binarized coarse
/// map minus the defective skull. Completion mode: coarse skull voxels away
/// from the remaining bone, largest component.
Mask coarse_implant_estimate(const ProbabilityMap& coarse, const Mask& defective, const PipelineConfig& cfg);

/// Fine-network input built from the defective skull alone.
struct FineInput {
  BBox box;
  Placement placement;
  Tensor input;
};

FineInput make_fine_input(const Model& coarse, const Mask& defective, const PipelineConfig& cfg);
FineInput make_fine_input(const Mask& defective, const BBox& box, const PipelineConfig& cfg);

/// Crop, pad, N2, binarize, restore. Output has the defective skull's dims and
/// is zero outside `box`.
Mask predict_fine(const Model& fine, const Mask& defective, const BBox& box, const PipelineConfig& cfg);

struct PipelineResult {
  Mask implant;
  Mask coarse_implant;             // binarized coarse output after the same mode-specific post-processing
  BBox box;
  std::optional<Mask> completed;   // completion mode only
  bool used_fallback = false;
};

/// Full coarse-to-fine workflow. Throws LocalizationError when the coarse
/// estimate is empty and the whole-volume fallback is off.
PipelineResult run_pipeline(const Model& coarse, const Model& fine, const Mask& defective, const PipelineConfig& cfg);

enum class Stage { Coarse, Fine, Completion };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

struct StagePairs {
  std::vector<TrainingPair> pairs;
  std::vector<std::string> used_cases;
  std::vector<std::string> skipped_cases;  // fine stage: localization failed
};

/// Training pairs for `stage`. Fine-stage inputs are built by
/// make_fine_input from the defective skull and the coarse model only.
StagePairs build_stage_pairs(Stage stage, const std::vector<CaseTriple>& cases, const PipelineConfig& cfg,
                             const Model* coarse_model = nullptr);

struct StageResult {
  Model model;
  TrainResult training;
  std::vector<std::string> used_cases;
  std::vector<std::string> skipped_cases;  // fine stage: localization failed
};

/// Coarse and completion stages train on the coarse lattice (completion with
/// complete-skull targets). The fine stage needs the trained coarse model:
/// training crops come from its predicted boxes.
StageResult train_stage(Stage stage, const std::vector<CaseTriple>& cases, const RunConfig& cfg,
                        const Model* coarse_model = nullptr,
                        const std::function<void(const LossPoint&)>& on_log = {});

}  // namespace cranial
