#include "cranial/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "cranial/components.hpp"
#include "cranial/metrics.hpp"
#include "cranial/resample.hpp"

namespace cranial {

using nlohmann::json;

std::string to_string(PipelineMode m) { return m == PipelineMode::Direct ? "direct" : "completion"; }

PipelineMode pipeline_mode_from_string(const std::string& s) {
  if (s == "direct" || s == "direct_implant") return PipelineMode::Direct;
  if (s == "completion") return PipelineMode::Completion;
  throw std::invalid_argument("unknown pipeline mode '" + s + "' (expected direct or completion)");
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Coarse: return "coarse";
    case Stage::Fine: return "fine";
    case Stage::Completion: return "completion";
  }
  return "?";
}

Stage stage_from_string(const std::string& s) {
  if (s == "coarse") return Stage::Coarse;
  if (s == "fine") return Stage::Fine;
  if (s == "completion") return Stage::Completion;
  throw std::invalid_argument("unknown stage '" + s + "' (expected coarse, fine or completion)");
}

void validate(const PipelineConfig& c) {
  if (!c.coarse_dims.positive()) throw std::invalid_argument("coarse_dims must be positive");
  if (!c.fine_canvas_dims.positive()) throw std::invalid_argument("fine_canvas_dims must be positive");
  if (c.margin < 0) throw std::invalid_argument("margin must be non-negative");
  if (c.z_extent < 1) throw std::invalid_argument("z_extent must be positive");
  if (c.z_extent > c.fine_canvas_dims.nz) throw std::invalid_argument("z_extent exceeds the fine canvas depth");
  if (!(c.threshold > 0.0 && c.threshold <= 1.0)) throw std::invalid_argument("threshold must lie in (0, 1]");
  if (!(c.completion_guard >= 0.0)) throw std::invalid_argument("completion_guard must be non-negative");
}

namespace {

json dims_json(const Dims& d) { return json::array({d.nx, d.ny, d.nz}); }

Dims dims_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("dims must be an array of three integers");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

}  // namespace

json to_json(const PipelineConfig& c) {
  return {{"coarse_dims", dims_json(c.coarse_dims)},
          {"fine_canvas_dims", dims_json(c.fine_canvas_dims)},
          {"margin", c.margin},
          {"z_extent", c.z_extent},
          {"threshold", c.threshold},
          {"mode", to_string(c.mode)},
          {"z_anchor", c.z_anchor == ZAnchor::Centroid ? "centroid" : "extent_midpoint"},
          {"fallback_whole_volume", c.fallback_whole_volume},
          {"completion_guard", c.completion_guard},
          {"keep_largest_component", c.keep_largest_component}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  if (j.contains("coarse_dims")) c.coarse_dims = dims_from(j["coarse_dims"]);
  if (j.contains("fine_canvas_dims")) c.fine_canvas_dims = dims_from(j["fine_canvas_dims"]);
  c.margin = j.value("margin", c.margin);
  c.z_extent = j.value("z_extent", c.z_extent);
  c.threshold = j.value("threshold", c.threshold);
  if (j.contains("mode")) c.mode = pipeline_mode_from_string(j["mode"].get<std::string>());
  if (j.contains("z_anchor")) {
    const auto a = j["z_anchor"].get<std::string>();
    if (a == "centroid") {
      c.z_anchor = ZAnchor::Centroid;
    } else if (a == "extent_midpoint") {
      c.z_anchor = ZAnchor::ExtentMidpoint;
    } else {
      throw std::invalid_argument("unknown z_anchor '" + a + "'");
    }
  }
  c.fallback_whole_volume = j.value("fallback_whole_volume", c.fallback_whole_volume);
  c.completion_guard = j.value("completion_guard", c.completion_guard);
  c.keep_largest_component = j.value("keep_largest_component", c.keep_largest_component);
  validate(c);
  return c;
}

json to_json(const RunConfig& c) {
  return {{"pipeline", to_json(c.pipeline)},
          {"coarse_network", to_json(c.coarse_network)},
          {"fine_network", to_json(c.fine_network)},
          {"train", {{"coarse", to_json(c.coarse_train)}, {"fine", to_json(c.fine_train)}}}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  c.pipeline = pipeline_config_from_json(j.value("pipeline", json::object()));
  c.coarse_network = network_config_from_json(j.at("coarse_network"));
  c.fine_network = network_config_from_json(j.at("fine_network"));
  if (c.coarse_network.input_dims != c.pipeline.coarse_dims) {
    throw std::invalid_argument("coarse_network input dims " + to_string(c.coarse_network.input_dims) +
                                " differ from pipeline coarse_dims " + to_string(c.pipeline.coarse_dims));
  }
  if (c.fine_network.input_dims != c.pipeline.fine_canvas_dims) {
    throw std::invalid_argument("fine_network input dims " + to_string(c.fine_network.input_dims) +
                                " differ from pipeline fine_canvas_dims " + to_string(c.pipeline.fine_canvas_dims));
  }
  const json t = j.value("train", json::object());
  c.coarse_train = train_config_from_json(t.value("coarse", json::object()));
  c.fine_train = train_config_from_json(t.value("fine", json::object()));
  return c;
}

ProbabilityMap predict_coarse(const Model& coarse, const Mask& defective, const PipelineConfig& cfg) {
  if (coarse.config.input_dims != cfg.coarse_dims) {
    throw ShapeError("coarse model expects " + to_string(coarse.config.input_dims) + " but the pipeline uses " +
                     to_string(cfg.coarse_dims));
  }
  const Mask small = downsample(defective, cfg.coarse_dims);
  const Tensor out = forward(coarse, to_tensor(small));
  const ProbabilityMap samples = to_probability_map(out, small.spacing());
  ProbabilityMap up = upsample_spline2(samples, defective.dims());
  up.set_spacing(defective.spacing());
  // The interpolating spline overshoots near sharp edges; keep it within the sampled range.
  double lo = 1.0, hi = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    lo = std::min(lo, samples[i]);
    hi = std::max(hi, samples[i]);
  }
  for (std::size_t i = 0; i < up.size(); ++i) up[i] = std::clamp(up[i], lo, hi);
  return up;
}

BBox localize(const Mask& coarse_implant, const PipelineConfig& cfg) {
  if (count_foreground(coarse_implant) == 0) throw LocalizationError("localization failed: coarse prediction is empty");
  const BBox tight = bbox_xy(coarse_implant, cfg.z_extent, cfg.z_anchor);
  const BBox wide = expand_margin(tight, cfg.margin, coarse_implant.dims());
  return limit_extent(wide, cfg.fine_canvas_dims);
}

BBox localize(const ProbabilityMap& coarse, const PipelineConfig& cfg) {
  return localize(binarize(coarse, cfg.threshold), cfg);
}

Mask coarse_implant_estimate(const ProbabilityMap& coarse, const Mask& defective, const PipelineConfig& cfg) {
  const Mask predicted = binarize(coarse, cfg.threshold);
  if (cfg.mode == PipelineMode::Direct) return mask_and_not(predicted, defective);

  Mask away = mask_and_not(predicted, defective);
  if (cfg.completion_guard > 0.0 && count_foreground(defective) > 0) {
    const auto dist = squared_distance_map(defective, Spacing{1.0, 1.0, 1.0});
    const double guard2 = cfg.completion_guard * cfg.completion_guard;
    for (std::size_t i = 0; i < away.size(); ++i) {
      if (away[i] && dist[i] <= guard2) away[i] = 0;
    }
  }
  if (count_foreground(away) == 0) return away;
  return largest_component(away);
}

FineInput make_fine_input(const Mask& defective, const BBox& box, const PipelineConfig& cfg) {
  auto [canvas, placement] =
      zero_pad_center(crop(defective, box), cfg.fine_canvas_dims, box, defective.dims());
  return {box, placement, to_tensor(canvas)};
}

FineInput make_fine_input(const Model& coarse, const Mask& defective, const PipelineConfig& cfg) {
  const ProbabilityMap map = predict_coarse(coarse, defective, cfg);
  return make_fine_input(defective, localize(coarse_implant_estimate(map, defective, cfg), cfg), cfg);
}

Mask predict_fine(const Model& fine, const Mask& defective, const BBox& box, const PipelineConfig& cfg) {
  if (fine.config.input_dims != cfg.fine_canvas_dims) {
    throw ShapeError("fine model expects " + to_string(fine.config.input_dims) + " but the pipeline canvas is " +
                     to_string(cfg.fine_canvas_dims));
  }
  if (!box.valid_in(defective.dims())) throw ShapeError("box " + to_string(box) + " lies outside the volume");
  const Dims size = box.size();
  if (!size.fits_in(cfg.fine_canvas_dims)) {
    throw ShapeError("box " + to_string(box) + " does not fit the fine canvas " + to_string(cfg.fine_canvas_dims));
  }
  const FineInput in = make_fine_input(defective, box, cfg);
  const Tensor out = forward(fine, in.input);
  const Mask canvas = binarize(to_probability_map(out, defective.spacing()), cfg.threshold);
  Mask restored = restore(canvas, in.placement);
  restored.set_spacing(defective.spacing());
  return restored;
}

PipelineResult run_pipeline(const Model& coarse, const Model& fine, const Mask& defective,
                            const PipelineConfig& cfg) {
  validate(cfg);
  PipelineResult r;
  const ProbabilityMap map = predict_coarse(coarse, defective, cfg);
  r.coarse_implant = coarse_implant_estimate(map, defective, cfg);
  if (count_foreground(r.coarse_implant) == 0 && cfg.fallback_whole_volume) {
    r.box = limit_extent(BBox::whole(defective.dims()), cfg.fine_canvas_dims);
    if (r.box.size().nz > cfg.fine_canvas_dims.nz) {
      const int start = (defective.dims().nz - cfg.fine_canvas_dims.nz) / 2;
      r.box.lo.z = start;
      r.box.hi.z = start + cfg.fine_canvas_dims.nz;
    }
    r.used_fallback = true;
  } else {
    r.box = localize(r.coarse_implant, cfg);
  }

  const Mask fine_out = predict_fine(fine, defective, r.box, cfg);
  r.implant = cfg.mode == PipelineMode::Direct ? mask_and_not(fine_out, defective)
                                                : mask_and_not(mask_or(defective, fine_out), defective);
  if (cfg.keep_largest_component && count_foreground(r.implant) > 0) r.implant = largest_component(r.implant);
  if (cfg.mode == PipelineMode::Completion) r.completed = mask_or(defective, r.implant);
  return r;
}

StagePairs build_stage_pairs(Stage stage, const std::vector<CaseTriple>& cases, const PipelineConfig& cfg,
                             const Model* coarse_model) {
  validate(cfg);
  if (cases.empty()) throw std::invalid_argument("no training cases");
  StagePairs out;
  out.pairs.reserve(cases.size());
  if (stage == Stage::Fine) {
    if (coarse_model == nullptr) throw std::invalid_argument("fine stage requires a trained coarse model");
    const bool complete = cfg.mode == PipelineMode::Completion;
    for (const CaseTriple& c : cases) {
      FineInput in;
      try {
        in = make_fine_input(*coarse_model, c.defective, cfg);
      } catch (const LocalizationError&) {
        out.skipped_cases.push_back(c.id);
        continue;
      }
      auto target = zero_pad_center(crop(complete ? c.complete : c.implant, in.box), cfg.fine_canvas_dims);
      out.pairs.push_back({std::move(in.input), to_tensor(target.first)});
      out.used_cases.push_back(c.id);
    }
    if (out.pairs.empty()) throw LocalizationError("fine stage: localization failed for every training case");
    return out;
  }
  const bool complete = stage == Stage::Completion || cfg.mode == PipelineMode::Completion;
  for (const CaseTriple& c : cases) {
    out.pairs.push_back({to_tensor(downsample(c.defective, cfg.coarse_dims)),
                         to_tensor(downsample(complete ? c.complete : c.implant, cfg.coarse_dims))});
    out.used_cases.push_back(c.id);
  }
  return out;
}

StageResult train_stage(Stage stage, const std::vector<CaseTriple>& cases, const RunConfig& cfg,
                        const Model* coarse_model, const std::function<void(const LossPoint&)>& on_log) {
  StagePairs data = build_stage_pairs(stage, cases, cfg.pipeline, coarse_model);
  const bool fine = stage == Stage::Fine;
  StageResult result;
  result.used_cases = std::move(data.used_cases);
  result.skipped_cases = std::move(data.skipped_cases);
  result.model = init_model(fine ? cfg.fine_network : cfg.coarse_network, fine ? cfg.fine_train.seed : cfg.coarse_train.seed);
  result.training = train(result.model, data.pairs, fine ? cfg.fine_train : cfg.coarse_train, on_log);
  return result;
}

}  // namespace cranial
