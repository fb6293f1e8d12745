// Run-to-convergence checks on single cases at small scale.

#include "doctest.h"

#include "cranial/metrics.hpp"
#include "cranial/pipeline.hpp"
#include "cranial/resample.hpp"

using namespace cranial;

namespace {

DatasetConfig small_data() {
  DatasetConfig c;
  c.dims = {48, 48, 48};
  c.spacing = {1.5, 1.5, 1.5};
  c.radii = {19.0, 21.0, 17.0};
  c.thickness = 4.0;
  c.sphere_radius = {5.0, 7.0};
  c.ood_small = {2.5, 3.5};
  c.ood_large = {8.0, 9.0};
  return c;
}

// Coarse lattice at half resolution: coarser lattices cap the achievable
// coarse DSC below 0.8 even for a perfect network.
RunConfig overfit_run() {
  RunConfig r;
  r.pipeline.coarse_dims = {24, 24, 24};
  r.pipeline.fine_canvas_dims = {32, 32, 16};
  r.pipeline.margin = 3;
  r.pipeline.z_extent = 16;
  r.coarse_network = make_ladder("coarse", r.pipeline.coarse_dims, 3, {8, 16});
  r.fine_network = make_ladder("fine", r.pipeline.fine_canvas_dims, 3, {8, 16});
  r.coarse_train.steps = 400;
  r.coarse_train.learning_rate = 3e-3;
  r.coarse_train.seed = 5;
  r.fine_train.steps = 400;
  r.fine_train.learning_rate = 3e-3;
  r.fine_train.seed = 6;
  return r;
}

}  // namespace

TEST_CASE("overfit a single 16^3 case") {
  const CaseTriple c = make_case(1, Distribution::InDistribution, small_data(), 8);
  const Dims d{16, 16, 16};
  const std::vector<TrainingPair> pair{{to_tensor(downsample(c.defective, d)), to_tensor(downsample(c.implant, d))}};
  Model m = init_model(make_ladder("n1", d, 3, {8, 16}), 4);
  TrainConfig tc;
  tc.steps = 500;
  tc.learning_rate = 3e-3;
  const TrainResult r = train(m, pair, tc);
  CHECK(r.step_losses.back() <= 0.05);
}

TEST_CASE("overfit coarse and fine stages on one case") {
  const std::vector<CaseTriple> one{make_case(1, Distribution::InDistribution, small_data(), 8)};
  const CaseTriple& c = one.front();
  const RunConfig r = overfit_run();

  const StageResult coarse = train_stage(Stage::Coarse, one, r, nullptr);
  const ProbabilityMap map = predict_coarse(coarse.model, c.defective, r.pipeline);
  const Mask estimate = coarse_implant_estimate(map, c.defective, r.pipeline);
  CHECK(dsc(estimate, c.implant) >= 0.8);

  const BBox box = localize(estimate, r.pipeline);
  std::size_t inside = 0;
  const Dims d = c.implant.dims();
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) inside += c.implant(x, y, z) && box.contains(x, y, z);
  CHECK(static_cast<double>(inside) >= 0.99 * static_cast<double>(count_foreground(c.implant)));

  const StageResult fine = train_stage(Stage::Fine, one, r, &coarse.model);
  REQUIRE(fine.used_cases.size() == 1);
  const PipelineResult out = run_pipeline(coarse.model, fine.model, c.defective, r.pipeline);
  CHECK(dsc(out.implant, c.implant) >= 0.95);
}
