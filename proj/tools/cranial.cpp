// Command-line front end: synthetic data, training, prediction, evaluation.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cranial/checkpoint.hpp"
#include "cranial/dataset.hpp"
#include "cranial/nrrd.hpp"
#include "cranial/pipeline.hpp"
#include "cranial/report.hpp"
#include "cranial/skull.hpp"

#ifndef CRANIAL_VERSION
#define CRANIAL_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cranial;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kPipeline = 3 };

/// Bad input files or configs; maps to the data-error exit code.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LoadedConfig {
  std::string path;
  std::string hash;
  json doc = json::object();
};

LoadedConfig load_config(const std::string& path) {
  LoadedConfig c;
  if (path.empty()) return c;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  try {
    c.doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("config " + path + ": " + e.what());
  }
  c.path = path;
  c.hash = fnv1a_hex(c.doc.dump());
  return c;
}

RunConfig run_config(const LoadedConfig& c) {
  if (c.path.empty()) throw UsageError("--config is required");
  try {
    return run_config_from_json(c.doc);
  } catch (const std::exception& e) {
    throw DataError("config " + c.path + ": " + e.what());
  }
}

/// One manifest per output directory; each command that writes into the
/// directory records itself under the name of its primary output.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv)
      : start_(std::chrono::steady_clock::now()) {
    entry_["command"] = std::move(command);
    entry_["argv"] = std::move(argv);
    entry_["tool_version"] = CRANIAL_VERSION;
    entry_["seed"] = nullptr;
    entry_["config_path"] = nullptr;
    entry_["config_hash"] = nullptr;
    entry_["inputs"] = json::array();
    entry_["outputs"] = json::array();
  }

  void config(const LoadedConfig& c) {
    if (c.path.empty()) return;
    entry_["config_path"] = c.path;
    entry_["config_hash"] = c.hash;
  }
  void seed(std::uint64_t s) { entry_["seed"] = s; }
  void input(const fs::path& p) { entry_["inputs"].push_back(p.string()); }
  void output(const fs::path& p) { entry_["outputs"].push_back(p.string()); }

  void write(const fs::path& dir, const std::string& key) {
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    entry_["duration_s"] = seconds;
    const fs::path path = dir / "manifest.json";
    json doc = {{"runs", json::object()}};
    if (fs::exists(path)) {
      std::ifstream in(path);
      doc = json::parse(in, nullptr, false);
      if (doc.is_discarded() || !doc.contains("runs")) doc = {{"runs", json::object()}};
    }
    doc["runs"][key] = entry_;
    std::ofstream out(path, std::ios::binary);
    out << doc.dump(2) << '\n';
    if (!out) throw DataError("cannot write " + path.string());
  }

 private:
  std::chrono::steady_clock::time_point start_;
  json entry_;
};

fs::path parent_or_cwd(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

Model load_checkpoint(const fs::path& path) {
  try {
    return load_model(path);
  } catch (const std::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Mask load_mask_file(const fs::path& path) {
  try {
    return load_mask(path);
  } catch (const std::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<CaseTriple> load_cases(const fs::path& dir) {
  try {
    return load_dataset(dir);
  } catch (const std::exception& e) {
    throw DataError(dir.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

struct SynthDataArgs {
  int n = 0;
  std::string split = "train";
  std::string distribution = "in_distribution";
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
};

int synth_data(const SynthDataArgs& a, Manifest& m) {
  if (a.n <= 0) throw UsageError("--n must be positive");
  const LoadedConfig cfg = load_config(a.config);
  DatasetConfig dc;
  Distribution dist;
  try {
    dc = dataset_config_from_json(cfg.doc.value("dataset", json::object()));
    dist = distribution_from_string(a.distribution);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  std::vector<CaseTriple> cases;
  try {
    cases = make_dataset(static_cast<std::size_t>(a.n), dist, dc, a.seed, a.split);
  } catch (const std::exception& e) {
    throw DataError(std::string("invalid dataset config: ") + e.what());
  }
  const fs::path root(a.out);
  ensure_dir(root);
  save_dataset(root, cases, a.split, dist, dc, a.seed);
  m.config(cfg);
  m.seed(a.seed);
  m.output(root);
  m.write(root, "dataset");
  std::cout << "wrote " << cases.size() << " cases to " << root.string() << '\n';
  return kOk;
}

struct SynthCtArgs {
  std::uint64_t seed = 0;
  std::string out;
  std::string skull_out;
  std::string config;
  bool table = true;
};

int synth_ct_cmd(const SynthCtArgs& a, Manifest& m) {
  const LoadedConfig cfg = load_config(a.config);
  const DatasetConfig dc = dataset_config_from_json(cfg.doc.value("dataset", json::object()));
  PhantomParams p;
  p.dims = dc.dims;
  p.spacing = dc.spacing;
  p.radii = dc.radii;
  p.thickness = dc.thickness;
  p.jitter = dc.jitter;
  p.seed = a.seed;
  Mask skull;
  try {
    skull = synth_skull_phantom(p);
  } catch (const std::exception& e) {
    throw DataError(std::string("invalid phantom config: ") + e.what());
  }
  const fs::path out(a.out);
  ensure_dir(parent_or_cwd(out));
  save_nrrd(out, synth_ct(skull, a.table, a.seed));
  m.output(out);
  if (!a.skull_out.empty()) {
    ensure_dir(parent_or_cwd(a.skull_out));
    save_nrrd(a.skull_out, skull);
    m.output(a.skull_out);
  }
  m.config(cfg);
  m.seed(a.seed);
  m.write(parent_or_cwd(out), out.filename().string());
  return kOk;
}

struct ExtractArgs {
  std::string in;
  std::string out;
  int hu = 150;
};

int extract_skull_cmd(const ExtractArgs& a, Manifest& m) {
  HuVolume ct;
  try {
    ct = load_hu(a.in);
  } catch (const std::exception& e) {
    throw DataError(a.in + ": " + e.what());
  }
  Mask skull;
  try {
    skull = extract_skull(ct, static_cast<std::int16_t>(a.hu));
  } catch (const SkullError& e) {
    throw DataError(a.in + ": " + e.what());
  }
  const fs::path out(a.out);
  ensure_dir(parent_or_cwd(out));
  save_nrrd(out, skull);
  m.input(a.in);
  m.output(out);
  m.write(parent_or_cwd(out), out.filename().string());
  return kOk;
}

struct TrainArgs {
  std::string stage;
  std::string data;
  std::string config;
  std::string out;
  std::string coarse_model;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

int train_cmd(const TrainArgs& a, Manifest& m) {
  Stage stage;
  try {
    stage = stage_from_string(a.stage);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (stage == Stage::Fine && a.coarse_model.empty()) throw UsageError("--stage fine requires --coarse-model");
  const LoadedConfig cfg = load_config(a.config);
  RunConfig rc = run_config(cfg);
  TrainConfig& tc = stage == Stage::Fine ? rc.fine_train : rc.coarse_train;
  if (a.seed) tc.seed = *a.seed;

  std::optional<Model> coarse;
  if (stage == Stage::Fine) {
    coarse = load_checkpoint(a.coarse_model);
    m.input(a.coarse_model);
  }
  const std::vector<CaseTriple> cases = load_cases(a.data);
  m.input(a.data);

  auto log = [&](const LossPoint& p) {
    if (a.verbose) std::cerr << "step " << p.step << " loss " << format_double(p.interval_mean) << '\n';
  };
  const StageResult r = train_stage(stage, cases, rc, coarse ? &*coarse : nullptr, log);

  const fs::path out(a.out);
  const fs::path dir = parent_or_cwd(out);
  ensure_dir(dir);
  save_model(out, r.model);
  fs::path curve = out;
  curve.replace_filename(out.stem().string() + "_loss.csv");
  write_text(curve, loss_curve_csv(r.training.curve));
  m.config(cfg);
  m.seed(tc.seed);
  m.output(out);
  m.output(curve);
  m.write(dir, out.filename().string());
  for (const std::string& id : r.skipped_cases) std::cerr << "skipped " << id << ": localization failed\n";
  std::cout << "trained " << to_string(stage) << " on " << r.used_cases.size() << " cases, final loss "
            << format_double(r.training.curve.empty() ? r.training.step_losses.back()
                                                      : r.training.curve.back().interval_mean)
            << '\n';
  return kOk;
}

struct PredictArgs {
  std::string coarse;
  std::string fine;
  std::string in;
  std::string out;
  std::string mode;
  std::string config;
  bool fallback = false;
};

int predict_cmd(const PredictArgs& a, Manifest& m) {
  const LoadedConfig cfg = load_config(a.config);
  PipelineConfig pc;
  try {
    if (cfg.doc.contains("pipeline")) pc = pipeline_config_from_json(cfg.doc["pipeline"]);
    if (!a.mode.empty()) pc.mode = pipeline_mode_from_string(a.mode);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (a.fallback) pc.fallback_whole_volume = true;
  const Model coarse = load_checkpoint(a.coarse);
  const Model fine = load_checkpoint(a.fine);
  if (!cfg.doc.contains("pipeline")) {
    pc.coarse_dims = coarse.config.input_dims;
    pc.fine_canvas_dims = fine.config.input_dims;
    pc.z_extent = std::min(pc.z_extent, pc.fine_canvas_dims.nz);
  }
  m.config(cfg);
  m.input(a.coarse);
  m.input(a.fine);

  const fs::path in(a.in), out(a.out);
  if (fs::is_directory(in)) {
    // Batch mode over a dataset directory: <out>/<id>_implant.nrrd.
    const std::vector<CaseTriple> cases = load_cases(in);
    ensure_dir(out);
    int status = kOk;
    for (const CaseTriple& c : cases) {
      try {
        const PipelineResult r = run_pipeline(coarse, fine, c.defective, pc);
        save_nrrd(out / (c.id + "_implant.nrrd"), r.implant);
        if (r.completed) save_nrrd(out / (c.id + "_completed.nrrd"), *r.completed);
      } catch (const LocalizationError& e) {
        std::cerr << c.id << ": " << e.what() << '\n';
        status = kPipeline;
      }
    }
    m.input(in);
    m.output(out);
    m.write(out, "predictions");
    return status;
  }

  const Mask defective = load_mask_file(in);
  const PipelineResult r = run_pipeline(coarse, fine, defective, pc);
  ensure_dir(parent_or_cwd(out));
  save_nrrd(out, r.implant);
  m.input(in);
  m.output(out);
  if (r.completed) {
    fs::path completed = out;
    completed.replace_filename(out.stem().string() + "_completed.nrrd");
    save_nrrd(completed, *r.completed);
    m.output(completed);
  }
  m.write(parent_or_cwd(out), out.filename().string());
  if (r.used_fallback) std::cerr << "localization failed; used whole-volume fallback\n";
  return kOk;
}

struct EvaluateArgs {
  std::string pred;
  std::string gt;
  std::string out;
  std::string mode = "direct";
  std::string config;
};

int evaluate_cmd(const EvaluateArgs& a, Manifest& m) {
  const LoadedConfig cfg = load_config(a.config);
  const std::vector<CaseTriple> truth = load_cases(a.gt);
  std::set<std::string> predicted;
  const std::string suffix = "_implant.nrrd";
  for (const auto& entry : fs::directory_iterator(a.pred)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix))
      predicted.insert(name.substr(0, name.size() - suffix.size()));
  }
  std::set<std::string> expected;
  for (const CaseTriple& c : truth) expected.insert(c.id);
  if (predicted != expected) {
    std::string missing, extra;
    for (const auto& id : expected)
      if (!predicted.count(id)) missing += " " + id;
    for (const auto& id : predicted)
      if (!expected.count(id)) extra += " " + id;
    throw DataError("case lists differ; missing predictions:" + (missing.empty() ? " none" : missing) +
                    "; unexpected:" + (extra.empty() ? " none" : extra));
  }
  std::vector<std::string> ids;
  std::vector<Mask> preds, truths;
  for (const CaseTriple& c : truth) {
    ids.push_back(c.id);
    preds.push_back(load_mask_file(fs::path(a.pred) / (c.id + suffix)));
    truths.push_back(c.implant);
  }
  EvalReport report;
  try {
    report = evaluate_set(ids, preds, truths, a.mode, cfg.hash);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  const fs::path out(a.out);
  ensure_dir(out);
  write_text(out / "report.csv", report_csv(report));
  write_text(out / "report.json", report_json(report).dump(2) + "\n");
  m.config(cfg);
  m.input(a.pred);
  m.input(a.gt);
  m.output(out / "report.csv");
  m.output(out / "report.json");
  m.write(out, "report");
  std::cout << "cases " << report.rows.size() << " mean dsc " << format_double(report.dsc.mean) << '\n';
  return kOk;
}

int param_count_cmd(const std::string& path) {
  const LoadedConfig cfg = load_config(path);
  try {
    if (cfg.doc.contains("coarse_network")) {
      const RunConfig rc = run_config_from_json(cfg.doc);
      std::cout << "coarse_network " << param_count(rc.coarse_network) << '\n';
      std::cout << "fine_network " << param_count(rc.fine_network) << '\n';
    } else {
      const NetworkConfig nc = network_config_from_json(cfg.doc);
      std::cout << param_count(nc) << '\n';
    }
  } catch (const std::exception& e) {
    throw DataError("config " + path + ": " + e.what());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cranial implant prediction from defective skull volumes"};
  app.set_version_flag("--version", CRANIAL_VERSION);
  app.require_subcommand(1);

  SynthDataArgs sd;
  auto* c_sd = app.add_subcommand("synth-data", "Generate a synthetic defective-skull dataset");
  c_sd->add_option("--n", sd.n, "Number of cases")->required();
  c_sd->add_option("--split", sd.split, "Split name used in case ids");
  c_sd->add_option("--distribution", sd.distribution, "in_distribution or robustness");
  c_sd->add_option("--seed", sd.seed, "Dataset seed");
  c_sd->add_option("--out", sd.out, "Output directory")->required();
  c_sd->add_option("--config", sd.config, "JSON config with a \"dataset\" section");

  SynthCtArgs sc;
  auto* c_sc = app.add_subcommand("synth-ct", "Generate a synthetic head CT (HU) around a phantom skull");
  c_sc->add_option("--seed", sc.seed, "Phantom seed");
  c_sc->add_option("--out", sc.out, "Output CT NRRD")->required();
  c_sc->add_option("--skull-out", sc.skull_out, "Also write the phantom skull mask");
  c_sc->add_option("--config", sc.config, "JSON config with a \"dataset\" section");
  c_sc->add_flag("!--no-table", sc.table, "Omit the head-holder bar");

  ExtractArgs ex;
  auto* c_ex = app.add_subcommand("extract-skull", "Threshold a CT and keep the largest bone component");
  c_ex->add_option("--in", ex.in, "CT NRRD (HU)")->required();
  c_ex->add_option("--out", ex.out, "Output mask NRRD")->required();
  c_ex->add_option("--hu", ex.hu, "Bone threshold in HU")->check(CLI::Range(-1024, 3071));

  TrainArgs tr;
  std::uint64_t train_seed = 0;
  auto* c_tr = app.add_subcommand("train", "Train one stage of the pipeline");
  c_tr->add_option("--stage", tr.stage, "coarse, fine or completion")->required();
  c_tr->add_option("--data", tr.data, "Dataset directory")->required();
  c_tr->add_option("--config", tr.config, "Run config JSON")->required();
  c_tr->add_option("--out", tr.out, "Output checkpoint")->required();
  c_tr->add_option("--coarse-model", tr.coarse_model, "Coarse checkpoint (fine stage)");
  auto* seed_opt = c_tr->add_option("--seed", train_seed, "Override the stage seed from the config");
  c_tr->add_flag("--verbose", tr.verbose, "Print the loss curve to stderr");

  PredictArgs pr;
  auto* c_pr = app.add_subcommand("predict", "Predict implants for a defective skull or a dataset directory");
  c_pr->add_option("--n1", pr.coarse, "Coarse checkpoint")->required();
  c_pr->add_option("--n2", pr.fine, "Fine checkpoint")->required();
  c_pr->add_option("--in", pr.in, "Defective skull NRRD or dataset directory")->required();
  c_pr->add_option("--out", pr.out, "Output NRRD (or directory in batch mode)")->required();
  c_pr->add_option("--mode", pr.mode, "direct or completion (default: from config)");
  c_pr->add_option("--config", pr.config, "Run config JSON");
  c_pr->add_flag("--fallback", pr.fallback, "Use the whole volume when localization fails");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Score predictions against a ground-truth dataset");
  c_ev->add_option("--pred", ev.pred, "Prediction directory (<id>_implant.nrrd)")->required()->check(CLI::ExistingDirectory);
  c_ev->add_option("--gt", ev.gt, "Ground-truth dataset directory")->required()->check(CLI::ExistingDirectory);
  c_ev->add_option("--out", ev.out, "Report directory")->required();
  c_ev->add_option("--mode", ev.mode, "Mode label stored in the report");
  c_ev->add_option("--config", ev.config, "Config whose hash is stored in the report");

  std::string pc_path;
  auto* c_pc = app.add_subcommand("param-count", "Print trainable parameter counts for a config");
  c_pc->add_option("--config", pc_path, "Network or run config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  Manifest manifest(app.get_subcommands().front()->get_name(), std::vector<std::string>(argv + 1, argv + argc));
  try {
    if (*c_sd) return synth_data(sd, manifest);
    if (*c_sc) return synth_ct_cmd(sc, manifest);
    if (*c_ex) return extract_skull_cmd(ex, manifest);
    if (*c_tr) {
      if (*seed_opt) tr.seed = train_seed;
      return train_cmd(tr, manifest);
    }
    if (*c_pr) return predict_cmd(pr, manifest);
    if (*c_ev) return evaluate_cmd(ev, manifest);
    if (*c_pc) return param_count_cmd(pc_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const LocalizationError& e) {
    std::cerr << "pipeline failure: " << e.what() << '\n';
    return kPipeline;
  } catch (const TrainingDiverged& e) {
    std::cerr << "pipeline failure: " << e.what() << '\n';
    return kPipeline;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
