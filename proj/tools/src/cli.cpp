#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "coastal/augment.hpp"
#include "coastal/baselines.hpp"
#include "coastal/caspian.hpp"
#include "coastal/dataset.hpp"
#include "coastal/errors.hpp"
#include "coastal/grid_io.hpp"
#include "coastal/metrics.hpp"
#include "coastal/synth.hpp"
#include "coastal/trainer.hpp"
#include "json.hpp"
#include "model_dir.hpp"
#include "service.hpp"

namespace coastal::tools {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

/// Bad flags or inputs the user can fix; maps to exit code 2.
struct UsageError : Error {
  using Error::Error;
};

json read_json_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw Error("cannot write " + file.string());
  out << text << '\n';
}

/// Split from the config's "split" object, else 112:12:18 proportions of n.
SplitSpec split_from_config(const json& cfg, std::size_t n) {
  SplitSpec s;
  if (cfg.contains("split")) {
    const json& j = cfg["split"];
    s.train = j.value("train", s.train);
    s.val = j.value("val", s.val);
    s.test = j.value("test", s.test);
    s.seed = j.value("seed", s.seed);
    return s;
  }
  s.val = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(n * 12.0 / 142.0)));
  s.test = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(n * 18.0 / 142.0)));
  if (s.val + s.test >= n) throw UsageError("dataset too small to split");
  s.train = n - s.val - s.test;
  return s;
}

/// Without an explicit patch_size the 60-cell patch is scaled to the grid height.
CutoutConfig augment_from_config(const json& cfg, int height) {
  CutoutConfig c;
  c.patch_size = std::max(1, static_cast<int>(std::lround(c.patch_size * height / 1024.0)));
  if (cfg.contains("augment")) {
    const json& j = cfg["augment"];
    c.n_patches = j.value("n_patches", c.n_patches);
    c.patch_size = j.value("patch_size", c.patch_size);
    c.m = j.value("m", c.m);
    c.seed = j.value("seed", c.seed);
  }
  return c;
}

std::string augment_to_json(const CutoutConfig& c) {
  return json{{"n_patches", c.n_patches}, {"patch_size", c.patch_size}, {"m", c.m}, {"seed", c.seed}}.dump();
}

std::vector<Sample> select_split(const Dataset& data, const SplitSpec& spec, const std::string& which) {
  if (which == "all") return data.samples;
  DatasetSplit s = split_dataset(data.samples, spec);
  if (which == "train") return s.train;
  if (which == "val") return s.val;
  if (which == "test") return s.test;
  throw UsageError("unknown split '" + which + "' (expected train, val, test or all)");
}

ProtectionScenario parse_scenario_arg(const std::string& text) {
  try {
    return parse_scenario(text);
  } catch (const ParseError& e) {
    throw UsageError(std::string("--scenario: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::size_t d_x = 6;
  std::size_t locations = 400;
  int height = 128;
  int width = 128;
  std::size_t scenarios = 64;
  SynthOracleParams oracle{0.0, 2.0, 1.0, 0.3, 42};
};

int run_synth(const SynthArgs& a, std::ostream& out) {
  const DatasetManifest m =
      generate_synthetic_dataset(a.d_x, a.locations, a.height, a.width, a.scenarios, a.oracle, a.out);
  out << manifest_to_json(m) << '\n';
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  long long seed = -1;
  bool quiet = false;
};

int run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const json cfg = read_json_file(a.config);
  const Dataset data = load_dataset(a.data);

  ModelConfig base = ModelConfig::desk();
  base.H = data.manifest.H;
  base.W = data.manifest.W;
  ModelConfig mc = model_config_from_json(cfg.dump(), base);
  TrainConfig tc = train_config_from_json(cfg.dump());
  CutoutConfig ac = augment_from_config(cfg, mc.H);
  SplitSpec split = split_from_config(cfg, data.samples.size());
  if (a.seed >= 0) {
    mc.seed = tc.seed = ac.seed = static_cast<std::uint64_t>(a.seed);
  }
  if (mc.H != data.manifest.H || mc.W != data.manifest.W) {
    throw UsageError("model grid " + std::to_string(mc.H) + "x" + std::to_string(mc.W) + " differs from dataset grid " +
                     std::to_string(data.manifest.H) + "x" + std::to_string(data.manifest.W));
  }
  mc.validate();
  tc.validate();
  ac.validate(mc.H, mc.W);

  const GridIndexMap index_map = dataset_index_map(data);
  const DatasetSplit parts = split_dataset(data.samples, split);
  const auto train_pairs = augment_dataset(make_training_pairs(parts.train, data.locations, index_map), ac);
  const auto val_pairs = make_training_pairs(parts.val, data.locations, index_map);

  CaspianModel<float> model(mc);
  if (!a.quiet) {
    err << "training " << model.parameter_count() << " parameters on " << train_pairs.size() << " pairs\n";
  }
  const auto start = std::chrono::steady_clock::now();
  const TrainHistory hist = train(model, train_pairs, val_pairs, tc, [&](const EpochRecord& r) {
    if (!a.quiet) {
      err << "epoch " << r.epoch << " lr " << r.lr << " train " << r.train_loss << " val " << r.val_loss << '\n';
    }
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path dir(a.out);
  save_checkpoint(model, dir, model_dir_metadata(data, split, train_config_to_json(tc), augment_to_json(ac)));
  write_locations_csv(data.locations, dir / "locations.csv");
  write_text(dir / "history.json", hist.to_json());

  std::vector<const SusceptibilityMap*> maps;
  for (const auto& p : val_pairs) maps.push_back(&p.input);
  const auto grids = predict_maps(model, maps, tc.batch_size);
  std::vector<DepthVector> preds, targets;
  for (std::size_t k = 0; k < grids.size(); ++k) {
    preds.push_back(extract_depths(grids[k], index_map));
    targets.push_back(parts.val[k].depths);
  }
  const std::string metrics = metrics_to_json(compute_metrics(preds, targets));
  write_text(dir / "metrics_val.json", metrics);

  out << json{{"model_dir", dir.string()},
              {"parameter_count", model.parameter_count()},
              {"epochs_run", hist.epochs.size()},
              {"best_epoch", hist.best_epoch},
              {"best_val_loss", hist.best_val_loss},
              {"seconds", seconds},
              {"fingerprint", bundle_fingerprint(dir)},
              {"val_metrics", json::parse(metrics)}}
             .dump(2)
      << '\n';
  return 0;
}

struct EvaluateArgs {
  std::string model;
  std::string data;
  std::string split = "test";
};

int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const ModelDir m = load_model_dir(a.model, a.data);
  const Dataset data = load_dataset(a.data);
  if (data.manifest.d_x != m.d_x) throw UsageError("dataset d_x differs from the model's");
  const auto samples = select_split(data, m.split, a.split);
  if (samples.empty()) throw UsageError("split '" + a.split + "' is empty");
  std::vector<SusceptibilityMap> inputs;
  inputs.reserve(samples.size());
  for (const auto& s : samples) inputs.push_back(encode_susceptibility(s.scenario, m.locations, m.index_map));
  std::vector<const SusceptibilityMap*> ptrs;
  for (const auto& i : inputs) ptrs.push_back(&i);
  const auto grids = predict_maps(m.model(), ptrs, 2);
  std::vector<DepthVector> preds, targets;
  for (std::size_t k = 0; k < grids.size(); ++k) {
    preds.push_back(extract_depths(grids[k], m.index_map));
    targets.push_back(samples[k].depths);
  }
  out << metrics_to_json(compute_metrics(preds, targets)) << '\n';
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string data;
  std::string scenario;
  std::string grid_out;
};

int run_predict(const PredictArgs& a, std::ostream& out) {
  const ModelDir m = load_model_dir(a.model, a.data);
  const ProtectionScenario s = parse_scenario_arg(a.scenario);
  if (s.size() != m.d_x) {
    throw UsageError("--scenario has " + std::to_string(s.size()) + " bits, model expects d_x = " +
                     std::to_string(m.d_x));
  }
  const auto start = std::chrono::steady_clock::now();
  const Grid<float> grid = predict_grid(m, s);
  const DepthVector depths = extract_depths(grid, m.index_map);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (!a.grid_out.empty()) {
    write_grid_file(a.grid_out, InundationMap{grid, encode_inundation(depths, m.index_map).mask});
  }
  out << json{{"depths", depths}, {"latency_ms", std::max(ms, 1e-6)}, {"fingerprint", m.fingerprint()}}.dump() << '\n';
  return 0;
}

struct AblateArgs {
  std::string variant;
  std::string config;
};

int run_ablate(const AblateArgs& a, std::ostream& out) {
  const json cfg = read_json_file(a.config);
  Variant v;
  try {
    v = parse_variant(a.variant);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const ModelConfig mc = model_config_from_json(cfg.dump(), ModelConfig::paper());
  const CaspianModel<float> model = build_ablation<float>(mc, v);
  out << json{{"variant", std::string(to_string(v))},
              {"parameter_count", count_params(model)},
              {"closed_form", closed_form_param_count(model.config())}}
             .dump()
      << '\n';
  return 0;
}

struct BaselineArgs {
  std::string method;
  std::string data;
  std::string out;
  std::string config;
  std::string model;
  std::string scenario;
  std::string split = "test";
};

int run_baseline_fit(const BaselineArgs& a, std::ostream& out, std::ostream& err) {
  const json cfg = read_json_file(a.config);
  const Dataset data = load_dataset(a.data);
  const SplitSpec split = split_from_config(cfg, data.samples.size());
  const DatasetSplit parts = split_dataset(data.samples, split);
  std::vector<ProtectionScenario> xs;
  std::vector<DepthVector> ys;
  for (const auto& s : parts.train) {
    xs.push_back(s.scenario);
    ys.push_back(s.depths);
  }
  const baselines::Matrix X = baselines::scenario_matrix(xs);
  const baselines::Matrix Y = baselines::depth_matrix(ys);
  const json bcfg = cfg.value("baselines", json::object());
  auto opts = [&](const char* key) { return bcfg.value(key, json::object()); };

  std::unique_ptr<baselines::Model> model;
  if (a.method == "naive") {
    const bool per_loc = opts("naive").value("per_location", false);
    model = std::make_unique<baselines::NaivePredictor>(
        baselines::NaivePredictor::fit(Y, baselines::location_segments(data.locations), data.manifest.d_x, per_loc));
  } else if (a.method == "linear") {
    model = std::make_unique<baselines::LinearModel>(baselines::fit_linear(X, Y));
  } else if (a.method == "lasso") {
    baselines::LassoOptions o;
    const json j = opts("lasso");
    o.lambda = j.value("lambda", o.lambda);
    o.tol = j.value("tol", o.tol);
    o.max_iter = j.value("max_iter", o.max_iter);
    model = std::make_unique<baselines::LinearModel>(baselines::fit_lasso_poly(X, Y, o));
  } else if (a.method == "svr") {
    baselines::SvrOptions o;
    const json j = opts("svr");
    o.C = j.value("C", o.C);
    o.epsilon = j.value("epsilon", o.epsilon);
    model = std::make_unique<baselines::SvrModel>(baselines::fit_svr_per_location(X, Y, o));
  } else if (a.method == "kriging") {
    baselines::KrigingOptions o;
    const json j = opts("kriging");
    o.pca_threshold = j.value("pca_threshold", o.pca_threshold);
    o.starts = j.value("starts", o.starts);
    o.seed = j.value("seed", o.seed);
    model = std::make_unique<baselines::KrigingPcaModel>(baselines::fit_kriging_pca(X, Y, o));
  } else {
    throw UsageError("unknown method '" + a.method + "' (expected naive, linear, lasso, svr or kriging)");
  }
  for (const auto& w : model->diagnostics.warnings) err << "warning: " << w << '\n';
  fs::create_directories(a.out);
  baselines::save_model(*model, a.out);
  json meta = {{"split", {{"train", split.train}, {"val", split.val}, {"test", split.test}, {"seed", split.seed}}}};
  write_text(fs::path(a.out) / "split.json", meta.dump(2));
  out << json{{"method", a.method}, {"model_dir", a.out}, {"diagnostics", model->diagnostics.values}}.dump(2)
      << '\n';
  return 0;
}

SplitSpec baseline_split(const std::string& model_dir) {
  const json j = read_json_file((fs::path(model_dir) / "split.json").string());
  SplitSpec s;
  const json& sp = j.at("split");
  s.train = sp.at("train").get<std::size_t>();
  s.val = sp.at("val").get<std::size_t>();
  s.test = sp.at("test").get<std::size_t>();
  s.seed = sp.at("seed").get<std::uint64_t>();
  return s;
}

int run_baseline_predict(const BaselineArgs& a, std::ostream& out) {
  const auto model = baselines::load_model(a.model);
  const ProtectionScenario s = parse_scenario_arg(a.scenario);
  if (s.size() != model->input_dim()) {
    throw UsageError("--scenario has " + std::to_string(s.size()) + " bits, model expects d_x = " +
                     std::to_string(model->input_dim()));
  }
  out << json{{"method", std::string(model->method())}, {"depths", model->predict(s)}}.dump() << '\n';
  return 0;
}

int run_baseline_evaluate(const BaselineArgs& a, std::ostream& out) {
  const auto model = baselines::load_model(a.model);
  const Dataset data = load_dataset(a.data);
  const auto samples = select_split(data, baseline_split(a.model), a.split);
  std::vector<DepthVector> preds, targets;
  for (const auto& s : samples) {
    preds.push_back(model->predict(s.scenario));
    targets.push_back(s.depths);
  }
  out << metrics_to_json(compute_metrics(preds, targets)) << '\n';
  return 0;
}

struct ServeArgs {
  std::string model;
  std::string data;
  std::string host = "127.0.0.1";
  int port = -1;
  std::string config;
};

int run_serve(const ServeArgs& a) {
  const json cfg = read_json_file(a.config);
  int port = 8080;
  if (cfg.contains("serve")) port = cfg["serve"].value("port", port);
  if (const char* env = std::getenv("PORT"); env && *env) {
    try {
      port = std::stoi(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("PORT is not a number: ") + env);
    }
  }
  if (a.port >= 0) port = a.port;
  ServiceApi api(load_model_dir(a.model, a.data));
  run_server(api, a.host, port);
  return 0;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coastal flood surrogate toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset directory");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--d-x", synth.d_x, "Shoreline segments")->check(CLI::PositiveNumber);
  c_synth->add_option("--locations", synth.locations, "Nearshore locations")->check(CLI::PositiveNumber);
  c_synth->add_option("--height", synth.height, "Grid rows")->check(CLI::PositiveNumber);
  c_synth->add_option("--width", synth.width, "Grid columns")->check(CLI::PositiveNumber);
  c_synth->add_option("--scenarios", synth.scenarios, "Scenario count")->check(CLI::PositiveNumber);
  c_synth->add_option("--alpha", synth.oracle.alpha, "Shielding coefficient");
  c_synth->add_option("--beta", synth.oracle.beta, "Spillover coefficient");
  c_synth->add_option("--base-min", synth.oracle.base_min, "Lower base depth");
  c_synth->add_option("--base-max", synth.oracle.base_max, "Upper base depth");
  c_synth->add_option("--seed", synth.oracle.seed, "Seed");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train CASPIAN on a dataset");
  c_train->add_option("--data", tr.data, "Dataset directory")->required();
  c_train->add_option("--config", tr.config, "JSON config (model, train, augment, split)");
  c_train->add_option("--out", tr.out, "Model directory to write")->required();
  c_train->add_option("--seed", tr.seed, "Overrides every seed in the config");
  c_train->add_flag("--quiet", tr.quiet, "No per-epoch log");

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Metrics of a trained model on a split");
  c_eval->add_option("--model", ev.model, "Model directory")->required();
  c_eval->add_option("--data", ev.data, "Dataset directory")->required();
  c_eval->add_option("--split", ev.split, "train, val, test or all");

  PredictArgs pr;
  auto* c_pred = app.add_subcommand("predict", "Predict depths for one scenario");
  c_pred->add_option("--model", pr.model, "Model directory")->required();
  c_pred->add_option("--scenario", pr.scenario, "Protection bitstring")->required();
  c_pred->add_option("--data", pr.data, "Dataset directory (locations override)");
  c_pred->add_option("--grid-out", pr.grid_out, "Write the predicted grid in binary form");

  AblateArgs ab;
  auto* c_abl = app.add_subcommand("ablate", "Build an ablation variant and report its size");
  c_abl->add_option("--variant", ab.variant, "full, B, Gamma, Z or Omega")->required();
  c_abl->add_option("--config", ab.config, "JSON config with a model section");

  BaselineArgs bl;
  auto* c_base = app.add_subcommand("baseline", "Fit, apply or score comparison models");
  c_base->require_subcommand(1);
  auto* c_bfit = c_base->add_subcommand("fit", "Fit on the training split");
  c_bfit->add_option("--method", bl.method, "naive, linear, lasso, svr or kriging")
      ->required()
      ->check(CLI::IsMember({"naive", "linear", "lasso", "svr", "kriging"}));
  c_bfit->add_option("--data", bl.data, "Dataset directory")->required();
  c_bfit->add_option("--out", bl.out, "Output directory")->required();
  c_bfit->add_option("--config", bl.config, "JSON config (split, baselines)");
  auto* c_bpred = c_base->add_subcommand("predict", "Predict one scenario");
  c_bpred->add_option("--model", bl.model, "Fitted baseline directory")->required();
  c_bpred->add_option("--scenario", bl.scenario, "Protection bitstring")->required();
  auto* c_beval = c_base->add_subcommand("evaluate", "Metrics on a split");
  c_beval->add_option("--model", bl.model, "Fitted baseline directory")->required();
  c_beval->add_option("--data", bl.data, "Dataset directory")->required();
  c_beval->add_option("--split", bl.split, "train, val, test or all");

  ServeArgs sv;
  auto* c_serve = app.add_subcommand("serve", "Run the HTTP inference service");
  c_serve->add_option("--model", sv.model, "Model directory")->required();
  c_serve->add_option("--data", sv.data, "Dataset directory (locations override)");
  c_serve->add_option("--host", sv.host, "Bind address");
  c_serve->add_option("--port", sv.port, "Port (overrides PORT and the config)");
  c_serve->add_option("--config", sv.config, "JSON config with a serve section");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (c_synth->parsed()) return run_synth(synth, out);
    if (c_train->parsed()) return run_train(tr, out, err);
    if (c_eval->parsed()) return run_evaluate(ev, out);
    if (c_pred->parsed()) return run_predict(pr, out);
    if (c_abl->parsed()) return run_ablate(ab, out);
    if (c_bfit->parsed()) return run_baseline_fit(bl, out, err);
    if (c_bpred->parsed()) return run_baseline_predict(bl, out);
    if (c_beval->parsed()) return run_baseline_evaluate(bl, out);
    if (c_serve->parsed()) return run_serve(sv);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace coastal::tools
