#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uxai/experiment.hpp"

namespace {

using nlohmann::json;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::string> datasets;
  std::string label_column = "class";
  std::vector<std::string> strategies;
  std::optional<std::size_t> runs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> output_dir;
};

void add_common(CLI::App& cmd, CommonOpts& o) {
  cmd.add_option("-c,--config", o.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  cmd.add_option("--set", o.sets,
                 "Override a config key, e.g. --set model.k=9 or "
                 "--set shapley.mode=exact (repeatable)");
  cmd.add_option("--dataset", o.datasets,
                 "Dataset as name=path/to.csv; replaces the config list "
                 "(repeatable)");
  cmd.add_option("--label", o.label_column,
                 "Label column for --dataset files");
  cmd.add_option("--strategy", o.strategies,
                 "Uncertainty strategy (ensemble, centroid, belief); "
                 "replaces the config list (repeatable)");
  cmd.add_option("--runs", o.runs, "Number of train/test episodes");
  cmd.add_option("--seed", o.seed, "Master seed");
  cmd.add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  cmd.add_option("-o,--output", o.output_dir, "Output directory");
}

uxai::ExperimentConfig build_config(const CommonOpts& o) {
  json root = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw uxai::ConfigError("cannot open config " + o.config_path);
    try {
      root = json::parse(in);
    } catch (const json::exception& e) {
      throw uxai::ConfigError(o.config_path + " is not valid JSON: " +
                              e.what());
    }
  }
  for (const std::string& kv : o.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw uxai::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    std::string path = "/" + kv.substr(0, eq);
    for (char& c : path) {
      if (c == '.') c = '/';
    }
    std::string raw = kv.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;  // bare words stay strings
    root[json::json_pointer(path)] = std::move(value);
  }
  if (!o.datasets.empty()) {
    json arr = json::array();
    for (const std::string& kv : o.datasets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw uxai::ConfigError("--dataset expects name=path, got '" + kv +
                                "'");
      }
      arr.push_back(json{{"name", kv.substr(0, eq)},
                         {"path", kv.substr(eq + 1)},
                         {"label_column", o.label_column}});
    }
    root["datasets"] = std::move(arr);
  }
  if (!o.strategies.empty()) root["strategies"] = o.strategies;
  if (o.runs) root["runs"] = *o.runs;
  if (o.seed) root["seed"] = *o.seed;
  if (o.threads) root["threads"] = *o.threads;
  if (o.output_dir) root["output_dir"] = *o.output_dir;
  return uxai::config_from_json_text(root.dump());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "uxai: uncertainty-aware explanation experiments.\n"
      "Quantifies aleatoric/epistemic uncertainty, correlates it with "
      "explanation quality, and routes instances to the right explanation."};
  app.require_subcommand(1);
#ifdef UXAI_VERSION
  app.set_version_flag("--version", UXAI_VERSION);
#endif

  CommonOpts opts;
  auto* cf = app.add_subcommand(
      "correlate-cf",
      "Correlate aleatoric uncertainty with counterfactual dissimilarity");
  auto* shap = app.add_subcommand(
      "correlate-shap",
      "Correlate aleatoric uncertainty with feature-importance instability");
  auto* reject = app.add_subcommand(
      "reject-demo",
      "Rejection curves plus a dossier for the most epistemic instance");
  auto* route = app.add_subcommand(
      "route", "Route instances to reject / counterfactual / importance");
  auto* toy = app.add_subcommand(
      "toy-landscape", "Uncertainty landscape over a 2-D two-moons grid");
  for (CLI::App* cmd : {cf, shap, reject, route, toy}) {
    add_common(*cmd, opts);
  }

  std::string instances_path;
  std::string save_model, load_model;
  route->add_option("--instances", instances_path,
                    "CSV of feature rows to route")
      ->required()
      ->check(CLI::ExistingFile);
  route->add_option("--save-model", save_model,
                    "Write the fitted classifier to this JSON file");
  route->add_option("--load-model", load_model,
                    "Reuse a previously saved classifier")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    uxai::ExperimentConfig cfg = build_config(opts);
    int failed = 0;
    if (cf->parsed()) {
      failed = uxai::run_correlate_cf(cfg, std::cout);
    } else if (shap->parsed()) {
      failed = uxai::run_correlate_shap(cfg, std::cout);
    } else if (reject->parsed()) {
      failed = uxai::run_reject_demo(cfg, std::cout);
    } else if (route->parsed()) {
      std::optional<std::filesystem::path> save, load;
      if (!save_model.empty()) save = save_model;
      if (!load_model.empty()) load = load_model;
      failed = uxai::run_route(cfg, instances_path, save, load, std::cout);
    } else if (toy->parsed()) {
      failed = uxai::run_toy_landscape(cfg, std::cout);
    }
    if (failed != 0) {
      std::cerr << failed << " unit(s) failed\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
