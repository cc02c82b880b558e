#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uxai/dataset.hpp"
#include "uxai/stats.hpp"
#include "uxai/uncertainty.hpp"

namespace uxai {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSpec {
  std::string name;
  std::string path;
  std::string label_column = "class";
};

struct ModelParams {
  std::string type = "knn";  // knn | forest
  std::size_t k = 7;
  std::size_t trees = 100;
  std::size_t depth = 4;
};

struct RobustnessParams {
  double epsilon = 0.1;
  std::size_t n_samples = 30;
};

struct ShapleyParams {
  std::string mode = "auto";  // auto | exact | sampled
  std::size_t n_permutations = 200;
  std::size_t background_rows = 100;
  std::size_t exact_limit = 12;   // auto mode: exact up to this many features
  std::size_t max_instances = 0;  // 0 = explain every test instance
};

struct ToyParams {
  std::size_t n_per_class = 200;
  double noise = 0.12;
  std::size_t grid = 61;
  double margin = 0.75;  // in normalized units beyond [0,1]
};

// Every knob of every pipeline, resolved. The JSON form of this struct is
// the experiment's identity: its hash lands in every output row.
struct ExperimentConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<std::string> strategies = {"belief"};
  ModelParams model;
  QuantifierParams quantifier;
  RobustnessParams robustness;
  ShapleyParams shapley;
  ToyParams toy;
  std::size_t runs = 100;
  std::uint64_t seed = 42;
  double train_fraction = 0.7;
  bool stratified = true;
  double alpha = 0.05;
  double reject_quantile = 0.7;     // epistemic threshold quantile
  double aleatoric_quantile = 0.5;  // aleatoric threshold quantile
  std::string calibration_split = "test";  // train | test
  std::size_t curve_points = 101;
  std::size_t threads = 0;  // 0 = all hardware threads
  std::string explanation = "auto";  // reject-demo: auto | counterfactual | importance
  std::string output_dir = "out";
};

// Strict JSON config loading: unknown keys are errors, values are
// type-checked, and anything absent keeps its default.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json_text(const std::string& text);

// Canonical resolved dump (sorted keys, no incidental whitespace) and its
// FNV-1a hash, printed as 16 hex digits.
std::string config_to_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

// ---- measurement primitives (also driven directly by the test suite) ----

struct StrategyColumns {
  std::string strategy;
  std::vector<double> aleatoric;
  std::vector<double> epistemic;
};

// One train/test episode: the explanation-quality column (counterfactual
// dissimilarity, or explanation instability) for each evaluated test
// instance, plus per-strategy uncertainty columns aligned with it.
struct RunColumns {
  std::vector<double> value;
  std::vector<StrategyColumns> strategies;
};

RunColumns measure_cf_run(const Dataset& data, const ExperimentConfig& cfg,
                          std::uint64_t run_seed);
RunColumns measure_shap_run(const Dataset& data, const ExperimentConfig& cfg,
                            std::uint64_t run_seed);

std::uint64_t run_seed_for(const ExperimentConfig& cfg,
                           const std::string& dataset_name, std::size_t run);

struct StrategyCorrelation {
  std::string strategy;
  CorrelationReport full;
  // Shapley pipeline only: correlation restricted to instances below the
  // per-run epistemic rejection threshold.
  std::optional<CorrelationReport> filtered;
};

struct DatasetOutcome {
  std::string dataset;
  bool ok = false;
  std::string error;
  std::vector<StrategyCorrelation> strategies;
  std::vector<RunColumns> runs;  // per-run raw columns, for export
};

// Aggregated correlation between uncertainty and counterfactual
// dissimilarity (or explanation instability) over cfg.runs episodes. Runs
// execute on a thread pool; results are deterministic for a fixed config.
DatasetOutcome correlate_cf_dataset(const Dataset& data,
                                    const std::string& name,
                                    const ExperimentConfig& cfg);
DatasetOutcome correlate_shap_dataset(const Dataset& data,
                                      const std::string& name,
                                      const ExperimentConfig& cfg);

// ---- full pipelines behind the CLI verbs ----
// Each returns the number of failed units (0 = complete success), writes
// its tables/curves/records under cfg.output_dir, and logs progress.

int run_correlate_cf(const ExperimentConfig& cfg, std::ostream& log);
int run_correlate_shap(const ExperimentConfig& cfg, std::ostream& log);
int run_reject_demo(const ExperimentConfig& cfg, std::ostream& log);
int run_route(const ExperimentConfig& cfg,
              const std::filesystem::path& instances_csv,
              const std::optional<std::filesystem::path>& save_model_path,
              const std::optional<std::filesystem::path>& load_model_path,
              std::ostream& log);
int run_toy_landscape(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace uxai
