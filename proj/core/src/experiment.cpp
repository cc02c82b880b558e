#include "uxai/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "uxai/classifiers.hpp"
#include "uxai/explain.hpp"
#include "uxai/protocol.hpp"
#include "uxai/robustness.hpp"
#include "uxai/rng.hpp"
#include "uxai/serialization.hpp"

namespace uxai {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& scope) {
  for (const auto& item : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return item.key() == k;
        }) == allowed.end()) {
      throw ConfigError("unknown config key '" + scope + item.key() + "'");
    }
  }
}

void require_one_of(const std::string& value,
                    std::initializer_list<const char*> options,
                    const std::string& key) {
  if (std::find_if(options.begin(), options.end(), [&](const char* o) {
        return value == o;
      }) == options.end()) {
    std::string msg = "config: " + key + " must be one of {";
    bool first = true;
    for (const char* o : options) {
      if (!first) msg += ", ";
      msg += o;
      first = false;
    }
    throw ConfigError(msg + "}, got '" + value + "'");
  }
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.runs == 0) throw ConfigError("config: runs must be positive");
  if (cfg.train_fraction <= 0.0 || cfg.train_fraction >= 1.0) {
    throw ConfigError("config: train_fraction must be in (0, 1)");
  }
  for (double q : {cfg.reject_quantile, cfg.aleatoric_quantile}) {
    if (q < 0.0 || q > 1.0) {
      throw ConfigError("config: quantiles must be in [0, 1]");
    }
  }
  if (cfg.alpha <= 0.0 || cfg.alpha >= 1.0) {
    throw ConfigError("config: alpha must be in (0, 1)");
  }
  if (cfg.curve_points < 2) {
    throw ConfigError("config: curve_points must be at least 2");
  }
  if (cfg.strategies.empty()) {
    throw ConfigError("config: strategies must not be empty");
  }
  require_one_of(cfg.model.type, {"knn", "forest"}, "model.type");
  require_one_of(cfg.shapley.mode, {"auto", "exact", "sampled"},
                 "shapley.mode");
  require_one_of(cfg.calibration_split, {"train", "test"},
                 "calibration_split");
  require_one_of(cfg.explanation, {"auto", "counterfactual", "importance"},
                 "explanation");
  require_one_of(cfg.quantifier.centroid_aleatoric ==
                         CentroidAleatoric::softmax_entropy
                     ? "softmax_entropy"
                     : "total_minus_epistemic",
                 {"softmax_entropy", "total_minus_epistemic"},
                 "quantifier.centroid_aleatoric");
  for (const auto& spec : cfg.datasets) {
    if (spec.name.empty() || spec.path.empty()) {
      throw ConfigError("config: every dataset needs a name and a path");
    }
  }
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  ExperimentConfig cfg;
  try {
    check_keys(j, {"datasets", "strategies", "model", "quantifier",
                   "robustness", "shapley", "toy", "runs", "seed",
                   "train_fraction", "stratified", "alpha", "reject_quantile",
                   "aleatoric_quantile", "calibration_split", "curve_points",
                   "threads", "explanation", "output_dir"},
               "");
    if (j.contains("datasets")) {
      cfg.datasets.clear();
      for (const auto& dj : j.at("datasets")) {
        check_keys(dj, {"name", "path", "label_column"}, "datasets[].");
        DatasetSpec spec;
        spec.name = dj.at("name");
        spec.path = dj.at("path");
        spec.label_column = dj.value("label_column", spec.label_column);
        cfg.datasets.push_back(std::move(spec));
      }
    }
    if (j.contains("strategies")) {
      cfg.strategies = j.at("strategies").get<std::vector<std::string>>();
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, {"type", "k", "trees", "depth"}, "model.");
      cfg.model.type = m.value("type", cfg.model.type);
      cfg.model.k = m.value("k", cfg.model.k);
      cfg.model.trees = m.value("trees", cfg.model.trees);
      cfg.model.depth = m.value("depth", cfg.model.depth);
    }
    if (j.contains("quantifier")) {
      const auto& q = j.at("quantifier");
      check_keys(q, {"eknn_k", "eknn_alpha", "ensemble_trees",
                     "ensemble_depth", "centroid_sigma", "centroid_aleatoric"},
                 "quantifier.");
      cfg.quantifier.eknn_k = q.value("eknn_k", cfg.quantifier.eknn_k);
      cfg.quantifier.eknn_alpha =
          q.value("eknn_alpha", cfg.quantifier.eknn_alpha);
      cfg.quantifier.ensemble_trees =
          q.value("ensemble_trees", cfg.quantifier.ensemble_trees);
      cfg.quantifier.ensemble_depth =
          q.value("ensemble_depth", cfg.quantifier.ensemble_depth);
      cfg.quantifier.centroid_sigma =
          q.value("centroid_sigma", cfg.quantifier.centroid_sigma);
      std::string variant = q.value("centroid_aleatoric", "softmax_entropy");
      require_one_of(variant, {"softmax_entropy", "total_minus_epistemic"},
                     "quantifier.centroid_aleatoric");
      cfg.quantifier.centroid_aleatoric =
          variant == "softmax_entropy"
              ? CentroidAleatoric::softmax_entropy
              : CentroidAleatoric::total_minus_epistemic;
    }
    if (j.contains("robustness")) {
      const auto& r = j.at("robustness");
      check_keys(r, {"epsilon", "n_samples"}, "robustness.");
      cfg.robustness.epsilon = r.value("epsilon", cfg.robustness.epsilon);
      cfg.robustness.n_samples =
          r.value("n_samples", cfg.robustness.n_samples);
    }
    if (j.contains("shapley")) {
      const auto& s = j.at("shapley");
      check_keys(s, {"mode", "n_permutations", "background_rows",
                     "exact_limit", "max_instances"},
                 "shapley.");
      cfg.shapley.mode = s.value("mode", cfg.shapley.mode);
      cfg.shapley.n_permutations =
          s.value("n_permutations", cfg.shapley.n_permutations);
      cfg.shapley.background_rows =
          s.value("background_rows", cfg.shapley.background_rows);
      cfg.shapley.exact_limit = s.value("exact_limit", cfg.shapley.exact_limit);
      cfg.shapley.max_instances =
          s.value("max_instances", cfg.shapley.max_instances);
    }
    if (j.contains("toy")) {
      const auto& t = j.at("toy");
      check_keys(t, {"n_per_class", "noise", "grid", "margin"}, "toy.");
      cfg.toy.n_per_class = t.value("n_per_class", cfg.toy.n_per_class);
      cfg.toy.noise = t.value("noise", cfg.toy.noise);
      cfg.toy.grid = t.value("grid", cfg.toy.grid);
      cfg.toy.margin = t.value("margin", cfg.toy.margin);
    }
    cfg.runs = j.value("runs", cfg.runs);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.train_fraction = j.value("train_fraction", cfg.train_fraction);
    cfg.stratified = j.value("stratified", cfg.stratified);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.reject_quantile = j.value("reject_quantile", cfg.reject_quantile);
    cfg.aleatoric_quantile =
        j.value("aleatoric_quantile", cfg.aleatoric_quantile);
    cfg.calibration_split =
        j.value("calibration_split", cfg.calibration_split);
    cfg.curve_points = j.value("curve_points", cfg.curve_points);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.explanation = j.value("explanation", cfg.explanation);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json datasets = json::array();
  for (const auto& d : cfg.datasets) {
    datasets.push_back(json{{"name", d.name},
                            {"path", d.path},
                            {"label_column", d.label_column}});
  }
  json j{
      {"datasets", std::move(datasets)},
      {"strategies", cfg.strategies},
      {"model",
       {{"type", cfg.model.type},
        {"k", cfg.model.k},
        {"trees", cfg.model.trees},
        {"depth", cfg.model.depth}}},
      {"quantifier",
       {{"eknn_k", cfg.quantifier.eknn_k},
        {"eknn_alpha", cfg.quantifier.eknn_alpha},
        {"ensemble_trees", cfg.quantifier.ensemble_trees},
        {"ensemble_depth", cfg.quantifier.ensemble_depth},
        {"centroid_sigma", cfg.quantifier.centroid_sigma},
        {"centroid_aleatoric",
         cfg.quantifier.centroid_aleatoric ==
                 CentroidAleatoric::softmax_entropy
             ? "softmax_entropy"
             : "total_minus_epistemic"}}},
      {"robustness",
       {{"epsilon", cfg.robustness.epsilon},
        {"n_samples", cfg.robustness.n_samples}}},
      {"shapley",
       {{"mode", cfg.shapley.mode},
        {"n_permutations", cfg.shapley.n_permutations},
        {"background_rows", cfg.shapley.background_rows},
        {"exact_limit", cfg.shapley.exact_limit},
        {"max_instances", cfg.shapley.max_instances}}},
      {"toy",
       {{"n_per_class", cfg.toy.n_per_class},
        {"noise", cfg.toy.noise},
        {"grid", cfg.toy.grid},
        {"margin", cfg.toy.margin}}},
      {"runs", cfg.runs},
      {"seed", cfg.seed},
      {"train_fraction", cfg.train_fraction},
      {"stratified", cfg.stratified},
      {"alpha", cfg.alpha},
      {"reject_quantile", cfg.reject_quantile},
      {"aleatoric_quantile", cfg.aleatoric_quantile},
      {"calibration_split", cfg.calibration_split},
      {"curve_points", cfg.curve_points},
      {"threads", cfg.threads},
      {"explanation", cfg.explanation},
      {"output_dir", cfg.output_dir},
  };
  return j.dump();
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(
                    hash_bytes(config_to_json(cfg))));
  return buf;
}

// ---------------------------------------------------------------------------
// Shared machinery

namespace {

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::unique_ptr<Classifier> make_classifier(const Dataset& train,
                                            const ExperimentConfig& cfg,
                                            std::uint64_t run_seed) {
  if (cfg.model.type == "knn") {
    return std::make_unique<KnnModel>(KnnModel::fit(train, cfg.model.k));
  }
  return std::make_unique<TreeEnsemble>(TreeEnsemble::fit(
      train, cfg.model.trees, cfg.model.depth, mix_seed(run_seed, 6)));
}

std::vector<std::unique_ptr<UncertaintyQuantifier>> fit_strategies(
    const Dataset& train, const ExperimentConfig& cfg,
    std::uint64_t run_seed) {
  std::vector<std::unique_ptr<UncertaintyQuantifier>> out;
  QuantifierParams params = cfg.quantifier;
  params.ensemble_seed = mix_seed(run_seed, 2);
  for (const auto& name : cfg.strategies) {
    out.push_back(fit_quantifier(name, train, params));
  }
  return out;
}

struct Episode {
  Dataset train;
  Dataset test;
  NormParams norm;
  std::unique_ptr<Classifier> classifier;
  std::vector<std::unique_ptr<UncertaintyQuantifier>> quantifiers;
};

Episode make_episode(const Dataset& data, const ExperimentConfig& cfg,
                     std::uint64_t run_seed) {
  SplitSpec spec{cfg.train_fraction, mix_seed(run_seed, 1), cfg.stratified};
  auto [train_raw, test_raw] = train_test_split(data, spec);
  Episode ep;
  ep.norm = fit_minmax(train_raw);
  ep.train = apply_minmax(ep.norm, train_raw);
  ep.test = apply_minmax(ep.norm, test_raw);
  ep.classifier = make_classifier(ep.train, cfg, run_seed);
  ep.quantifiers = fit_strategies(ep.train, cfg, run_seed);
  return ep;
}

void push_uncertainties(const Episode& ep, std::span<const double> x,
                        RunColumns& out) {
  for (std::size_t s = 0; s < ep.quantifiers.size(); ++s) {
    auto u = ep.quantifiers[s]->evaluate(x);
    out.strategies[s].aleatoric.push_back(u.aleatoric);
    out.strategies[s].epistemic.push_back(u.epistemic);
  }
}

RunColumns empty_columns(const ExperimentConfig& cfg) {
  RunColumns out;
  out.strategies.resize(cfg.strategies.size());
  for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
    out.strategies[s].strategy = cfg.strategies[s];
  }
  return out;
}

}  // namespace

std::uint64_t run_seed_for(const ExperimentConfig& cfg,
                           const std::string& dataset_name, std::size_t run) {
  return mix_seed(mix_seed(cfg.seed, hash_bytes(dataset_name)), run);
}

RunColumns measure_cf_run(const Dataset& data, const ExperimentConfig& cfg,
                          std::uint64_t run_seed) {
  Episode ep = make_episode(data, cfg, run_seed);
  RunColumns out = empty_columns(cfg);
  for (std::size_t r = 0; r < ep.test.size(); ++r) {
    auto x = ep.test.features.row(r);
    int pred = ep.classifier->predict(x);
    auto cf = counterfactual_nn(ep.train, x, pred);
    out.value.push_back(cf_dissimilarity(x, cf));
    push_uncertainties(ep, x, out);
  }
  return out;
}

RunColumns measure_shap_run(const Dataset& data, const ExperimentConfig& cfg,
                            std::uint64_t run_seed) {
  Episode ep = make_episode(data, cfg, run_seed);
  std::size_t q = ep.train.num_features();

  // Background sample for coalition values: a uniform subsample of the
  // training split (or all of it when it is small enough).
  std::size_t n_bg = cfg.shapley.background_rows == 0
                         ? ep.train.size()
                         : std::min(cfg.shapley.background_rows,
                                    ep.train.size());
  Rng bg_rng(mix_seed(run_seed, 3));
  auto bg_rows = bg_rng.sample_without_replacement(n_bg, ep.train.size());
  std::sort(bg_rows.begin(), bg_rows.end());
  Matrix background(n_bg, q);
  for (std::size_t i = 0; i < n_bg; ++i) {
    auto src = ep.train.features.row(bg_rows[i]);
    std::copy(src.begin(), src.end(), background.row(i).begin());
  }

  // Instances to explain: everything, or a uniform cap.
  std::vector<std::size_t> chosen(ep.test.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
  if (cfg.shapley.max_instances > 0 &&
      cfg.shapley.max_instances < chosen.size()) {
    Rng pick(mix_seed(run_seed, 7));
    chosen = pick.sample_without_replacement(cfg.shapley.max_instances,
                                             ep.test.size());
    std::sort(chosen.begin(), chosen.end());
  }

  bool exact = cfg.shapley.mode == "exact" ||
               (cfg.shapley.mode == "auto" && q <= cfg.shapley.exact_limit);
  ScoreFn fn = score_fn(*ep.classifier);

  RunColumns out = empty_columns(cfg);
  for (std::size_t idx : chosen) {
    auto x = ep.test.features.row(idx);
    // One fixed permutation seed per instance: the perturbed evaluations
    // inside the Lipschitz probe share the sampling plan with the base
    // point, a paired-comparison setup that keeps estimator noise out of
    // the difference. Without it the sampling error swamps the geometric
    // signal at any tractable permutation budget on the wider datasets.
    std::uint64_t perm_seed = mix_seed(mix_seed(run_seed, 4), idx);
    Explainer phi = [&](std::span<const double> z) {
      int target = ep.classifier->predict(z);
      if (exact) {
        return shapley_exact(fn, background, z, target).values;
      }
      return shapley_sampled(*ep.classifier, background, z, target,
                             cfg.shapley.n_permutations, perm_seed)
          .values;
    };
    auto est = lipschitz_estimate(phi, x, cfg.robustness.epsilon,
                                  cfg.robustness.n_samples,
                                  mix_seed(mix_seed(run_seed, 5), idx));
    out.value.push_back(est.value);
    push_uncertainties(ep, x, out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-dataset aggregation

namespace {

CorrelationReport undefined_report(std::size_t n_pairs, double alpha) {
  CorrelationReport r;
  r.n_pairs = n_pairs;
  r.alpha = alpha;
  r.p_value = 1.0;
  return r;
}

CorrelationReport correlate_or_undefined(std::span<const double> xs,
                                         std::span<const double> ys,
                                         double alpha) {
  if (xs.size() < 4) return undefined_report(xs.size(), alpha);
  return correlate(xs, ys, alpha);
}

CorrelationReport aggregate_or_undefined(
    std::span<const CorrelationReport> runs, std::span<const double> xs,
    std::span<const double> ys, double alpha) {
  bool any = std::any_of(runs.begin(), runs.end(),
                         [](const CorrelationReport& r) { return bool(r.rho); });
  if (!any || xs.size() < 4) {
    auto r = undefined_report(xs.size(), alpha);
    r.n_runs = runs.size();
    return r;
  }
  return aggregate_runs(runs, xs, ys);
}

DatasetOutcome correlate_dataset(const Dataset& data, const std::string& name,
                                 const ExperimentConfig& cfg, bool shap) {
  data.validate();
  DatasetOutcome out;
  out.dataset = name;
  out.runs.resize(cfg.runs);
  parallel_for(cfg.runs, cfg.threads, [&](std::size_t i) {
    std::uint64_t seed = run_seed_for(cfg, name, i);
    out.runs[i] =
        shap ? measure_shap_run(data, cfg, seed) : measure_cf_run(data, cfg, seed);
  });

  for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
    StrategyCorrelation sc;
    sc.strategy = cfg.strategies[s];
    std::vector<CorrelationReport> full_runs, filt_runs;
    std::vector<double> full_x, full_y, filt_x, filt_y;
    for (const auto& run : out.runs) {
      const auto& au = run.strategies[s].aleatoric;
      const auto& eu = run.strategies[s].epistemic;
      full_runs.push_back(correlate_or_undefined(au, run.value, cfg.alpha));
      full_x.insert(full_x.end(), au.begin(), au.end());
      full_y.insert(full_y.end(), run.value.begin(), run.value.end());
      if (!shap) continue;
      // Drop the rejection share: instances at or above the epistemic
      // quantile threshold are the ones the protocol would not explain.
      double threshold = empirical_quantile(eu, cfg.reject_quantile);
      std::vector<double> kx, ky;
      for (std::size_t i = 0; i < eu.size(); ++i) {
        if (eu[i] < threshold) {
          kx.push_back(au[i]);
          ky.push_back(run.value[i]);
        }
      }
      filt_runs.push_back(correlate_or_undefined(kx, ky, cfg.alpha));
      filt_x.insert(filt_x.end(), kx.begin(), kx.end());
      filt_y.insert(filt_y.end(), ky.begin(), ky.end());
    }
    sc.full = aggregate_or_undefined(full_runs, full_x, full_y, cfg.alpha);
    if (shap) {
      sc.filtered =
          aggregate_or_undefined(filt_runs, filt_x, filt_y, cfg.alpha);
    }
    out.strategies.push_back(std::move(sc));
  }
  out.ok = true;
  return out;
}

}  // namespace

DatasetOutcome correlate_cf_dataset(const Dataset& data,
                                    const std::string& name,
                                    const ExperimentConfig& cfg) {
  return correlate_dataset(data, name, cfg, false);
}

DatasetOutcome correlate_shap_dataset(const Dataset& data,
                                      const std::string& name,
                                      const ExperimentConfig& cfg) {
  return correlate_dataset(data, name, cfg, true);
}

// ---------------------------------------------------------------------------
// File emission

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_raw_columns(const fs::path& path, const DatasetOutcome& oc,
                       const char* value_name) {
  auto out = open_out(path);
  out << "run,instance," << value_name;
  for (const auto& sc : oc.runs.empty()
                            ? std::vector<StrategyColumns>{}
                            : oc.runs[0].strategies) {
    out << ',' << sc.strategy << "_aleatoric," << sc.strategy << "_epistemic";
  }
  out << '\n';
  for (std::size_t r = 0; r < oc.runs.size(); ++r) {
    const auto& run = oc.runs[r];
    for (std::size_t i = 0; i < run.value.size(); ++i) {
      out << r << ',' << i << ',' << fmt_double(run.value[i], 9);
      for (const auto& sc : run.strategies) {
        out << ',' << fmt_double(sc.aleatoric[i], 9) << ','
            << fmt_double(sc.epistemic[i], 9);
      }
      out << '\n';
    }
  }
}

std::string report_cells(const CorrelationReport& r) {
  return fmt_optional(r.rho) + "," + fmt_optional(r.rho_pooled) + "," +
         fmt_double(r.p_value, 3) + "," + (r.significant ? "yes" : "no") +
         "," + std::to_string(r.n_runs) + "," + std::to_string(r.n_pairs);
}

const char* kReportHeader =
    "rho_mean,rho_pooled,p_value,significant,n_runs,n_pairs";

void log_outcome(std::ostream& log, const DatasetOutcome& oc, bool shap) {
  if (!oc.ok) {
    log << "  " << oc.dataset << ": FAILED: " << oc.error << '\n';
    return;
  }
  for (const auto& sc : oc.strategies) {
    log << "  " << oc.dataset << " [" << sc.strategy
        << "] rho=" << fmt_optional(sc.full.rho)
        << " p=" << fmt_double(sc.full.p_value, 3);
    if (shap && sc.filtered) {
      log << " | filtered rho=" << fmt_optional(sc.filtered->rho)
          << " p=" << fmt_double(sc.filtered->p_value, 3);
    }
    log << '\n';
  }
}

}  // namespace

int run_correlate_cf(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.datasets.empty()) {
    throw ConfigError("correlate-cf: config lists no datasets");
  }
  fs::path out_dir(cfg.output_dir);
  std::string hash = config_hash(cfg);
  log << "correlate-cf: " << cfg.datasets.size() << " dataset(s), "
      << cfg.runs << " run(s), config " << hash << '\n';

  int failures = 0;
  std::vector<DatasetOutcome> outcomes;
  for (const auto& spec : cfg.datasets) {
    DatasetOutcome oc;
    try {
      Dataset data = load_csv(spec.path, spec.label_column);
      oc = correlate_cf_dataset(data, spec.name, cfg);
    } catch (const std::exception& e) {
      oc = DatasetOutcome{};
      oc.dataset = spec.name;
      oc.error = e.what();
    }
    log_outcome(log, oc, false);
    if (oc.ok) {
      write_raw_columns(out_dir / "raw" / ("cf_" + oc.dataset + ".csv"), oc,
                        "dissimilarity");
    } else {
      ++failures;
    }
    outcomes.push_back(std::move(oc));
  }

  auto csv = open_out(out_dir / "tables" / "correlate_cf.csv");
  csv << "dataset,strategy," << kReportHeader << ",status,config_hash\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& oc : outcomes) {
    if (!oc.ok) {
      for (const auto& s : cfg.strategies) {
        csv << oc.dataset << ',' << s << ",,,,,,," << csv_escape(oc.error)
            << ',' << hash << '\n';
        rows.push_back({oc.dataset, s, "-", "-", "-", "error"});
      }
      continue;
    }
    for (const auto& sc : oc.strategies) {
      csv << oc.dataset << ',' << sc.strategy << ','
          << report_cells(sc.full) << ",ok," << hash << '\n';
      rows.push_back({oc.dataset, sc.strategy, fmt_optional(sc.full.rho),
                      fmt_double(sc.full.p_value, 3),
                      sc.full.significant ? "yes" : "no", "ok"});
    }
  }
  auto txt = open_out(out_dir / "tables" / "correlate_cf.txt");
  txt << "Aleatoric uncertainty vs counterfactual dissimilarity (Spearman)\n"
      << "config " << hash << ", " << cfg.runs << " runs, alpha "
      << fmt_double(cfg.alpha, 3) << "\n\n"
      << format_table({"dataset", "strategy", "rho", "p", "significant",
                       "status"},
                      rows);
  return failures;
}

int run_correlate_shap(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.datasets.empty()) {
    throw ConfigError("correlate-shap: config lists no datasets");
  }
  fs::path out_dir(cfg.output_dir);
  std::string hash = config_hash(cfg);
  log << "correlate-shap: " << cfg.datasets.size() << " dataset(s), "
      << cfg.runs << " run(s), config " << hash << '\n';

  int failures = 0;
  std::vector<DatasetOutcome> outcomes;
  for (const auto& spec : cfg.datasets) {
    DatasetOutcome oc;
    try {
      Dataset data = load_csv(spec.path, spec.label_column);
      oc = correlate_shap_dataset(data, spec.name, cfg);
    } catch (const std::exception& e) {
      oc = DatasetOutcome{};
      oc.dataset = spec.name;
      oc.error = e.what();
    }
    log_outcome(log, oc, true);
    if (oc.ok) {
      write_raw_columns(out_dir / "raw" / ("shap_" + oc.dataset + ".csv"), oc,
                        "instability");
    } else {
      ++failures;
    }
    outcomes.push_back(std::move(oc));
  }

  auto csv = open_out(out_dir / "tables" / "correlate_shap.csv");
  csv << "dataset,strategy,subset," << kReportHeader
      << ",status,config_hash\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& oc : outcomes) {
    if (!oc.ok) {
      for (const auto& s : cfg.strategies) {
        csv << oc.dataset << ',' << s << ",,,,,,,," << csv_escape(oc.error)
            << ',' << hash << '\n';
        rows.push_back({oc.dataset, s, "-", "-", "-", "-", "error"});
      }
      continue;
    }
    for (const auto& sc : oc.strategies) {
      csv << oc.dataset << ',' << sc.strategy << ",full,"
          << report_cells(sc.full) << ",ok," << hash << '\n';
      if (sc.filtered) {
        csv << oc.dataset << ',' << sc.strategy << ",filtered,"
            << report_cells(*sc.filtered) << ",ok," << hash << '\n';
      }
      rows.push_back(
          {oc.dataset, sc.strategy, fmt_optional(sc.full.rho),
           fmt_double(sc.full.p_value, 3),
           sc.filtered ? fmt_optional(sc.filtered->rho) : "-",
           sc.filtered ? fmt_double(sc.filtered->p_value, 3) : "-", "ok"});
    }
  }
  auto txt = open_out(out_dir / "tables" / "correlate_shap.txt");
  txt << "Aleatoric uncertainty vs feature-importance instability "
         "(Spearman)\n"
      << "config " << hash << ", " << cfg.runs
      << " runs; 'filtered' drops the top "
      << fmt_double(100.0 * (1.0 - cfg.reject_quantile), 3)
      << "% epistemic share per run\n\n"
      << format_table({"dataset", "strategy", "rho_full", "p_full",
                       "rho_filtered", "p_filtered", "status"},
                      rows);
  return failures;
}

// ---------------------------------------------------------------------------
// reject-demo

namespace {

json uncertainty_json(const UncertaintyEstimate& u) {
  return json{{"strategy", std::string(to_string(u.strategy))},
              {"aleatoric", u.aleatoric},
              {"epistemic", u.epistemic},
              {"total", u.total}};
}

// The two coordinates a 2-D scatter projection should use, given what is
// known about the highlighted instance.
std::pair<std::size_t, std::size_t> projection_axes(
    const Dataset& train, const RoutedExplanation& routed,
    std::span<const double> x) {
  std::size_t q = train.num_features();
  if (q <= 2) return {0, std::min<std::size_t>(1, q - 1)};
  std::vector<double> score(q, 0.0);
  if (const auto* iv = std::get_if<ImportanceVector>(&routed.payload)) {
    for (std::size_t i = 0; i < q; ++i) score[i] = std::abs(iv->values[i]);
  } else if (const auto* cf = std::get_if<Counterfactual>(&routed.payload)) {
    for (std::size_t i = 0; i < q; ++i) {
      score[i] = std::abs(x[i] - cf->instance[i]);
    }
  } else {
    // Rejection carries no explanation; fall back to training variance.
    for (std::size_t i = 0; i < q; ++i) {
      double mean = 0.0;
      for (std::size_t r = 0; r < train.size(); ++r) {
        mean += train.features(r, i);
      }
      mean /= static_cast<double>(train.size());
      for (std::size_t r = 0; r < train.size(); ++r) {
        double d = train.features(r, i) - mean;
        score[i] += d * d;
      }
    }
  }
  std::size_t a = 0, b = 1;
  for (std::size_t i = 1; i < q; ++i) {
    if (score[i] > score[a]) {
      b = a;
      a = i;
    } else if (i != a && score[i] > score[b]) {
      b = i;
    }
  }
  if (a > b) std::swap(a, b);
  return {a, b};
}

}  // namespace

int run_reject_demo(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.datasets.empty()) {
    throw ConfigError("reject-demo: config lists no datasets");
  }
  fs::path out_dir(cfg.output_dir);
  std::string hash = config_hash(cfg);
  log << "reject-demo: " << cfg.datasets.size() << " dataset(s), config "
      << hash << '\n';

  int failures = 0;
  auto summary = open_out(out_dir / "tables" / "reject_demo.csv");
  summary << "dataset,strategy,n_test,eu_threshold,rejected,rejected_"
             "fraction,status,config_hash\n";

  for (const auto& spec : cfg.datasets) {
    try {
      Dataset data = load_csv(spec.path, spec.label_column);
      std::uint64_t run_seed = run_seed_for(cfg, spec.name, 0);
      Episode ep = make_episode(data, cfg, run_seed);

      std::vector<std::vector<UncertaintyEstimate>> per_strategy(
          ep.quantifiers.size());
      for (std::size_t s = 0; s < ep.quantifiers.size(); ++s) {
        per_strategy[s].reserve(ep.test.size());
        for (std::size_t r = 0; r < ep.test.size(); ++r) {
          per_strategy[s].push_back(
              ep.quantifiers[s]->evaluate(ep.test.features.row(r)));
        }
      }

      // Raw per-instance export and one rejection curve per strategy.
      {
        auto raw = open_out(out_dir / "raw" /
                            ("reject_" + spec.name + ".csv"));
        raw << "instance,strategy,aleatoric,epistemic,total\n";
        for (std::size_t r = 0; r < ep.test.size(); ++r) {
          for (std::size_t s = 0; s < per_strategy.size(); ++s) {
            const auto& u = per_strategy[s][r];
            raw << r << ',' << cfg.strategies[s] << ','
                << fmt_double(u.aleatoric, 9) << ','
                << fmt_double(u.epistemic, 9) << ','
                << fmt_double(u.total, 9) << '\n';
          }
        }
      }
      for (std::size_t s = 0; s < per_strategy.size(); ++s) {
        auto curve = rejection_curve(per_strategy[s], cfg.curve_points);
        auto out = open_out(out_dir / "curves" /
                            ("reject_" + spec.name + "_" +
                             cfg.strategies[s] + ".csv"));
        out << "threshold,rejected_fraction\n";
        for (auto [t, f] : curve) {
          out << fmt_double(t, 9) << ',' << fmt_double(f, 9) << '\n';
        }
        std::vector<double> eu(per_strategy[s].size());
        for (std::size_t i = 0; i < eu.size(); ++i) {
          eu[i] = per_strategy[s][i].epistemic;
        }
        double threshold = empirical_quantile(eu, cfg.reject_quantile);
        auto rejected = std::count_if(eu.begin(), eu.end(), [&](double e) {
          return e >= threshold;
        });
        summary << spec.name << ',' << cfg.strategies[s] << ',' << eu.size()
                << ',' << fmt_double(threshold, 9) << ',' << rejected << ','
                << fmt_double(static_cast<double>(rejected) /
                                  static_cast<double>(eu.size()),
                              9)
                << ",ok," << hash << '\n';
      }

      // Dossier for the most epistemic-uncertain test instance under the
      // first strategy.
      const auto& lead = per_strategy[0];
      std::size_t star = most_uncertain(lead, UncertaintyKind::epistemic);
      auto x = ep.test.features.row(star);
      int pred = ep.classifier->predict(x);

      RoutingPolicy policy;
      policy.epistemic = ThresholdSpec::at_quantile(cfg.reject_quantile);
      policy.aleatoric = ThresholdSpec::at_quantile(cfg.aleatoric_quantile);
      policy = calibrate(policy, lead);
      ExplanationBuilders builders{
          [&] { return counterfactual_nn(ep.train, x, pred); },
          [&] {
            bool exact = cfg.shapley.mode == "exact" ||
                         (cfg.shapley.mode == "auto" &&
                          ep.train.num_features() <= cfg.shapley.exact_limit);
            ScoreFn fn = score_fn(*ep.classifier);
            if (exact) {
              return shapley_exact(fn, ep.train.features, x, pred);
            }
            return shapley_sampled(*ep.classifier, ep.train.features, x, pred,
                                   cfg.shapley.n_permutations,
                                   mix_seed(run_seed, 8));
          }};

      RoutedExplanation routed;
      if (cfg.explanation == "counterfactual") {
        routed.verdict = Verdict::counterfactual;
        routed.uncertainty = lead[star];
        routed.payload = builders.counterfactual();
      } else if (cfg.explanation == "importance") {
        routed.verdict = Verdict::feature_importance;
        routed.uncertainty = lead[star];
        routed.payload = builders.feature_importance();
      } else {
        routed = route(policy, lead[star], builders);
      }

      json dossier{
          {"dataset", spec.name},
          {"config_hash", hash},
          {"instance", star},
          {"features_normalized",
           std::vector<double>(x.begin(), x.end())},
          {"features",
           invert_minmax(ep.norm, x)},
          {"predicted_class", pred},
          {"predicted_name", data.class_names[pred]},
          {"uncertainty", uncertainty_json(lead[star])},
          {"verdict", std::string(to_string(routed.verdict))},
          {"epistemic_threshold", *policy.epistemic_threshold},
          {"aleatoric_threshold", *policy.aleatoric_threshold},
      };
      if (const auto* rej = std::get_if<RejectionRecord>(&routed.payload)) {
        dossier["rejection"] = json{{"epistemic", rej->epistemic},
                                    {"threshold", rej->threshold},
                                    {"reason", rej->reason}};
      } else if (const auto* cf = std::get_if<Counterfactual>(&routed.payload)) {
        dossier["counterfactual"] =
            json{{"instance_normalized", cf->instance},
                 {"instance", invert_minmax(ep.norm, cf->instance)},
                 {"source_row", cf->source_row},
                 {"label", cf->label},
                 {"label_name", data.class_names[cf->label]},
                 {"distance", cf->distance}};
      } else if (const auto* iv =
                     std::get_if<ImportanceVector>(&routed.payload)) {
        json ranked = json::array();
        for (std::size_t i = 0; i < iv->values.size(); ++i) {
          ranked.push_back(json{{"feature", data.feature_names[i]},
                                {"value", iv->values[i]}});
        }
        dossier["feature_importance"] = std::move(ranked);
      }
      {
        auto out = open_out(out_dir / "dossiers" /
                            ("reject_" + spec.name + ".json"));
        out << dossier.dump(2) << '\n';
      }

      // 2-D scatter around the highlighted instance.
      auto [fa, fb] = projection_axes(ep.train, routed, x);
      {
        auto out = open_out(out_dir / "dossiers" /
                            ("reject_" + spec.name + "_scatter.csv"));
        out << data.feature_names[fa] << ',' << data.feature_names[fb]
            << ",label,kind\n";
        for (std::size_t r = 0; r < ep.train.size(); ++r) {
          out << fmt_double(ep.train.features(r, fa), 9) << ','
              << fmt_double(ep.train.features(r, fb), 9) << ','
              << data.class_names[ep.train.labels[r]] << ",train\n";
        }
        out << fmt_double(x[fa], 9) << ',' << fmt_double(x[fb], 9) << ','
            << data.class_names[pred] << ",instance\n";
        if (const auto* cf = std::get_if<Counterfactual>(&routed.payload)) {
          out << fmt_double(cf->instance[fa], 9) << ','
              << fmt_double(cf->instance[fb], 9) << ','
              << data.class_names[cf->label] << ",counterfactual\n";
        }
      }
      log << "  " << spec.name << ": instance " << star << " verdict "
          << to_string(routed.verdict) << '\n';
    } catch (const std::exception& e) {
      log << "  " << spec.name << ": FAILED: " << e.what() << '\n';
      summary << spec.name << ",,,,,," << csv_escape(e.what()) << ',' << hash
              << '\n';
      ++failures;
    }
  }
  return failures;
}

// ---------------------------------------------------------------------------
// route

int run_route(const ExperimentConfig& cfg, const fs::path& instances_csv,
              const std::optional<fs::path>& save_model_path,
              const std::optional<fs::path>& load_model_path,
              std::ostream& log) {
  if (cfg.datasets.empty()) {
    throw ConfigError("route: config lists no reference dataset");
  }
  const auto& spec = cfg.datasets.front();
  std::string hash = config_hash(cfg);
  Dataset data = load_csv(spec.path, spec.label_column);
  std::uint64_t run_seed = run_seed_for(cfg, spec.name, 0);
  SplitSpec split{cfg.train_fraction, mix_seed(run_seed, 1), cfg.stratified};
  auto [train_raw, test_raw] = train_test_split(data, split);
  NormParams norm = fit_minmax(train_raw);
  Dataset train = apply_minmax(norm, train_raw);
  Dataset test = apply_minmax(norm, test_raw);

  std::unique_ptr<Classifier> classifier;
  if (load_model_path) {
    classifier = load_classifier(*load_model_path);
    if (classifier->num_features() != train.num_features()) {
      throw ConfigError("route: loaded model expects " +
                        std::to_string(classifier->num_features()) +
                        " features, dataset has " +
                        std::to_string(train.num_features()));
    }
    log << "route: loaded model from " << load_model_path->string() << '\n';
  } else {
    classifier = make_classifier(train, cfg, run_seed);
  }
  if (save_model_path) {
    save_classifier(*save_model_path, *classifier);
    log << "route: saved model to " << save_model_path->string() << '\n';
  }

  QuantifierParams qp = cfg.quantifier;
  qp.ensemble_seed = mix_seed(run_seed, 2);
  auto quantifier = fit_quantifier(cfg.strategies.front(), train, qp);

  // Thresholds come from the held-out (or training) distribution, never
  // from the instances being routed.
  const Dataset& calib = cfg.calibration_split == "train" ? train : test;
  std::vector<UncertaintyEstimate> calibration;
  calibration.reserve(calib.size());
  for (std::size_t r = 0; r < calib.size(); ++r) {
    calibration.push_back(quantifier->evaluate(calib.features.row(r)));
  }
  RoutingPolicy policy;
  policy.epistemic = ThresholdSpec::at_quantile(cfg.reject_quantile);
  policy.aleatoric = ThresholdSpec::at_quantile(cfg.aleatoric_quantile);
  policy = calibrate(policy, calibration);
  log << "route: thresholds epistemic>="
      << fmt_double(*policy.epistemic_threshold, 6) << " aleatoric>="
      << fmt_double(*policy.aleatoric_threshold, 6) << " ("
      << cfg.calibration_split << " split, n=" << policy.calibration_size
      << ")\n";

  Matrix instances = load_feature_csv(instances_csv, spec.label_column);
  if (instances.cols() != train.num_features()) {
    throw ConfigError("route: instances have " +
                      std::to_string(instances.cols()) +
                      " features, dataset has " +
                      std::to_string(train.num_features()));
  }

  fs::path out_path = fs::path(cfg.output_dir) / "routes.jsonl";
  auto out = open_out(out_path);
  out << json{{"config_hash", hash},
              {"dataset", spec.name},
              {"strategy", cfg.strategies.front()},
              {"epistemic_threshold", *policy.epistemic_threshold},
              {"aleatoric_threshold", *policy.aleatoric_threshold},
              {"calibration_split", cfg.calibration_split},
              {"calibration_size", policy.calibration_size}}
          .dump()
      << '\n';

  int failures = 0;
  std::size_t verdict_counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < instances.rows(); ++i) {
    try {
      auto x_norm = apply_minmax(norm, instances.row(i));
      std::span<const double> x(x_norm);
      int pred = classifier->predict(x);
      auto u = quantifier->evaluate(x);
      std::size_t call = 0;
      ExplanationBuilders builders{
          [&] { return counterfactual_nn(train, x, pred); },
          [&] {
            bool exact =
                cfg.shapley.mode == "exact" ||
                (cfg.shapley.mode == "auto" &&
                 train.num_features() <= cfg.shapley.exact_limit);
            ScoreFn fn = score_fn(*classifier);
            if (exact) return shapley_exact(fn, train.features, x, pred);
            return shapley_sampled(*classifier, train.features, x, pred,
                                   cfg.shapley.n_permutations,
                                   mix_seed(mix_seed(run_seed, 9),
                                            i * 64 + call++));
          }};
      auto routed = route(policy, u, builders);
      ++verdict_counts[static_cast<int>(routed.verdict)];
      out << routed_record_json(i, x, pred, data.class_names[pred], routed)
          << '\n';
    } catch (const std::exception& e) {
      ++failures;
      out << json{{"instance", i}, {"error", e.what()}}.dump() << '\n';
    }
  }
  log << "route: " << instances.rows() << " instance(s) -> "
      << verdict_counts[0] << " rejected, " << verdict_counts[1]
      << " counterfactual, " << verdict_counts[2]
      << " feature_importance; records in " << out_path.string() << '\n';
  return failures;
}

// ---------------------------------------------------------------------------
// toy landscape

int run_toy_landscape(const ExperimentConfig& cfg, std::ostream& log) {
  fs::path out_dir(cfg.output_dir);
  std::string hash = config_hash(cfg);
  Dataset moons =
      make_toy_moons(cfg.toy.n_per_class, cfg.toy.noise, cfg.seed);
  NormParams norm = fit_minmax(moons);
  Dataset train = apply_minmax(norm, moons);

  {
    auto out = open_out(out_dir / "curves" / "toy_points.csv");
    out << "x,y,label\n";
    for (std::size_t r = 0; r < train.size(); ++r) {
      out << fmt_double(train.features(r, 0), 9) << ','
          << fmt_double(train.features(r, 1), 9) << ','
          << train.class_names[train.labels[r]] << '\n';
    }
  }

  auto summary = open_out(out_dir / "tables" / "toy_landscape.csv");
  summary << "strategy,grid,margin,n_inside,n_outside,mean_eu_inside,"
             "mean_eu_outside,eu_ratio,config_hash\n";

  int failures = 0;
  QuantifierParams qp = cfg.quantifier;
  qp.ensemble_seed = mix_seed(cfg.seed, 2);
  for (const auto& name : cfg.strategies) {
    try {
      auto quantifier = fit_quantifier(name, train, qp);
      double lo = -cfg.toy.margin, hi = 1.0 + cfg.toy.margin;
      std::size_t n = cfg.toy.grid;
      auto out = open_out(out_dir / "curves" / ("toy_" + name + ".csv"));
      out << "x,y,aleatoric,epistemic,total\n";
      double in_sum = 0.0, out_sum = 0.0;
      std::size_t in_n = 0, out_n = 0;
      std::vector<double> point(2);
      for (std::size_t iy = 0; iy < n; ++iy) {
        for (std::size_t ix = 0; ix < n; ++ix) {
          point[0] = lo + (hi - lo) * static_cast<double>(ix) /
                              static_cast<double>(n - 1);
          point[1] = lo + (hi - lo) * static_cast<double>(iy) /
                              static_cast<double>(n - 1);
          auto u = quantifier->evaluate(point);
          out << fmt_double(point[0], 9) << ',' << fmt_double(point[1], 9)
              << ',' << fmt_double(u.aleatoric, 9) << ','
              << fmt_double(u.epistemic, 9) << ',' << fmt_double(u.total, 9)
              << '\n';
          bool inside = point[0] >= 0.0 && point[0] <= 1.0 &&
                        point[1] >= 0.0 && point[1] <= 1.0;
          (inside ? in_sum : out_sum) += u.epistemic;
          ++(inside ? in_n : out_n);
        }
      }
      double in_mean = in_sum / static_cast<double>(in_n);
      double out_mean = out_sum / static_cast<double>(out_n);
      summary << name << ',' << n << ',' << fmt_double(cfg.toy.margin, 9)
              << ',' << in_n << ',' << out_n << ','
              << fmt_double(in_mean, 9) << ',' << fmt_double(out_mean, 9)
              << ',' << fmt_double(out_mean / in_mean, 6) << ',' << hash
              << '\n';
      log << "  toy [" << name
          << "] mean epistemic inside=" << fmt_double(in_mean, 6)
          << " outside=" << fmt_double(out_mean, 6) << '\n';
    } catch (const std::exception& e) {
      log << "  toy [" << name << "] FAILED: " << e.what() << '\n';
      summary << name << ",,,,,,,," << csv_escape(e.what()) << '\n';
      ++failures;
    }
  }
  return failures;
}

}  // namespace uxai
