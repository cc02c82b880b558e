#include "uxai/serialization.hpp"

#include <fstream>

#include <json.hpp>

namespace uxai {

using nlohmann::json;

namespace {

constexpr const char* kSchema = "uxai.model/1";

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const json& j) {
  std::size_t rows = j.at("rows"), cols = j.at("cols");
  std::vector<double> data = j.at("data");
  if (data.size() != rows * cols) {
    throw SerializationError("matrix data length does not match shape");
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = data[r * cols + c];
  }
  return m;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) {
    throw SerializationError("cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
}

json read_model_json(const std::filesystem::path& path,
                     const std::string& expected_type) {
  std::ifstream in(path);
  if (!in) throw SerializationError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SerializationError(path.string() + " is not valid JSON: " + e.what());
  }
  std::string schema = j.value("schema", "");
  if (schema != kSchema) {
    throw SerializationError(path.string() + ": unsupported schema '" +
                             schema + "' (expected " + kSchema + ")");
  }
  std::string type = j.value("type", "");
  if (!expected_type.empty() && type != expected_type) {
    throw SerializationError(path.string() + ": model type is '" + type +
                             "', expected '" + expected_type + "'");
  }
  return j;
}

// Rebuilds a minimal Dataset so the fit() constructors can be reused.
Dataset dataset_from_parts(Matrix features, std::vector<int> labels,
                           std::size_t num_classes) {
  Dataset d;
  d.features = std::move(features);
  d.labels = std::move(labels);
  d.feature_names.resize(d.features.cols());
  for (std::size_t i = 0; i < d.feature_names.size(); ++i) {
    d.feature_names[i] = "f" + std::to_string(i);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    d.class_names.push_back("c" + std::to_string(c));
  }
  return d;
}

}  // namespace

void save_model(const std::filesystem::path& path, const KnnModel& m) {
  write_json(path, json{{"schema", kSchema},
                        {"type", "knn"},
                        {"k", m.k()},
                        {"num_classes", m.num_classes()},
                        {"features", matrix_to_json(m.train_features())},
                        {"labels", m.train_labels()}});
}

KnnModel load_knn(const std::filesystem::path& path) {
  json j = read_model_json(path, "knn");
  auto d = dataset_from_parts(matrix_from_json(j.at("features")),
                              j.at("labels").get<std::vector<int>>(),
                              j.at("num_classes"));
  return KnnModel::fit(d, j.at("k"));
}

void save_model(const std::filesystem::path& path, const TreeEnsemble& m) {
  json trees = json::array();
  for (const auto& tree : m.trees()) {
    json nodes = json::array();
    for (const auto& n : tree.nodes()) {
      nodes.push_back(json{{"feature", n.feature},
                           {"threshold", n.threshold},
                           {"left", n.left},
                           {"right", n.right},
                           {"distribution", n.distribution}});
    }
    trees.push_back(std::move(nodes));
  }
  write_json(path, json{{"schema", kSchema},
                        {"type", "forest"},
                        {"num_classes", m.num_classes()},
                        {"num_features", m.num_features()},
                        {"max_depth", m.max_depth()},
                        {"tree_seeds", m.tree_seeds()},
                        {"trees", std::move(trees)}});
}

TreeEnsemble load_forest(const std::filesystem::path& path) {
  json j = read_model_json(path, "forest");
  std::vector<DecisionTree> trees;
  for (const auto& tj : j.at("trees")) {
    DecisionTree t;
    for (const auto& nj : tj) {
      DecisionTree::Node n;
      n.feature = nj.at("feature");
      n.threshold = nj.at("threshold");
      n.left = nj.at("left");
      n.right = nj.at("right");
      n.distribution = nj.at("distribution").get<std::vector<double>>();
      t.nodes().push_back(std::move(n));
    }
    trees.push_back(std::move(t));
  }
  return TreeEnsemble::from_parts(
      std::move(trees), j.at("tree_seeds").get<std::vector<std::uint64_t>>(),
      j.at("num_classes"), j.at("num_features"), j.at("max_depth"));
}

void save_model(const std::filesystem::path& path, const EknnModel& m) {
  write_json(path, json{{"schema", kSchema},
                        {"type", "eknn"},
                        {"k", m.k},
                        {"alpha", m.alpha},
                        {"num_classes", m.num_classes},
                        {"gamma", m.gamma},
                        {"features", matrix_to_json(m.train_features)},
                        {"labels", m.train_labels}});
}

EknnModel load_eknn(const std::filesystem::path& path) {
  json j = read_model_json(path, "eknn");
  EknnModel m;
  m.train_features = matrix_from_json(j.at("features"));
  m.train_labels = j.at("labels").get<std::vector<int>>();
  m.num_classes = j.at("num_classes");
  m.k = j.at("k");
  m.alpha = j.at("alpha");
  m.gamma = j.at("gamma").get<std::vector<double>>();
  if (m.gamma.size() != m.num_classes) {
    throw SerializationError(path.string() + ": gamma length mismatch");
  }
  return m;
}

void save_classifier(const std::filesystem::path& path, const Classifier& m) {
  if (auto* knn = dynamic_cast<const KnnModel*>(&m)) {
    save_model(path, *knn);
  } else if (auto* forest = dynamic_cast<const TreeEnsemble*>(&m)) {
    save_model(path, *forest);
  } else {
    throw SerializationError("save_classifier: unsupported model type");
  }
}

std::unique_ptr<Classifier> load_classifier(
    const std::filesystem::path& path) {
  json j = read_model_json(path, "");
  std::string type = j.value("type", "");
  if (type == "knn") {
    return std::make_unique<KnnModel>(load_knn(path));
  }
  if (type == "forest") {
    return std::make_unique<TreeEnsemble>(load_forest(path));
  }
  throw SerializationError(path.string() + ": '" + type +
                           "' is not a classifier model");
}

std::string routed_record_json(std::size_t instance_id,
                               std::span<const double> features,
                               int predicted_class,
                               const std::string& predicted_name,
                               const RoutedExplanation& routed) {
  json rec{{"instance", instance_id},
           {"features", std::vector<double>(features.begin(), features.end())},
           {"predicted_class", predicted_class},
           {"predicted_name", predicted_name},
           {"strategy", std::string(to_string(routed.uncertainty.strategy))},
           {"aleatoric", routed.uncertainty.aleatoric},
           {"epistemic", routed.uncertainty.epistemic},
           {"total", routed.uncertainty.total},
           {"verdict", std::string(to_string(routed.verdict))}};
  if (const auto* rej = std::get_if<RejectionRecord>(&routed.payload)) {
    rec["rejection"] = json{{"epistemic", rej->epistemic},
                            {"threshold", rej->threshold},
                            {"reason", rej->reason}};
  } else if (const auto* cf = std::get_if<Counterfactual>(&routed.payload)) {
    rec["counterfactual"] = json{{"instance", cf->instance},
                                 {"source_row", cf->source_row},
                                 {"label", cf->label},
                                 {"distance", cf->distance}};
  } else if (const auto* iv = std::get_if<ImportanceVector>(&routed.payload)) {
    rec["feature_importance"] =
        json{{"values", iv->values},
             {"target_class", iv->target_class},
             {"estimator", iv->estimator == ShapleyEstimator::exact
                               ? "exact"
                               : "permutation_sampled"},
             {"n_permutations", iv->n_permutations}};
  }
  return rec.dump();
}

}  // namespace uxai
