#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>

#include "uxai/classifiers.hpp"
#include "uxai/evidence.hpp"
#include "uxai/protocol.hpp"

namespace uxai {

// Malformed or mismatched model files.
class SerializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fitted models persist as schema-tagged JSON ("uxai.model/1"). Numeric
// state round-trips losslessly, so a reloaded model gives bit-identical
// predictions.
void save_model(const std::filesystem::path& path, const KnnModel& m);
void save_model(const std::filesystem::path& path, const TreeEnsemble& m);
void save_model(const std::filesystem::path& path, const EknnModel& m);
void save_classifier(const std::filesystem::path& path, const Classifier& m);

KnnModel load_knn(const std::filesystem::path& path);
TreeEnsemble load_forest(const std::filesystem::path& path);
EknnModel load_eknn(const std::filesystem::path& path);

// Loads whichever classifier type the file declares (knn or forest).
std::unique_ptr<Classifier> load_classifier(const std::filesystem::path& path);

// One JSONL record for a routed instance: id, features, prediction, the
// uncertainty triple, the verdict, and the branch-specific payload.
std::string routed_record_json(std::size_t instance_id,
                               std::span<const double> features,
                               int predicted_class,
                               const std::string& predicted_name,
                               const RoutedExplanation& routed);

}  // namespace uxai
