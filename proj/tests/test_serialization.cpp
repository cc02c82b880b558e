#include <doctest.h>

#include <filesystem>
#include <json.hpp>

#include "support.hpp"
#include "uxai/serialization.hpp"
#include "uxai/uncertainty.hpp"

using namespace uxai;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<double>> probe_grid(std::size_t q) {
  std::vector<std::vector<double>> probes;
  Rng rng(2024);
  for (int i = 0; i < 12; ++i) {
    std::vector<double> x(q);
    for (auto& v : x) v = rng.uniform() * 2.0 - 0.5;
    probes.push_back(std::move(x));
  }
  return probes;
}

}  // namespace

TEST_CASE("knn model round-trips losslessly") {
  auto dir = testsupport::test_dir("serialize_knn");
  auto train = testsupport::make_blobs(40, 5, 3, 0.4, 11);
  auto model = KnnModel::fit(train, 7);

  auto path = dir / "knn.json";
  save_model(path, model);
  auto back = load_knn(path);

  CHECK(back.k() == 7);
  CHECK(back.num_classes() == model.num_classes());
  CHECK(back.num_features() == 5);
  CHECK(back.train_labels() == model.train_labels());
  for (const auto& x : probe_grid(5)) {
    CHECK(back.predict_proba(x) == model.predict_proba(x));
  }

  SUBCASE("save after load is byte-identical") {
    auto again = dir / "knn_again.json";
    save_model(again, back);
    CHECK(testsupport::read_file(again) == testsupport::read_file(path));
  }
}

TEST_CASE("forest round-trips losslessly") {
  auto dir = testsupport::test_dir("serialize_forest");
  auto train = testsupport::make_blobs(50, 4, 2, 0.5, 3);
  auto model = TreeEnsemble::fit(train, 9, 4, 77);

  auto path = dir / "forest.json";
  save_model(path, model);
  auto back = load_forest(path);

  CHECK(back.size() == 9);
  CHECK(back.max_depth() == 4);
  CHECK(back.tree_seeds() == model.tree_seeds());
  CHECK(back.num_classes() == model.num_classes());
  CHECK(back.num_features() == 4);
  for (const auto& x : probe_grid(4)) {
    CHECK(back.predict_proba(x) == model.predict_proba(x));
    CHECK(back.member_distributions(x) == model.member_distributions(x));
  }

  SUBCASE("save after load is byte-identical") {
    auto again = dir / "forest_again.json";
    save_model(again, back);
    CHECK(testsupport::read_file(again) == testsupport::read_file(path));
  }
}

TEST_CASE("evidential knn round-trips losslessly") {
  auto dir = testsupport::test_dir("serialize_eknn");
  auto train = testsupport::make_blobs(30, 3, 3, 0.6, 9);
  auto model = eknn_fit(train, 5, 0.9);

  auto path = dir / "eknn.json";
  save_model(path, model);
  auto back = load_eknn(path);

  CHECK(back.k == 5);
  CHECK(back.alpha == 0.9);
  CHECK(back.gamma == model.gamma);
  CHECK(back.num_classes == model.num_classes);
  CHECK(back.train_labels == model.train_labels);
  for (const auto& x : probe_grid(3)) {
    CHECK(eknn_mass(back, x).focal() == eknn_mass(model, x).focal());
  }
}

TEST_CASE("load_classifier dispatches on the declared type") {
  auto dir = testsupport::test_dir("serialize_dispatch");
  auto train = testsupport::make_blobs(30, 4, 2, 0.4, 21);

  auto knn = KnnModel::fit(train, 3);
  save_classifier(dir / "a.json", knn);
  auto a = load_classifier(dir / "a.json");
  REQUIRE(a != nullptr);
  CHECK(a->num_features() == 4);
  for (const auto& x : probe_grid(4)) {
    CHECK(a->predict_proba(x) == knn.predict_proba(x));
  }

  auto forest = TreeEnsemble::fit(train, 5, 3, 4);
  save_classifier(dir / "b.json", forest);
  auto b = load_classifier(dir / "b.json");
  REQUIRE(b != nullptr);
  for (const auto& x : probe_grid(4)) {
    CHECK(b->predict_proba(x) == forest.predict_proba(x));
  }
}

TEST_CASE("loader errors carry the offending path") {
  auto dir = testsupport::test_dir("serialize_errors");

  SUBCASE("missing file") {
    auto p = dir / "nowhere.json";
    CHECK_THROWS_WITH_AS(load_knn(p),
                         doctest::Contains("nowhere.json"),
                         SerializationError);
  }
  SUBCASE("malformed json") {
    auto p = dir / "broken.json";
    testsupport::write_file(p, "{\"schema\": ");
    CHECK_THROWS_WITH_AS(load_knn(p), doctest::Contains("broken.json"),
                         SerializationError);
  }
  SUBCASE("unknown schema tag") {
    auto p = dir / "alien.json";
    testsupport::write_file(p, "{\"schema\":\"other.model/9\",\"type\":\"knn\"}");
    CHECK_THROWS_WITH_AS(load_knn(p), doctest::Contains("alien.json"),
                         SerializationError);
  }
  SUBCASE("wrong model type for the typed loader") {
    auto train = testsupport::make_blobs(20, 3, 2, 0.4, 5);
    auto p = dir / "knn.json";
    save_model(p, KnnModel::fit(train, 3));
    CHECK_THROWS_AS(load_forest(p), SerializationError);
    CHECK_THROWS_AS(load_eknn(p), SerializationError);
  }
  SUBCASE("classifier loader rejects eknn files") {
    auto train = testsupport::make_blobs(20, 3, 2, 0.4, 5);
    auto p = dir / "eknn.json";
    save_model(p, eknn_fit(train, 3));
    CHECK_THROWS_AS(load_classifier(p), SerializationError);
  }
}

TEST_CASE("routed records serialize each branch payload") {
  UncertaintyEstimate u;
  u.aleatoric = 0.25;
  u.epistemic = 1.5;
  u.total = 1.75;
  u.strategy = Strategy::belief;
  std::vector<double> x{0.1, 0.9};

  SUBCASE("rejection") {
    RoutedExplanation r;
    r.verdict = Verdict::rejected_insufficient_training;
    r.uncertainty = u;
    r.payload = RejectionRecord{1.5, 1.2, "epistemic above threshold"};
    auto rec = nlohmann::json::parse(
        routed_record_json(4, x, 1, "versicolor", r));
    CHECK(rec["instance"] == 4);
    CHECK(rec["features"] == std::vector<double>{0.1, 0.9});
    CHECK(rec["predicted_class"] == 1);
    CHECK(rec["predicted_name"] == "versicolor");
    CHECK(rec["strategy"] == "belief");
    CHECK(rec["aleatoric"] == 0.25);
    CHECK(rec["epistemic"] == 1.5);
    CHECK(rec["verdict"] == "rejected");
    CHECK(rec["rejection"]["threshold"] == 1.2);
    CHECK(rec["rejection"]["reason"] == "epistemic above threshold");
    CHECK_FALSE(rec.contains("counterfactual"));
    CHECK_FALSE(rec.contains("feature_importance"));
  }
  SUBCASE("counterfactual") {
    RoutedExplanation r;
    r.verdict = Verdict::counterfactual;
    r.uncertainty = u;
    Counterfactual cf;
    cf.instance = {0.4, 0.6};
    cf.source_row = 17;
    cf.label = 2;
    cf.distance = 0.33;
    r.payload = cf;
    auto rec = nlohmann::json::parse(routed_record_json(0, x, 1, "b", r));
    CHECK(rec["verdict"] == "counterfactual");
    CHECK(rec["counterfactual"]["source_row"] == 17);
    CHECK(rec["counterfactual"]["label"] == 2);
    CHECK(rec["counterfactual"]["distance"] == 0.33);
    CHECK(rec["counterfactual"]["instance"] ==
          std::vector<double>{0.4, 0.6});
  }
  SUBCASE("feature importance") {
    RoutedExplanation r;
    r.verdict = Verdict::feature_importance;
    r.uncertainty = u;
    ImportanceVector iv;
    iv.values = {0.2, -0.1};
    iv.target_class = 1;
    iv.estimator = ShapleyEstimator::exact;
    iv.n_permutations = 0;
    r.payload = iv;
    auto rec = nlohmann::json::parse(routed_record_json(2, x, 1, "b", r));
    CHECK(rec["verdict"] == "feature_importance");
    CHECK(rec["feature_importance"]["values"] ==
          std::vector<double>{0.2, -0.1});
    CHECK(rec["feature_importance"]["target_class"] == 1);
    CHECK(rec["feature_importance"]["estimator"] == "exact");
  }
}
