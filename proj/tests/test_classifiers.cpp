#include <doctest.h>

#include "support.hpp"
#include "uxai/classifiers.hpp"

using namespace uxai;

namespace {

Dataset line_1d(std::vector<double> xs, std::vector<int> ys) {
  Dataset d;
  std::vector<std::vector<double>> rows;
  for (double x : xs) rows.push_back({x});
  d.features = Matrix::from_rows(rows);
  d.labels = std::move(ys);
  d.feature_names = {"x"};
  d.class_names = {"a", "b"};
  return d;
}

}  // namespace

TEST_CASE("argmax_class picks the first maximum") {
  CHECK(argmax_class(std::vector<double>{0.2, 0.5, 0.3}) == 1);
  CHECK(argmax_class(std::vector<double>{0.4, 0.4, 0.2}) == 0);
}

TEST_CASE("knn probabilities are neighbor vote shares") {
  Dataset d = line_1d({0.0, 0.1, 1.0, 1.1}, {0, 0, 1, 1});
  auto m = KnnModel::fit(d, 3);
  auto p = m.predict_proba(std::vector<double>{0.05});
  CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(m.predict(std::vector<double>{0.05}) == 0);
  CHECK(m.num_features() == 1);
  CHECK(m.num_classes() == 2);
}

TEST_CASE("knn equidistant ties resolve to the lower row index") {
  Dataset d = line_1d({0.0, 2.0}, {0, 1});
  auto m = KnnModel::fit(d, 1);
  auto nn = m.neighbors(std::vector<double>{1.0});
  REQUIRE(nn.size() == 1);
  CHECK(nn[0].first == 0);
  CHECK(nn[0].second == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("knn rejects degenerate k") {
  Dataset d = line_1d({0.0, 1.0}, {0, 1});
  CHECK_THROWS_AS(KnnModel::fit(d, 0), std::invalid_argument);
  CHECK_THROWS_AS(KnnModel::fit(d, 3), std::invalid_argument);
}

namespace {

DecisionTree grow_all(const Dataset& d, std::size_t max_depth,
                      std::uint64_t seed) {
  std::vector<std::size_t> rows(d.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return DecisionTree::grow(d.features, d.labels, rows, d.num_classes(),
                            max_depth, d.num_features(), seed);
}

}  // namespace

TEST_CASE("decision tree finds the midpoint split") {
  Dataset d = line_1d({0.2, 0.4, 0.6, 0.8}, {0, 0, 1, 1});
  auto t = grow_all(d, 4, 0);
  REQUIRE(t.nodes().size() == 3);
  CHECK(t.nodes()[0].feature == 0);
  CHECK(t.nodes()[0].threshold == doctest::Approx(0.5).epsilon(1e-12));
  auto left = t.leaf_distribution(std::vector<double>{0.3});
  auto right = t.leaf_distribution(std::vector<double>{0.7});
  CHECK(left[0] == 1.0);
  CHECK(right[1] == 1.0);
}

TEST_CASE("leaf distributions are vote shares") {
  Dataset d = line_1d({0.1, 0.2, 0.3, 0.9}, {0, 0, 1, 1});
  auto t = grow_all(d, 1, 0);
  auto p = t.leaf_distribution(std::vector<double>{0.0});
  REQUIRE(p.size() == 2);
  CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[0] > p[1]);
}

TEST_CASE("depth zero gives the prior") {
  Dataset d = line_1d({0.1, 0.2, 0.9}, {0, 0, 1});
  auto t = grow_all(d, 0, 0);
  auto p = t.leaf_distribution(std::vector<double>{0.5});
  CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("identical features tie-break to the lower feature index") {
  Dataset d;
  d.features = Matrix::from_rows(
      {{0.0, 0.0}, {1.0, 1.0}, {0.2, 0.2}, {0.8, 0.8}});
  d.labels = {0, 1, 0, 1};
  d.feature_names = {"a", "b"};
  d.class_names = {"x", "y"};
  auto t = grow_all(d, 3, 0);
  CHECK(t.nodes()[0].feature == 0);
}

TEST_CASE("ensemble is deterministic and averages members") {
  Dataset d = testsupport::make_blobs(25, 3, 2, 0.25, 17);
  auto f1 = TreeEnsemble::fit(d, 20, 3, 77);
  auto f2 = TreeEnsemble::fit(d, 20, 3, 77);
  CHECK(f1.tree_seeds() == f2.tree_seeds());

  std::vector<double> x{0.5, 0.5, 0.5};
  auto p1 = f1.predict_proba(x);
  auto p2 = f2.predict_proba(x);
  CHECK(p1 == p2);
  CHECK(p1[0] + p1[1] == doctest::Approx(1.0).epsilon(1e-9));

  auto members = f1.member_distributions(x);
  REQUIRE(members.size() == 20);
  double mean0 = 0.0;
  for (const auto& m : members) {
    CHECK(m[0] + m[1] == doctest::Approx(1.0).epsilon(1e-9));
    mean0 += m[0];
  }
  CHECK(p1[0] == doctest::Approx(mean0 / 20.0).epsilon(1e-12));

  auto f3 = TreeEnsemble::fit(d, 20, 3, 78);
  CHECK(f1.tree_seeds() != f3.tree_seeds());
}

TEST_CASE("ensemble learns separated blobs") {
  Dataset d = testsupport::make_blobs(40, 4, 2, 0.15, 5);
  auto f = TreeEnsemble::fit(d, 30, 4, 1);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < d.size(); ++r) {
    hits += (f.predict(d.features.row(r)) == d.labels[r]);
  }
  CHECK(hits >= d.size() * 9 / 10);
}
