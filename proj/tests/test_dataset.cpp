#include <doctest.h>

#include <set>

#include "support.hpp"
#include "uxai/dataset.hpp"

using namespace uxai;

namespace {

std::filesystem::path sample_csv() {
  return testsupport::write_file(
      testsupport::test_dir("dataset") / "sample.csv",
      "a,b,class\n"
      "1.0,2.0,yes\n"
      "3.0,4.0,no\n"
      "5.0,6.0,yes\n"
      "7.0,8.0,no\n");
}

}  // namespace

TEST_CASE("load_csv reads shapes, names, and first-appearance classes") {
  Dataset d = load_csv(sample_csv(), "class");
  CHECK(d.size() == 4);
  CHECK(d.num_features() == 2);
  CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(d.class_names == std::vector<std::string>{"yes", "no"});
  CHECK(d.labels == std::vector<int>{0, 1, 0, 1});
  CHECK(d.features(2, 1) == 6.0);
}

TEST_CASE("load_csv error reporting names the location") {
  auto dir = testsupport::test_dir("dataset");

  SUBCASE("missing label column") {
    auto p = testsupport::write_file(dir / "nolabel.csv", "a,b\n1,2\n");
    CHECK_THROWS_WITH_AS(load_csv(p, "class"),
                         doctest::Contains("class"), DataError);
  }
  SUBCASE("bad number pinpoints line") {
    auto p = testsupport::write_file(dir / "badnum.csv",
                                     "a,class\n1.0,x\nbogus,y\n");
    CHECK_THROWS_WITH_AS(load_csv(p, "class"), doctest::Contains("line 3"),
                         DataError);
  }
  SUBCASE("ragged row") {
    auto p = testsupport::write_file(dir / "ragged.csv",
                                     "a,b,class\n1,2,x\n1,y\n");
    CHECK_THROWS_AS(load_csv(p, "class"), DataError);
  }
  SUBCASE("single class rejected") {
    auto p = testsupport::write_file(dir / "oneclass.csv",
                                     "a,class\n1,x\n2,x\n");
    CHECK_THROWS_AS(load_csv(p, "class"), DataError);
  }
  SUBCASE("non-finite value rejected") {
    auto p = testsupport::write_file(dir / "inf.csv",
                                     "a,class\ninf,x\n2,y\n");
    CHECK_THROWS_AS(load_csv(p, "class"), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_csv(dir / "absent.csv", "class"), DataError);
  }
}

TEST_CASE("load_feature_csv drops the label column when present") {
  auto dir = testsupport::test_dir("dataset");
  auto p = testsupport::write_file(dir / "feat.csv",
                                   "a,class,b\n1,zzz,2\n3,zzz,4\n");
  Matrix m = load_feature_csv(p, "class");
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 2);
  CHECK(m(1, 1) == 4.0);

  auto p2 = testsupport::write_file(dir / "feat2.csv", "a,b\n1,2\n");
  Matrix m2 = load_feature_csv(p2, "class");
  CHECK(m2.cols() == 2);
}

TEST_CASE("minmax normalization") {
  Dataset d;
  d.features = Matrix::from_rows({{0.0, 5.0, 3.0},
                                  {10.0, 5.0, 4.0}});
  d.labels = {0, 1};
  d.feature_names = {"a", "b", "c"};
  d.class_names = {"x", "y"};
  NormParams p = fit_minmax(d);
  Dataset n = apply_minmax(p, d);
  CHECK(n.features(0, 0) == 0.0);
  CHECK(n.features(1, 0) == 1.0);

  SUBCASE("constant columns map to one half") {
    CHECK(n.features(0, 1) == 0.5);
    CHECK(n.features(1, 1) == 0.5);
  }
  SUBCASE("out-of-range values extrapolate rather than clip") {
    auto v = apply_minmax(p, std::vector<double>{-5.0, 5.0, 5.0});
    CHECK(v[0] == -0.5);
    CHECK(v[2] == 2.0);
  }
  SUBCASE("invert restores coordinates") {
    auto v = apply_minmax(p, std::vector<double>{2.5, 5.0, 3.25});
    auto back = invert_minmax(p, v);
    CHECK(back[0] == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(back[2] == doctest::Approx(3.25).epsilon(1e-12));
    // A constant column has no scale to restore; it pins to the minimum.
    CHECK(back[1] == 5.0);
  }
}

TEST_CASE("stratified split covers, separates, and balances") {
  Dataset d = testsupport::make_blobs(30, 3, 3, 0.1, 21);
  SplitSpec spec{0.7, 99, true};
  auto [train, test] = train_test_split(d, spec);
  CHECK(train.size() + test.size() == d.size());
  CHECK(train.size() == 63);  // 21 per class

  std::vector<int> train_counts(3, 0), test_counts(3, 0);
  for (int y : train.labels) ++train_counts[y];
  for (int y : test.labels) ++test_counts[y];
  for (int c = 0; c < 3; ++c) {
    CHECK(train_counts[c] == 21);
    CHECK(test_counts[c] == 9);
  }
}

TEST_CASE("split is deterministic in its seed") {
  Dataset d = testsupport::make_blobs(20, 2, 2, 0.1, 4);
  SplitSpec spec{0.5, 123, true};
  auto [a1, b1] = split_indices(d.labels, spec);
  auto [a2, b2] = split_indices(d.labels, spec);
  CHECK(a1 == a2);
  CHECK(b1 == b2);
  CHECK(std::is_sorted(a1.begin(), a1.end()));
  CHECK(std::is_sorted(b1.begin(), b1.end()));

  spec.seed = 124;
  auto [a3, b3] = split_indices(d.labels, spec);
  CHECK(a1 != a3);
}

TEST_CASE("split keeps at least one row on each side per class") {
  std::vector<int> labels{0, 0, 1, 1};
  auto [train, test] = split_indices(labels, SplitSpec{0.01, 5, true});
  CHECK(train.size() == 2);
  CHECK(test.size() == 2);
}

TEST_CASE("stratified split rejects single-row classes") {
  std::vector<int> labels{0, 0, 0, 1};
  CHECK_THROWS_AS(split_indices(labels, SplitSpec{0.5, 5, true}), DataError);
}

TEST_CASE("toy moons geometry with zero noise") {
  Dataset d = make_toy_moons(50, 0.0, 7);
  CHECK(d.size() == 100);
  CHECK(d.num_features() == 2);
  CHECK(d.class_names.size() == 2);
  // First outer point sits at angle 0, last at angle pi.
  CHECK(d.features(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.features(0, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(d.features(49, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  // Inner arc starts at (1 - cos 0, 0.5 - sin 0) = (0, 0.5).
  CHECK(d.features(50, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(d.features(50, 1) == doctest::Approx(0.5).epsilon(1e-12));
  int zeros = 0;
  for (int y : d.labels) zeros += (y == 0);
  CHECK(zeros == 50);
  d.validate();
}

TEST_CASE("validate catches shape and label problems") {
  Dataset d = testsupport::make_blobs(5, 2, 2, 0.1, 3);
  d.labels[0] = 9;
  CHECK_THROWS_AS(d.validate(), DataError);
}
