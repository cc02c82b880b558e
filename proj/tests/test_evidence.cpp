#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "uxai/evidence.hpp"
#include "uxai/rng.hpp"

using namespace uxai;

TEST_CASE("mass function bookkeeping") {
  MassFunction m(3);
  CHECK(m.full_set() == 0b111u);
  m.set(0b001, 0.6);
  m.set(0b111, 0.4);
  CHECK(m.mass(0b001) == 0.6);
  CHECK(m.mass(0b010) == 0.0);
  m.validate();

  SUBCASE("zero mass erases the entry") {
    m.set(0b001, 0.0);
    CHECK(m.focal().count(0b001) == 0);
  }
  SUBCASE("add accumulates") {
    m.add(0b001, 0.1);
    CHECK(m.mass(0b001) == doctest::Approx(0.7).epsilon(1e-12));
  }
  SUBCASE("empty set mass is forbidden") {
    CHECK_THROWS_AS(m.set(0, 0.1), std::invalid_argument);
  }
  SUBCASE("out-of-frame subsets are forbidden") {
    CHECK_THROWS_AS(m.set(0b1000, 0.1), std::invalid_argument);
  }
  SUBCASE("validate checks total mass") {
    m.set(0b111, 0.3);
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  }
}

TEST_CASE("frame size limits") {
  CHECK_THROWS_AS(MassFunction(0), std::invalid_argument);
  CHECK_THROWS_AS(MassFunction(21), std::invalid_argument);
  MassFunction ok(20);
  CHECK(ok.full_set() == 0xfffffu);
}

TEST_CASE("dempster combination, hand-worked two-class case") {
  // m1: {a} 0.6, frame 0.4.  m2: {b} 0.5, frame 0.5.  Conflict 0.3, so the
  // normalized result is {a} 3/7, {b} 2/7, frame 2/7.
  MassFunction m1(2), m2(2);
  m1.set(0b01, 0.6);
  m1.set(0b11, 0.4);
  m2.set(0b10, 0.5);
  m2.set(0b11, 0.5);
  auto c = dempster_combine(m1, m2);
  CHECK(c.mass(0b01) == doctest::Approx(3.0 / 7.0).epsilon(1e-12));
  CHECK(c.mass(0b10) == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
  CHECK(c.mass(0b11) == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
  c.validate();
}

TEST_CASE("vacuous element is neutral") {
  MassFunction v = MassFunction::vacuous(3);
  MassFunction m(3);
  m.set(0b001, 0.7);
  m.set(0b110, 0.3);
  auto c = dempster_combine(m, v);
  CHECK(c.mass(0b001) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(c.mass(0b110) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("total conflict throws") {
  MassFunction m1(2), m2(2);
  m1.set(0b01, 1.0);
  m2.set(0b10, 1.0);
  CHECK_THROWS_AS(dempster_combine(m1, m2), TotalConflictError);
}

TEST_CASE("combination is commutative and associative on random masses") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t classes = 2 + rng.below(4);
    auto random_mass = [&] {
      MassFunction m(classes);
      double remaining = 1.0;
      for (int f = 0; f < 3; ++f) {
        auto subset = static_cast<std::uint32_t>(
            1 + rng.below(m.full_set()));
        double share = remaining * 0.4 * rng.uniform();
        m.add(subset, share);
        remaining -= share;
      }
      m.add(m.full_set(), remaining);  // keeps conflict away from 1
      return m;
    };
    auto a = random_mass(), b = random_mass(), c = random_mass();
    auto ab = dempster_combine(a, b);
    auto ba = dempster_combine(b, a);
    for (auto [subset, mass] : ab.focal()) {
      CHECK(mass == doctest::Approx(ba.mass(subset)).epsilon(1e-12));
    }
    auto ab_c = dempster_combine(dempster_combine(a, b), c);
    auto a_bc = dempster_combine(a, dempster_combine(b, c));
    for (auto [subset, mass] : ab_c.focal()) {
      CHECK(mass == doctest::Approx(a_bc.mass(subset)).epsilon(1e-9));
    }
  }
}

TEST_CASE("pignistic transform splits subset mass evenly") {
  MassFunction m(2);
  m.set(0b01, 0.6);
  m.set(0b11, 0.4);
  auto p = pignistic(m);
  CHECK(p[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("nonspecificity and discord reference points") {
  SUBCASE("vacuous over four classes") {
    auto v = MassFunction::vacuous(4);
    CHECK(nonspecificity(v) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(discord(v) == 0.0);
  }
  SUBCASE("dirac singleton") {
    MassFunction m(3);
    m.set(0b010, 1.0);
    CHECK(nonspecificity(m) == 0.0);
    CHECK(discord(m) == 0.0);
    CHECK(std::signbit(discord(m)) == false);
  }
  SUBCASE("mixed mass") {
    MassFunction m(2);
    m.set(0b01, 0.6);
    m.set(0b11, 0.4);
    // BetP = (0.8, 0.2); only the singleton term contributes:
    // -0.6 * log2(0.8).
    CHECK(discord(m) == doctest::Approx(0.19315685693241741).epsilon(1e-12));
    CHECK(nonspecificity(m) == doctest::Approx(0.4).epsilon(1e-12));
  }
}

TEST_CASE("eknn gamma is inverse mean intra-class squared distance") {
  Dataset d;
  d.features = Matrix::from_rows({{0.0}, {0.2}, {1.0}, {1.2}});
  d.labels = {0, 0, 1, 1};
  d.feature_names = {"x"};
  d.class_names = {"a", "b"};
  auto m = eknn_fit(d, 2, 0.95);
  CHECK(m.gamma[0] == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(m.gamma[1] == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("eknn gamma falls back for singleton classes") {
  Dataset d;
  d.features = Matrix::from_rows({{0.0}, {0.2}, {5.0}});
  d.labels = {0, 0, 1};
  d.feature_names = {"x"};
  d.class_names = {"a", "b"};
  auto m = eknn_fit(d, 1, 0.95);
  CHECK(m.gamma[0] == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(m.gamma[1] == doctest::Approx(25.0).epsilon(1e-12));

  Dataset singles;
  singles.features = Matrix::from_rows({{0.0}, {1.0}});
  singles.labels = {0, 1};
  singles.feature_names = {"x"};
  singles.class_names = {"a", "b"};
  auto s = eknn_fit(singles, 1, 0.95);
  CHECK(s.gamma[0] == 1.0);
  CHECK(s.gamma[1] == 1.0);
}

TEST_CASE("eknn mass fold, hand-worked case") {
  Dataset d;
  d.features = Matrix::from_rows({{0.0}, {0.2}, {1.0}, {1.2}});
  d.labels = {0, 0, 1, 1};
  d.feature_names = {"x"};
  d.class_names = {"a", "b"};
  auto m = eknn_fit(d, 2, 0.95);
  // Query 0.1: both neighbors are class 0 at squared distance 0.01, each
  // contributing m({0}) = 0.95 * exp(-25 * 0.01). The fold leaves
  // (1-a)^2 on the frame.
  auto mass = eknn_mass(m, std::vector<double>{0.1});
  CHECK(mass.mass(0b01) ==
        doctest::Approx(0.93232756744501755).epsilon(1e-12));
  CHECK(mass.mass(0b11) ==
        doctest::Approx(0.067672432554982412).epsilon(1e-12));
  mass.validate();
}

TEST_CASE("eknn_fit validates its parameters") {
  Dataset d = testsupport::make_blobs(5, 2, 2, 0.1, 1);
  CHECK_THROWS_AS(eknn_fit(d, 0, 0.95), std::invalid_argument);
  CHECK_THROWS_AS(eknn_fit(d, 11, 0.95), std::invalid_argument);
  CHECK_THROWS_AS(eknn_fit(d, 3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(eknn_fit(d, 3, 1.0), std::invalid_argument);
}
