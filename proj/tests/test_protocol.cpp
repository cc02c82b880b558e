#include <doctest.h>

#include <algorithm>

#include "uxai/protocol.hpp"

using namespace uxai;

namespace {

UncertaintyEstimate estimate(double au, double eu,
                             Strategy s = Strategy::belief) {
  UncertaintyEstimate u;
  u.aleatoric = au;
  u.epistemic = eu;
  u.total = au + eu;
  u.strategy = s;
  return u;
}

std::vector<UncertaintyEstimate> ladder() {
  std::vector<UncertaintyEstimate> v;
  for (int i = 1; i <= 10; ++i) {
    v.push_back(estimate(0.1 * i, static_cast<double>(i)));
  }
  return v;
}

}  // namespace

TEST_CASE("empirical quantile interpolates order statistics") {
  std::vector<double> xs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(empirical_quantile(xs, 0.7) == doctest::Approx(7.3).epsilon(1e-12));
  CHECK(empirical_quantile(xs, 0.0) == 1.0);
  CHECK(empirical_quantile(xs, 1.0) == 10.0);

  std::vector<double> unsorted{3, 1, 4, 1, 5};
  CHECK(empirical_quantile(unsorted, 0.25) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(empirical_quantile(std::vector<double>{2.5}, 0.7) == 2.5);
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(empirical_quantile(xs, 1.5), std::invalid_argument);
}

TEST_CASE("calibrate resolves quantile thresholds on the sample") {
  auto sample = ladder();
  RoutingPolicy policy;
  policy.epistemic = ThresholdSpec::at_quantile(0.7);
  policy.aleatoric = ThresholdSpec::at_quantile(0.5);
  auto done = calibrate(policy, sample);
  CHECK(done.calibrated());
  CHECK(*done.epistemic_threshold == doctest::Approx(7.3).epsilon(1e-12));
  CHECK(*done.aleatoric_threshold == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(done.calibration_size == 10);
  CHECK(done.strategy == Strategy::belief);
}

TEST_CASE("absolute thresholds pass through calibration") {
  auto sample = ladder();
  RoutingPolicy policy;
  policy.epistemic = ThresholdSpec::at(2.0);
  policy.aleatoric = ThresholdSpec::at(0.3);
  auto done = calibrate(policy, sample);
  CHECK(*done.epistemic_threshold == 2.0);
  CHECK(*done.aleatoric_threshold == 0.3);
}

TEST_CASE("calibration rejects mixed strategies and empty samples") {
  auto sample = ladder();
  sample[3].strategy = Strategy::ensemble_entropy;
  RoutingPolicy policy;
  CHECK_THROWS_AS(calibrate(policy, sample), std::invalid_argument);
  CHECK_THROWS_AS(calibrate(policy, {}), std::invalid_argument);
}

TEST_CASE("routing order: reject, then counterfactual, then importance") {
  auto sample = ladder();
  RoutingPolicy policy;
  auto done = calibrate(policy, sample);  // EU >= 7.3 rejects, AU >= 0.55

  int cf_calls = 0, fi_calls = 0;
  ExplanationBuilders builders{
      [&] {
        ++cf_calls;
        return Counterfactual{{1.0}, 0, 1, 0.5};
      },
      [&] {
        ++fi_calls;
        ImportanceVector iv;
        iv.values = {0.2};
        return iv;
      }};

  SUBCASE("high epistemic rejects without building anything") {
    auto routed = route(done, estimate(0.1, 9.0), builders);
    CHECK(routed.verdict == Verdict::rejected_insufficient_training);
    CHECK(cf_calls == 0);
    CHECK(fi_calls == 0);
    auto* rej = std::get_if<RejectionRecord>(&routed.payload);
    REQUIRE(rej != nullptr);
    CHECK(rej->epistemic == 9.0);
    CHECK(rej->threshold == doctest::Approx(7.3).epsilon(1e-12));
    CHECK_FALSE(rej->reason.empty());
  }
  SUBCASE("the epistemic boundary itself rejects") {
    auto routed = route(done, estimate(0.0, 7.3), builders);
    CHECK(routed.verdict == Verdict::rejected_insufficient_training);
  }
  SUBCASE("high aleatoric routes to a counterfactual") {
    auto routed = route(done, estimate(0.9, 1.0), builders);
    CHECK(routed.verdict == Verdict::counterfactual);
    CHECK(cf_calls == 1);
    CHECK(fi_calls == 0);
    CHECK(std::get_if<Counterfactual>(&routed.payload) != nullptr);
  }
  SUBCASE("low uncertainty routes to feature importance") {
    auto routed = route(done, estimate(0.1, 1.0), builders);
    CHECK(routed.verdict == Verdict::feature_importance);
    CHECK(cf_calls == 0);
    CHECK(fi_calls == 1);
    CHECK(std::get_if<ImportanceVector>(&routed.payload) != nullptr);
  }
}

TEST_CASE("routing requires calibration and matching strategy") {
  ExplanationBuilders builders{
      [] { return Counterfactual{}; },
      [] { return ImportanceVector{}; }};
  RoutingPolicy raw;
  CHECK_THROWS_AS(route(raw, estimate(0.1, 0.1), builders),
                  std::logic_error);

  auto done = calibrate(raw, ladder());
  auto foreign = estimate(0.1, 0.1, Strategy::centroid_rbf);
  CHECK_THROWS_AS(route(done, foreign, builders), std::invalid_argument);
}

TEST_CASE("routing needs the builder for the chosen branch") {
  auto done = calibrate(RoutingPolicy{}, ladder());
  ExplanationBuilders missing_cf{{}, [] { return ImportanceVector{}; }};
  CHECK_THROWS_AS(route(done, estimate(0.9, 0.0), missing_cf),
                  std::logic_error);
}

TEST_CASE("verdict names") {
  CHECK(to_string(Verdict::rejected_insufficient_training) == "rejected");
  CHECK(to_string(Verdict::counterfactual) == "counterfactual");
  CHECK(to_string(Verdict::feature_importance) == "feature_importance");
}

TEST_CASE("rejection curve spans the range and never increases") {
  auto sample = ladder();
  auto curve = rejection_curve(sample, 11);
  REQUIRE(curve.size() == 11);
  CHECK(curve.front().first == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(curve.back().first == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(curve.front().second == 1.0);
  CHECK(curve.back().second == doctest::Approx(0.1).epsilon(1e-12));
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].second <= curve[i - 1].second);
  }
  // Beyond the maximum epistemic value nothing is rejected.
  double beyond = curve.back().first + 1.0;
  auto rejected = std::count_if(sample.begin(), sample.end(),
                                [&](const UncertaintyEstimate& u) {
                                  return u.epistemic >= beyond;
                                });
  CHECK(rejected == 0);
  CHECK_THROWS_AS(rejection_curve(sample, 1), std::invalid_argument);
  CHECK_THROWS_AS(rejection_curve({}, 5), std::invalid_argument);
}

TEST_CASE("most_uncertain picks the highest value, lowest index on ties") {
  std::vector<UncertaintyEstimate> sample{
      estimate(0.5, 2.0), estimate(0.9, 3.0), estimate(0.1, 3.0)};
  CHECK(most_uncertain(sample, UncertaintyKind::epistemic) == 1);
  CHECK(most_uncertain(sample, UncertaintyKind::aleatoric) == 1);
  CHECK(most_uncertain(sample, UncertaintyKind::total) == 1);
  CHECK_THROWS_AS(most_uncertain({}, UncertaintyKind::epistemic),
                  std::invalid_argument);
}
