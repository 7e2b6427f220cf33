#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "qpred/features.hpp"

using namespace qpred;
using Catch::Approx;

namespace {

QueueFeatures features_for(double lambda, double mu, int K) {
  return featurize(LinkTraffic::from_rates(lambda, mu, K));
}

}  // namespace

TEST_CASE("evaluate_feature handles all engineered forms") {
  auto f = features_for(1.0, 2.0, 2);
  const double re = f.rho_e;
  REQUIRE(evaluate_feature("rho_e", f) == re);
  REQUIRE(evaluate_feature("rho_e^2", f) == Approx(re * re));
  REQUIRE(evaluate_feature("rho_e^3", f) == Approx(re * re * re));
  REQUIRE(evaluate_feature("log1p(rho_e)", f) == Approx(std::log1p(re)));
  REQUIRE(evaluate_feature("exp(rho_e)", f) == Approx(std::exp(re)));
  REQUIRE(evaluate_feature("sqrt(rho_e)", f) == Approx(std::sqrt(re)));
  REQUIRE(evaluate_feature("pi0*rho_e", f) == Approx(f.pi0 * re));
  REQUIRE_THROWS_AS(evaluate_feature("bogus", f), std::invalid_argument);
  REQUIRE_THROWS_AS(evaluate_feature("sqrt(bogus)", f), std::invalid_argument);
}

TEST_CASE("candidate pool for four bases has 30 deterministic names") {
  std::vector<QueueFeatures> samples;
  for (double l = 0.2; l < 1.8; l += 0.2)
    samples.push_back(features_for(l, 2.0, 8));
  const auto fm = build_candidate_features(samples, default_linear_features());
  REQUIRE(fm.names.size() + fm.dropped.size() == 30);  // 4 + 4*5 + C(4,2)
  REQUIRE(fm.dropped.empty());
  // spot checks from the construction rules
  REQUIRE(std::count(fm.names.begin(), fm.names.end(), "pi0") == 1);
  REQUIRE(std::count(fm.names.begin(), fm.names.end(), "rho_e^2") == 1);
  REQUIRE(std::count(fm.names.begin(), fm.names.end(), "sqrt(rho_e)") == 1);
  REQUIRE(std::count(fm.names.begin(), fm.names.end(), "pi0*rho_e") == 1);
  // column values match evaluate_feature
  for (std::size_t c = 0; c < fm.names.size(); ++c)
    for (std::size_t i = 0; i < samples.size(); ++i)
      REQUIRE(fm.columns[c][i] == evaluate_feature(fm.names[c], samples[i]));
  // deterministic order across calls
  const auto fm2 = build_candidate_features(samples, default_linear_features());
  REQUIRE(fm2.names == fm.names);
}

TEST_CASE("candidate values include the documented examples") {
  QueueFeatures f{};
  f.rho_e = 0.25;
  f.pi0 = 0.75;
  REQUIRE(evaluate_feature("rho_e^2", f) == Approx(0.0625));
  REQUIRE(evaluate_feature("sqrt(rho_e)", f) == Approx(0.5));
  REQUIRE(evaluate_feature("pi0*rho_e", f) == Approx(0.1875));
}

TEST_CASE("stepwise finds a planted quadratic first") {
  // y = 3 x^2 exactly; candidates: x, x^2 and an irrelevant jitter column
  std::vector<QueueFeatures> dummy;
  FeatureMatrix fm;
  Xoshiro256pp rng(3);
  std::vector<double> x, x2, noise, y;
  for (int i = 0; i < 200; ++i) {
    const double v = 0.05 + 0.9 * rng.uniform01();
    x.push_back(v);
    x2.push_back(v * v);
    noise.push_back(rng.uniform01());
    y.push_back(3.0 * v * v);
  }
  fm.names = {"x", "x^2", "z"};
  fm.columns = {x, x2, noise};
  const auto sel = forward_stepwise(fm, y, 2);
  REQUIRE(!sel.selected.empty());
  REQUIRE(sel.selected[0] == "x^2");
  REQUIRE(sel.scores[0] == Approx(0.0).margin(1e-8));
}

TEST_CASE("stepwise with max_features = 0 selects nothing") {
  FeatureMatrix fm;
  fm.names = {"x"};
  fm.columns = {{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}};
  const std::vector<double> y = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto sel = forward_stepwise(fm, y, 0);
  REQUIRE(sel.selected.empty());
  REQUIRE(sel.scores.empty());
}

TEST_CASE("stepwise scores never increase along the selection") {
  Xoshiro256pp rng(5);
  std::vector<QueueFeatures> samples;
  std::vector<double> y;
  for (int i = 0; i < 400; ++i) {
    const double rho = 0.05 + 2.5 * rng.uniform01();
    const double mu = 1.0 + rng.uniform01();
    const auto f = features_for(rho * mu, mu, 16);
    samples.push_back(f);
    y.push_back(mean_occupancy_mm1k(f.rho, 16) + 1e-3);
  }
  const auto fm = build_candidate_features(samples, default_linear_features());
  const auto sel = forward_stepwise(fm, y, 6);
  REQUIRE(!sel.selected.empty());
  for (std::size_t i = 1; i < sel.scores.size(); ++i)
    REQUIRE(sel.scores[i] <= sel.scores[i - 1]);
  REQUIRE(sel.scores.front() <= sel.baseline_score);
}

TEST_CASE("stepwise over the analytic feature set stays inside it") {
  // candidates restricted to the four analytic features; every pick must
  // come from that set (subset check, order not pinned)
  Xoshiro256pp rng(9);
  std::vector<QueueFeatures> samples;
  std::vector<double> y;
  for (int i = 0; i < 500; ++i) {
    const double rho = 0.05 + 2.0 * rng.uniform01();
    const auto f = features_for(rho * 2.0, 2.0, 32);
    samples.push_back(f);
    y.push_back(mean_occupancy_mm1k(f.rho, 32) * (1.0 + 0.02 * (rng.uniform01() - 0.5)) +
                1e-4);
  }
  FeatureMatrix fm;
  for (const auto& name : default_linear_features()) {
    std::vector<double> col(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
      col[i] = evaluate_feature(name, samples[i]);
    fm.names.push_back(name);
    fm.columns.push_back(std::move(col));
  }
  const auto sel = forward_stepwise(fm, y, 4);
  REQUIRE(!sel.selected.empty());
  for (const auto& name : sel.selected) {
    const auto& allowed = default_linear_features();
    REQUIRE(std::find(allowed.begin(), allowed.end(), name) != allowed.end());
  }
}

TEST_CASE("stepwise rejects constant-only candidate pools") {
  FeatureMatrix fm;
  fm.names = {"c1", "c2"};
  fm.columns = {std::vector<double>(20, 1.0), std::vector<double>(20, 2.0)};
  const std::vector<double> y(20, 3.0);
  REQUIRE_THROWS_AS(forward_stepwise(fm, y, 2), std::invalid_argument);
}

TEST_CASE("stepwise requires positive targets") {
  FeatureMatrix fm;
  fm.names = {"x"};
  fm.columns = {{1, 2, 3, 4, 5, 6, 7, 8}};
  const std::vector<double> y = {1, 2, 0.0, 4, 5, 6, 7, 8};
  REQUIRE_THROWS_AS(forward_stepwise(fm, y, 1), std::invalid_argument);
}
