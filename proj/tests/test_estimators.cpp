#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qpred/datagen.hpp"
#include "qpred/estimators.hpp"
#include "qpred/features.hpp"
#include "qpred/metrics.hpp"

using namespace qpred;
using Catch::Approx;

// --- linear ----------------------------------------------------------------

TEST_CASE("fit_linear recovers planted coefficients") {
  Xoshiro256pp rng(1);
  const std::vector<double> w = {1.0, 2.0, 3.0, 4.0};
  const double b = 0.5;
  std::vector<std::vector<double>> cols(4, std::vector<double>(60));
  std::vector<double> y(60, b);
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 4; ++j) {
      cols[j][i] = rng.uniform01() * 2.0 - 1.0;
      y[i] += w[j] * cols[j][i];
    }
  const auto m = fit_linear({"a", "b", "c", "d"}, cols, y);
  for (int j = 0; j < 4; ++j) REQUIRE(std::abs(m.weights[j] - w[j]) <= 1e-8);
  REQUIRE(std::abs(m.intercept - b) <= 1e-8);
  REQUIRE(!m.rank_warning);
  REQUIRE(m.parameter_count() == 5);
  REQUIRE(m.weight_count() == 4);
}

TEST_CASE("duplicated columns give the minimum-norm solution and a warning") {
  Xoshiro256pp rng(2);
  std::vector<double> x(40), y(40);
  for (int i = 0; i < 40; ++i) {
    x[i] = rng.uniform01();
    y[i] = 3.0 * x[i] + 1.0;
  }
  const auto m = fit_linear({"x", "x_copy"}, {x, x}, y);
  REQUIRE(m.rank_warning);
  REQUIRE(m.weights[0] == Approx(m.weights[1]).margin(1e-9));
  REQUIRE(m.weights[0] + m.weights[1] == Approx(3.0).margin(1e-8));
}

TEST_CASE("constant target collapses onto the intercept") {
  Xoshiro256pp rng(3);
  std::vector<double> x(30);
  for (auto& v : x) v = rng.uniform01();
  const auto m = fit_linear({"x"}, {x}, std::vector<double>(30, 4.25));
  REQUIRE(std::abs(m.weights[0]) <= 1e-10);
  REQUIRE(m.intercept == Approx(4.25).margin(1e-10));
}

TEST_CASE("fit_linear refit on its own predictions is idempotent") {
  Xoshiro256pp rng(4);
  std::vector<std::vector<double>> cols(3, std::vector<double>(50));
  std::vector<double> y(50);
  for (int i = 0; i < 50; ++i) {
    for (auto& c : cols) c[i] = rng.uniform01();
    y[i] = rng.uniform01() * 5.0;
  }
  const auto m1 = fit_linear({"a", "b", "c"}, cols, y);
  std::vector<double> yhat(50);
  for (int i = 0; i < 50; ++i)
    yhat[i] = m1.predict_row(std::vector<double>{cols[0][i], cols[1][i], cols[2][i]});
  const auto m2 = fit_linear({"a", "b", "c"}, cols, yhat);
  for (int j = 0; j < 3; ++j)
    REQUIRE(m2.weights[j] == Approx(m1.weights[j]).margin(1e-10));
  REQUIRE(m2.intercept == Approx(m1.intercept).margin(1e-10));
}

TEST_CASE("fit_linear input validation") {
  REQUIRE_THROWS_AS(fit_linear({}, {}, {1.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(fit_linear({"x"}, {{1.0}}, {1.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(
      fit_linear({"x"}, {{1.0, std::nan("")}}, {1.0, 2.0}), std::invalid_argument);
}

// --- exp-poly ----------------------------------------------------------------

TEST_CASE("fit_exp_poly recovers a planted exponential") {
  std::vector<double> x, y;
  for (int i = 0; i <= 50; ++i) {
    x.push_back(i / 50.0 * 0.9);
    y.push_back(std::exp(2.0 * x.back()));
  }
  const auto m = fit_exp_poly(x, y, 1);
  REQUIRE(std::abs(m.coefficients[0]) <= 1e-10);
  REQUIRE(std::abs(m.coefficients[1] - 2.0) <= 1e-10);
  REQUIRE(m.parameter_count() == 2);
  REQUIRE(m.predict(0.0) == Approx(1.0).margin(1e-10));
}

TEST_CASE("constant target gives a constant log fit") {
  std::vector<double> x, y;
  for (int i = 0; i <= 30; ++i) {
    x.push_back(i / 30.0);
    y.push_back(std::exp(1.0));
  }
  const auto m = fit_exp_poly(x, y, 3);
  REQUIRE(m.coefficients[0] == Approx(1.0).margin(1e-10));
  for (std::size_t j = 1; j < m.coefficients.size(); ++j)
    REQUIRE(std::abs(m.coefficients[j]) <= 1e-8);
}

TEST_CASE("fit_exp_poly rejects nonpositive targets and wild degrees") {
  const std::vector<double> x = {0.1, 0.2, 0.3, 0.4};
  REQUIRE_THROWS_AS(fit_exp_poly(x, {1.0, 0.0, 1.0, 1.0}, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(fit_exp_poly(x, {1.0, -1.0, 1.0, 1.0}, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(fit_exp_poly(x, {1.0, 1.0, 1.0, 1.0}, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(fit_exp_poly(x, {1.0, 1.0, 1.0, 1.0}, 13), std::invalid_argument);
}

// --- bases -------------------------------------------------------------------

TEST_CASE("mm1k basis normalization points") {
  // f_n(n/(n+1)) = 1 exactly, by construction
  for (int K : {1, 2, 5, 32})
    for (int n = 0; n <= K; ++n)
      REQUIRE(basis_value(BasisKind::mm1k, n, K,
                          static_cast<double>(n) / (n + 1)) == 1.0);
  // n = 0 at x = 0 is the empty-probability curve value
  REQUIRE(basis_value(BasisKind::mm1k, 0, 5, 0.0) == 1.0);
}

TEST_CASE("bernstein basis forms a partition of unity") {
  Xoshiro256pp rng(6);
  for (int K : {1, 3, 10, 32}) {
    for (double x : {0.0, 0.3, 1.0, rng.uniform01(), rng.uniform01()}) {
      double sum = 0.0;
      for (int n = 0; n <= K; ++n) sum += basis_value(BasisKind::bernstein, n, K, x);
      REQUIRE(sum == Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("basis_value validates the domain") {
  REQUIRE_THROWS_AS(basis_value(BasisKind::bernstein, 0, 4, 1.5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(basis_value(BasisKind::mm1k, 0, 4, -0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(basis_value(BasisKind::mm1k, 5, 4, 0.5), std::invalid_argument);
}

TEST_CASE("bernstein fit reproduces a cubic exactly") {
  Xoshiro256pp rng(8);
  std::vector<double> x, y;
  const double c0 = 0.4, c1 = -1.2, c2 = 2.0, c3 = 0.7;
  for (int i = 0; i < 50; ++i) {
    const double v = rng.uniform01();
    x.push_back(v);
    y.push_back(c0 + v * (c1 + v * (c2 + v * c3)));
  }
  const auto m = fit_basis(BasisKind::bernstein, 3, x, y);
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = m.predict(x[i]) - y[i];
    ss += e * e;
  }
  REQUIRE(std::sqrt(ss / x.size()) < 1e-8);
}

TEST_CASE("bernstein fit of the constant one has unit coefficients") {
  std::vector<double> x, y;
  for (int i = 0; i <= 40; ++i) {
    x.push_back(i / 40.0);
    y.push_back(1.0);
  }
  const auto m = fit_basis(BasisKind::bernstein, 5, x, y);
  for (double a : m.alphas) REQUIRE(a == Approx(1.0).margin(1e-8));
}

TEST_CASE("batch prediction matches pointwise prediction") {
  Xoshiro256pp rng(10);
  std::vector<double> x(200), y(200);
  for (int i = 0; i < 200; ++i) {
    x[i] = rng.uniform01() * 0.98;
    y[i] = 0.5 + 3.0 * x[i] * x[i];
  }
  for (auto kind : {BasisKind::bernstein, BasisKind::mm1k}) {
    const auto m = fit_basis(kind, 8, x, y);
    std::vector<double> out(x.size());
    m.predict_batch(x, out);
    for (std::size_t i = 0; i < x.size(); ++i)
      REQUIRE(out[i] == Approx(m.predict(x[i])).margin(1e-12));
  }
}

TEST_CASE("fit_basis needs K+2 samples") {
  std::vector<double> x = {0.1, 0.2, 0.3};
  std::vector<double> y = {1.0, 2.0, 3.0};
  REQUIRE_THROWS_AS(fit_basis(BasisKind::bernstein, 3, x, y), std::invalid_argument);
}

TEST_CASE("curve-fit quality ordering on simulated M/M/1/K data") {
  GenSpec spec;
  spec.topology = TopologyTemplate::parse("single");
  spec.count = 300;
  spec.lambda_min = 0.2;
  spec.lambda_max = 13.0;
  spec.mu_min = 9.0;
  spec.mu_max = 11.0;
  spec.K = 32;
  spec.measured_events = 10000;
  spec.seed = 404;
  const auto d = generate_dataset(spec, 4);
  std::vector<double> x, y;
  for (const auto& s : d.links) {
    if (s.observed_occupancy <= 0.0) continue;
    x.push_back(featurize(s.traffic()).rho_e);
    y.push_back(s.observed_occupancy);
  }
  REQUIRE(x.size() >= 250);

  auto train_mape = [&](const Model& m) {
    std::vector<double> pred(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) pred[i] = predict_curve(m, x[i]);
    return mape(pred, y);
  };
  const auto deg3 = train_mape(fit_exp_poly(x, y, 3));
  const auto deg8 = train_mape(fit_exp_poly(x, y, 8));
  const auto mm1k_fit = fit_basis(BasisKind::mm1k, 32, x, y);
  for (double a : mm1k_fit.alphas) REQUIRE(std::isfinite(a));
  const auto mm = train_mape(mm1k_fit);
  REQUIRE(deg8 < deg3);
  REQUIRE(mm < deg3);
}

// --- implicit ----------------------------------------------------------------

TEST_CASE("implicit objective gradient matches finite differences") {
  Xoshiro256pp rng(12);
  const int N = 5;
  std::vector<double> u, v, yo;
  for (int i = 0; i < 40; ++i) {
    u.push_back(rng.uniform01());
    v.push_back(rng.uniform01());
    yo.push_back(0.5 + v.back());
  }
  std::sort(u.begin(), u.end());
  for (auto loss : {ImplicitLoss::mse}) {
    detail::ImplicitObjective obj(u, v, yo, 2.0, N, 3e-4, loss);
    std::vector<double> p(2 * N);
    for (auto& pv : p) pv = 0.2 + 0.6 * rng.uniform01();
    std::vector<double> grad;
    obj.value(p, &grad);
    for (int j = 0; j < 2 * N; ++j) {
      const double h = 1e-6;
      auto pp = p;
      pp[j] += h;
      const double up = obj.value(pp, nullptr);
      pp[j] -= 2 * h;
      const double dn = obj.value(pp, nullptr);
      const double fd = (up - dn) / (2 * h);
      REQUIRE(grad[j] == Approx(fd).margin(1e-5).epsilon(1e-4));
    }
  }
}

TEST_CASE("implicit fit nails the diagonal") {
  std::vector<double> x, y;
  for (int i = 0; i <= 100; ++i) {
    x.push_back(i / 100.0);
    y.push_back(i / 100.0);
  }
  ImplicitFitOptions opt;
  opt.N = 2;
  opt.alpha = 0.0;
  const auto fit = fit_implicit(x, y, opt);
  const auto& m = fit.model;
  REQUIRE(fit.objective < 1e-10);  // train MSE in normalized space
  // knots land on the diagonal
  for (std::size_t n = 0; n < m.knot_a.size(); ++n)
    REQUIRE(m.knot_b[n] == Approx(m.knot_a[n]).margin(1e-6));
  // constraints hold exactly
  REQUIRE(m.knot_a.front() == 0.0);
  REQUIRE(m.knot_a.back() == 1.0);
  REQUIRE(m.knot_b.back() == 1.0);
  for (std::size_t n = 1; n < m.knot_a.size(); ++n)
    REQUIRE(m.knot_a[n] >= m.knot_a[n - 1]);
  REQUIRE(m.parameter_count() == 4);  // 2N
  // interpolation and extrapolation by terminal segments
  REQUIRE(m.predict(0.5) == Approx(0.5).margin(1e-6));
  REQUIRE(m.predict(1.2) == Approx(1.2).margin(1e-5));
}

TEST_CASE("implicit fit constraint satisfaction on curved data") {
  Xoshiro256pp rng(14);
  std::vector<double> x, y;
  for (int i = 0; i < 600; ++i) {
    const double v = rng.uniform01() * 0.98;
    x.push_back(v);
    y.push_back(mean_occupancy_mm1k(v / (1.0 - v + 1e-9), 32) +
                0.05 * rng.uniform01());
  }
  ImplicitFitOptions opt;
  opt.N = 12;
  opt.alpha = 1e-5;
  opt.max_iterations = 800;
  const auto fit = fit_implicit(x, y, opt);
  const auto& m = fit.model;
  REQUIRE(m.knot_a.front() == 0.0);
  REQUIRE(m.knot_a.back() == 1.0);
  REQUIRE(m.knot_b.back() == 1.0);
  for (std::size_t n = 1; n < m.knot_a.size(); ++n)
    REQUIRE(m.knot_a[n] >= m.knot_a[n - 1]);
  for (double b : m.knot_b) {
    REQUIRE(b >= 0.0);
    REQUIRE(b <= 1.0);
  }
  REQUIRE(m.parameter_count() == 24);
  REQUIRE(fit.iterations > 0);
}

TEST_CASE("alpha has negligible effect at 1e-5") {
  Xoshiro256pp rng(16);
  std::vector<double> x, y;
  for (int i = 0; i < 800; ++i) {
    const double v = rng.uniform01() * 0.97;
    x.push_back(v);
    y.push_back(std::max(1e-3, mean_occupancy_mm1k(v / std::max(1.0 - v, 1e-6), 32) *
                                    (1.0 + 0.05 * (rng.uniform01() - 0.5))));
  }
  ImplicitFitOptions opt;
  opt.N = 12;
  opt.max_iterations = 1200;
  opt.alpha = 0.0;
  const auto a0 = fit_implicit(x, y, opt);
  opt.alpha = 1e-5;
  const auto a1 = fit_implicit(x, y, opt);
  auto train_mape = [&](const ImplicitModel& m) {
    std::vector<double> pred(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) pred[i] = m.predict(x[i]);
    return mape(pred, y);
  };
  REQUIRE(std::abs(train_mape(a0.model) - train_mape(a1.model)) < 0.1);
}

TEST_CASE("implicit fit validates its inputs") {
  const std::vector<double> x = {0.0, 0.5, 1.0};
  const std::vector<double> y = {0.0, 0.5, 1.0};
  ImplicitFitOptions opt;
  opt.N = 12;  // needs N+1 samples
  REQUIRE_THROWS_AS(fit_implicit(x, y, opt), std::invalid_argument);
  opt.N = 1;
  REQUIRE_THROWS_AS(fit_implicit(x, y, opt), std::invalid_argument);
  opt.N = 2;
  opt.alpha = -1.0;
  REQUIRE_THROWS_AS(fit_implicit(x, y, opt), std::invalid_argument);
}

// --- prediction glue ---------------------------------------------------------

TEST_CASE("predict_occupancy dispatches by model kind") {
  QueueFeatures f{};
  f.pi0 = 0.25;
  f.rho_e = 0.5;

  LinearModel lin;
  lin.feature_names = {"pi0", "L", "rho_e", "Se"};
  lin.weights = {1.0, 0.0, 0.0, 0.0};
  lin.intercept = 0.0;
  REQUIRE(predict_occupancy(Model{lin}, f) == Approx(0.25));

  ExpPolyModel ep;
  ep.coefficients = {0.0, 2.0};
  REQUIRE(predict_occupancy(Model{ep}, QueueFeatures{}) == Approx(1.0));

  ImplicitModel im;
  im.knot_a = {0.0, 0.5, 1.0};
  im.knot_b = {0.0, 0.5, 1.0};
  REQUIRE(predict_occupancy(Model{im}, f) == Approx(0.5));

  // repeated calls are identical
  const double p1 = predict_occupancy(Model{im}, f);
  const double p2 = predict_occupancy(Model{im}, f);
  REQUIRE(p1 == p2);
}

TEST_CASE("linear prediction rejects unknown feature names") {
  LinearModel lin;
  lin.feature_names = {"nope"};
  lin.weights = {1.0};
  QueueFeatures f{};
  REQUIRE_THROWS_AS(predict_occupancy(Model{lin}, f), std::invalid_argument);
}

TEST_CASE("parameter counts for the benchmark table") {
  LinearModel lin;
  lin.feature_names = {"pi0", "L", "rho_e", "Se"};
  lin.weights = {0, 0, 0, 0};
  REQUIRE(parameter_count(Model{lin}) == 5);
  REQUIRE(parameter_count_excl_intercept(Model{lin}) == 4);

  BasisModel ba;
  ba.K = 32;
  ba.alphas.assign(33, 0.0);
  REQUIRE(parameter_count(Model{ba}) == 33);

  ImplicitModel im;
  im.knot_a.assign(13, 0.0);
  im.knot_b.assign(13, 0.0);
  REQUIRE(parameter_count(Model{im}) == 24);

  ExpPolyModel ep;
  ep.coefficients.assign(9, 0.0);
  REQUIRE(parameter_count(Model{ep}) == 9);
}
