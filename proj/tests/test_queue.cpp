#include <catch2/catch_amalgamated.hpp>

#include "qpred/queue.hpp"
#include "qpred/rng.hpp"

using namespace qpred;
using Catch::Approx;

namespace {

// Independent oracle: solve the birth-death balance equations by the
// recurrence pi_{k+1} = rho * pi_k and normalize. Returns the full state
// vector, so every closed-form quantity can be cross-checked against it.
std::vector<double> balance_oracle(double rho, int K) {
  std::vector<double> pi(K + 1);
  pi[0] = 1.0;
  double norm = 1.0;
  for (int k = 1; k <= K; ++k) {
    pi[k] = pi[k - 1] * rho;
    norm += pi[k];
  }
  for (auto& p : pi) p /= norm;
  return pi;
}

double oracle_mean(const std::vector<double>& pi) {
  double m = 0.0;
  for (std::size_t k = 1; k < pi.size(); ++k) m += k * pi[k];
  return m;
}

}  // namespace

TEST_CASE("utilization") {
  REQUIRE(utilization(1.0, 2.0) == 0.5);
  REQUIRE(utilization(0.0, 5.0) == 0.0);
  REQUIRE(utilization(3.0, 2.0) == 1.5);  // overload stays well-defined
  REQUIRE_THROWS_AS(utilization(1.0, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(utilization(-1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(utilization(std::nan(""), 1.0), std::invalid_argument);
}

TEST_CASE("pi0 closed form") {
  REQUIRE(pi0(0.0, 5) == 1.0);
  REQUIRE(pi0(1.0, 5) == Approx(1.0 / 6.0).epsilon(1e-14));
  // oracle: birth-death balance, normalized
  const auto pi = balance_oracle(0.5, 2);
  REQUIRE(pi[0] == Approx(4.0 / 7.0).epsilon(1e-14));
  REQUIRE(pi0(0.5, 2) == Approx(pi[0]).epsilon(1e-14));
  REQUIRE_THROWS_AS(pi0(-0.1, 5), std::invalid_argument);
  REQUIRE_THROWS_AS(pi0(0.5, 0), std::invalid_argument);
}

TEST_CASE("piK closed form") {
  REQUIRE(piK(0.0, 3) == 0.0);
  REQUIRE(piK(1.0, 5) == Approx(1.0 / 6.0).epsilon(1e-14));
  const auto pi = balance_oracle(0.5, 2);
  REQUIRE(pi[2] == Approx(1.0 / 7.0).epsilon(1e-14));
  REQUIRE(piK(0.5, 2) == Approx(pi[2]).epsilon(1e-14));
  REQUIRE_THROWS_AS(piK(-2.0, 3), std::invalid_argument);
}

TEST_CASE("closed forms agree with the balance oracle on a random grid") {
  Xoshiro256pp rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const double rho = rng.uniform01() * 3.0;
    const int K = 1 + static_cast<int>(rng.bounded(64));
    const auto pi = balance_oracle(rho, K);
    REQUIRE(pi0(rho, K) == Approx(pi[0]).epsilon(1e-12));
    REQUIRE(piK(rho, K) == Approx(pi[K]).epsilon(1e-12));
    REQUIRE(mean_occupancy_mm1k(rho, K) == Approx(oracle_mean(pi)).margin(1e-12));
  }
}

TEST_CASE("steady-state vector is normalized") {
  Xoshiro256pp rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const double rho = rng.uniform01() * 2.0;
    const int K = 1 + static_cast<int>(rng.bounded(48));
    const double p0 = pi0(rho, K);
    double sum = 0.0, term = p0;
    for (int k = 0; k <= K; ++k) {
      sum += term;
      term *= rho;
    }
    REQUIRE(sum == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("pi0 is continuous at rho = 1") {
  for (int K : {1, 2, 5, 32, 100}) {
    const double below = pi0(1.0 - 1e-9, K);
    const double above = pi0(1.0 + 1e-9, K);
    REQUIRE(std::abs(below - above) < 1e-6);
    REQUIRE(pi0(1.0, K) == Approx(1.0 / (K + 1)).epsilon(1e-14));
  }
}

TEST_CASE("pi0 decreasing, piK increasing in rho") {
  for (int K : {1, 3, 32}) {
    double prev0 = pi0(0.0, K);
    double prevK = piK(0.0, K);
    for (double rho = 0.05; rho < 2.5; rho += 0.05) {
      const double p0 = pi0(rho, K);
      const double pk = piK(rho, K);
      REQUIRE(p0 < prev0);
      REQUIRE(pk > prevK);
      prev0 = p0;
      prevK = pk;
    }
  }
}

TEST_CASE("effective arrival rate") {
  REQUIRE(effective_arrival_rate(1.0, 2.0, 0.5, 2) ==
          Approx(6.0 / 7.0).epsilon(1e-14));
  // cross-check the other route of the identity explicitly
  REQUIRE(2.0 * (1.0 - pi0(0.5, 2)) == Approx(6.0 / 7.0).epsilon(1e-14));
  REQUIRE(effective_arrival_rate(0.0, 1.0, 0.0, 4) == 0.0);
  REQUIRE(effective_arrival_rate(1.0, 1.0, 1.0, 5) ==
          Approx(5.0 / 6.0).epsilon(1e-14));
  // inconsistent rho
  REQUIRE_THROWS_AS(effective_arrival_rate(1.0, 2.0, 0.75, 2),
                    std::invalid_argument);
}

TEST_CASE("effective arrival rate identity on random inputs") {
  Xoshiro256pp rng(13);
  for (int trial = 0; trial < 2000; ++trial) {
    const double lambda = rng.uniform01() * 100.0;
    const double mu = 1e-3 + rng.uniform01() * 100.0;
    const int K = 1 + static_cast<int>(rng.bounded(64));
    const double rho = lambda / mu;
    const double le = effective_arrival_rate(lambda, mu, rho, K);
    const double other = mu * (1.0 - pi0(rho, K));
    REQUIRE(std::abs(le - other) <=
            1e-12 * std::max({std::abs(le), std::abs(other), 1e-300}));
  }
}

TEST_CASE("feature L") {
  REQUIRE(feature_L(0.0, 8) == 0.0);
  // direct evaluation of the stated formula
  {
    const double p0 = 4.0 / 7.0;
    const double expected = 0.5 + p0 * (1 * 0.5 + 2 * 0.25);
    REQUIRE(expected == Approx(1.0714285714285714).epsilon(1e-12));
    REQUIRE(feature_L(0.5, 2) == Approx(expected).epsilon(1e-12));
  }
  REQUIRE(feature_L(1.0, 2) == Approx(2.0).epsilon(1e-14));  // 1 + (1/3)(1+2)
}

TEST_CASE("feature Se") {
  REQUIRE(feature_Se(0.0, 32) == 0.0);
  REQUIRE(feature_Se(0.5, 2) == Approx(1.0).epsilon(1e-14));
  REQUIRE(feature_Se(0.9, 1) == Approx(0.9).epsilon(1e-14));
  REQUIRE_THROWS_AS(feature_Se(1.0, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(feature_Se(-0.1, 4), std::invalid_argument);
}

TEST_CASE("featurize chains the components") {
  const auto f = featurize(LinkTraffic::from_rates(1.0, 2.0, 2));
  REQUIRE(f.rho == 0.5);
  REQUIRE(f.pi0 == Approx(4.0 / 7.0).epsilon(1e-14));
  REQUIRE(f.piK == Approx(1.0 / 7.0).epsilon(1e-14));
  REQUIRE(f.lambda_e == Approx(6.0 / 7.0).epsilon(1e-14));
  REQUIRE(f.rho_e == Approx(3.0 / 7.0).epsilon(1e-14));
  REQUIRE(f.L == Approx(1.0714285714285714).epsilon(1e-12));
  const double re = 3.0 / 7.0;
  REQUIRE(f.Se == Approx(re + 2.0 * re * re).epsilon(1e-12));
}

TEST_CASE("featurize of idle traffic") {
  const auto f = featurize(LinkTraffic::from_rates(0.0, 1.0, 32));
  REQUIRE(f.rho == 0.0);
  REQUIRE(f.pi0 == 1.0);
  REQUIRE(f.rho_e == 0.0);
  REQUIRE(f.L == 0.0);
  REQUIRE(f.Se == 0.0);
}

TEST_CASE("featurize invariants on random inputs") {
  Xoshiro256pp rng(17);
  for (int trial = 0; trial < 4000; ++trial) {
    // two regimes, both keeping rho^K representable below 1
    const bool deep = trial % 2 == 0;
    const double rho = rng.uniform01() * (deep ? 1.2 : 3.0);
    const int K = 1 + static_cast<int>(rng.bounded(deep ? 64 : 20));
    const double mu = 0.01 + rng.uniform01() * 50.0;
    const double lambda = rho * mu;
    const auto f = featurize(LinkTraffic::from_rates(lambda, mu, K));
    REQUIRE(std::abs(f.rho_e - (1.0 - f.pi0)) <= 1e-12);
    REQUIRE(f.rho_e < 1.0);
    REQUIRE(f.rho_e >= 0.0);
    REQUIRE(f.lambda_e <= std::min(lambda, mu) * (1.0 + 1e-12));
    REQUIRE(f.pi0 > 0.0);
    REQUIRE(f.pi0 <= 1.0);
    REQUIRE(f.piK >= 0.0);
    REQUIRE(f.piK < 1.0);
    REQUIRE(std::isfinite(f.L));
    REQUIRE(std::isfinite(f.Se));
  }
}

TEST_CASE("featurize with a measured drop ratio") {
  const auto f = featurize_with_measured_loss(LinkTraffic::from_rates(1.0, 2.0, 2),
                                              0.25);
  REQUIRE(f.lambda_e == Approx(0.75).epsilon(1e-14));
  REQUIRE(f.rho_e == Approx(0.375).epsilon(1e-14));
  REQUIRE_THROWS_AS(
      featurize_with_measured_loss(LinkTraffic::from_rates(1.0, 2.0, 2), 1.5),
      std::invalid_argument);
}

TEST_CASE("occupancy to delay") {
  REQUIRE(occupancy_to_delay(2.0, 1000.0, 1e6) == Approx(0.002).epsilon(1e-14));
  REQUIRE(occupancy_to_delay(0.0, 123.0, 456.0) == 0.0);
  REQUIRE(occupancy_to_delay(1.0, 700.0, 700.0) == 1.0);
  REQUIRE_THROWS_AS(occupancy_to_delay(1.0, 0.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(occupancy_to_delay(1.0, 1.0, -2.0), std::invalid_argument);
  REQUIRE_THROWS_AS(occupancy_to_delay(-1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("link traffic validation") {
  REQUIRE_THROWS_AS(LinkTraffic::from_rates(1.0, -1.0, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(LinkTraffic::from_rates(1.0, 1.0, 0), std::invalid_argument);
  const auto t = LinkTraffic::from_capacity(1.0, 1e6, 1000.0, 8);
  REQUIRE(t.mu == Approx(1000.0).epsilon(1e-14));
  REQUIRE_THROWS_AS(LinkTraffic::from_capacity(1.0, 0.0, 1000.0, 8),
                    std::invalid_argument);
}
