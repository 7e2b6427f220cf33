#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace qpred {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Observed inputs for one M/M/1/K-style link. K counts every packet held by
/// the system, including the one in service. When mu is not given it is
/// derived as capacity / avg_packet_size (units: bits/s over bits).
struct LinkTraffic {
  double lambda = 0.0;  // packets/s
  double mu = 0.0;      // packets/s
  int K = 1;
  std::optional<double> capacity;         // bits/s
  std::optional<double> avg_packet_size;  // bits

  static LinkTraffic from_rates(double lambda, double mu, int K) {
    LinkTraffic t;
    t.lambda = lambda;
    t.mu = mu;
    t.K = K;
    t.validate();
    return t;
  }

  static LinkTraffic from_capacity(double lambda, double capacity,
                                   double avg_packet_size, int K) {
    LinkTraffic t;
    t.lambda = lambda;
    t.capacity = capacity;
    t.avg_packet_size = avg_packet_size;
    t.K = K;
    require(capacity > 0 && std::isfinite(capacity),
            "LinkTraffic: capacity must be positive");
    require(avg_packet_size > 0 && std::isfinite(avg_packet_size),
            "LinkTraffic: avg_packet_size must be positive");
    t.mu = capacity / avg_packet_size;
    t.validate();
    return t;
  }

  void validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0,
            "LinkTraffic: lambda must be finite and >= 0");
    require(std::isfinite(mu) && mu > 0.0, "LinkTraffic: mu must be positive");
    require(K >= 1, "LinkTraffic: K must be >= 1");
    if (capacity) require(*capacity > 0, "LinkTraffic: capacity must be positive");
    if (avg_packet_size)
      require(*avg_packet_size > 0, "LinkTraffic: avg_packet_size must be positive");
  }
};

/// Analytic feature vector for one link. rho_e = 1 - pi0 is an identity of
/// the effective-arrival-rate equation and is asserted by featurize().
struct QueueFeatures {
  double rho = 0.0;       // offered utilization lambda/mu
  double pi0 = 1.0;       // steady-state empty probability
  double piK = 0.0;       // steady-state full (loss) probability
  double lambda_e = 0.0;  // admitted arrival rate
  double rho_e = 0.0;     // effective utilization lambda_e/mu
  double L = 0.0;         // rho + pi0 * sum_{k=1..K} k rho^k
  double Se = 0.0;        // sum_{k=1..K} k rho_e^k
};

namespace detail {

// sum_{k=1}^{K} r^k; all terms positive, no cancellation.
inline double geometric_tail(double r, int K) {
  double term = 1.0, sum = 0.0;
  for (int k = 1; k <= K; ++k) {
    term *= r;
    sum += term;
  }
  return sum;
}

// sum_{k=0}^{K} r^k, evaluated as the plain sum so it is continuous at r=1.
inline double geometric_sum(double r, int K) {
  return 1.0 + geometric_tail(r, K);
}

// sum_{k=1}^{K} k r^k
inline double weighted_geometric_sum(double r, int K) {
  double term = 1.0, sum = 0.0;
  for (int k = 1; k <= K; ++k) {
    term *= r;
    sum += k * term;
  }
  return sum;
}

// 1 - pi0 = (sum_{k=1..K} rho^k) / (sum_{k=0..K} rho^k), formed from the
// tail so it stays accurate when pi0 is close to 1.
inline double complement_pi0(double rho, int K) {
  const double tail = geometric_tail(rho, K);
  return tail / (1.0 + tail);
}

// 1 - piK, same tail trick in powers of 1/rho.
inline double complement_piK(double rho, int K) {
  if (rho == 0.0) return 1.0;
  const double tail = geometric_tail(1.0 / rho, K);
  return tail / (1.0 + tail);
}

}  // namespace detail

inline double utilization(double lambda, double mu) {
  require(std::isfinite(lambda) && lambda >= 0.0,
          "utilization: lambda must be finite and >= 0");
  require(std::isfinite(mu) && mu > 0.0, "utilization: mu must be positive");
  return lambda / mu;
}

/// Empty probability of M/M/1/K: (1-rho)/(1-rho^{K+1}). Written as
/// 1 / sum_{k=0..K} rho^k, which is the same rational function with the
/// removable singularity at rho=1 already filled in (value 1/(K+1)).
inline double pi0(double rho, int K) {
  require(std::isfinite(rho) && rho >= 0.0, "pi0: rho must be finite and >= 0");
  require(K >= 1, "pi0: K must be >= 1");
  return 1.0 / detail::geometric_sum(rho, K);
}

/// Full probability of M/M/1/K: rho^K * pi0(rho, K). Dividing numerator and
/// denominator by rho^K gives 1 / sum_{k=0..K} rho^{-k}, which stays in
/// range for rho > 1 where rho^K alone would overflow.
inline double piK(double rho, int K) {
  require(std::isfinite(rho) && rho >= 0.0, "piK: rho must be finite and >= 0");
  require(K >= 1, "piK: K must be >= 1");
  if (rho == 0.0) return 0.0;
  return 1.0 / detail::geometric_sum(1.0 / rho, K);
}

/// Admitted arrival rate lambda_e = lambda (1 - piK) = mu (1 - pi0).
/// Both evaluations are carried out and must agree to 1e-12 relative; a
/// violation signals inconsistent (lambda, mu, rho) inputs.
inline double effective_arrival_rate(double lambda, double mu, double rho, int K) {
  require(std::isfinite(lambda) && lambda >= 0.0,
          "effective_arrival_rate: lambda must be finite and >= 0");
  require(std::isfinite(mu) && mu > 0.0,
          "effective_arrival_rate: mu must be positive");
  require(std::isfinite(rho) && rho >= 0.0,
          "effective_arrival_rate: rho must be finite and >= 0");
  require(std::abs(rho - lambda / mu) <= 1e-12 * std::max(1.0, rho),
          "effective_arrival_rate: rho is not lambda/mu");
  const double via_loss = lambda * detail::complement_piK(rho, K);
  const double via_empty = mu * detail::complement_pi0(rho, K);
  const double scale = std::max(std::abs(via_loss), std::abs(via_empty));
  if (std::abs(via_loss - via_empty) > 1e-12 * scale)
    throw std::invalid_argument(
        "effective_arrival_rate: identity lambda(1-piK) = mu(1-pi0) violated");
  return via_loss;
}

/// Variant for callers holding a measured drop ratio instead of trusting the
/// analytic piK. Not used by featurize().
inline double effective_arrival_rate_from_loss(double lambda, double drop_ratio) {
  require(std::isfinite(lambda) && lambda >= 0.0,
          "effective_arrival_rate_from_loss: lambda must be finite and >= 0");
  require(drop_ratio >= 0.0 && drop_ratio <= 1.0,
          "effective_arrival_rate_from_loss: drop ratio outside [0,1]");
  return lambda * (1.0 - drop_ratio);
}

/// Occupancy feature L = rho + pi0 * sum_{k=1..K} k rho^k. Note the leading
/// rho term: this is the feature as used for regression, not the textbook
/// M/M/1/K mean system size (see mean_occupancy_mm1k).
inline double feature_L(double rho, int K) {
  return rho + pi0(rho, K) * detail::weighted_geometric_sum(rho, K);
}

/// Textbook M/M/1/K mean number in system, pi0 * sum_{k=1..K} k rho^k.
inline double mean_occupancy_mm1k(double rho, int K) {
  return pi0(rho, K) * detail::weighted_geometric_sum(rho, K);
}

/// Unnormalized effective-occupancy feature Se = sum_{k=1..K} k rho_e^k.
inline double feature_Se(double rho_e, int K) {
  require(std::isfinite(rho_e) && rho_e >= 0.0 && rho_e < 1.0,
          "feature_Se: rho_e must lie in [0, 1)");
  require(K >= 1, "feature_Se: K must be >= 1");
  return detail::weighted_geometric_sum(rho_e, K);
}

inline QueueFeatures featurize(const LinkTraffic& link) {
  link.validate();
  QueueFeatures f;
  f.rho = utilization(link.lambda, link.mu);
  f.pi0 = pi0(f.rho, link.K);
  f.piK = piK(f.rho, link.K);
  f.lambda_e = effective_arrival_rate(link.lambda, link.mu, f.rho, link.K);
  f.rho_e = f.lambda_e / link.mu;
  if (std::abs(f.rho_e - (1.0 - f.pi0)) > 1e-12)
    throw std::invalid_argument("featurize: rho_e != 1 - pi0");
  f.L = feature_L(f.rho, link.K);
  f.Se = feature_Se(f.rho_e, link.K);
  return f;
}

/// featurize() with lambda_e taken from a measured drop ratio rather than the
/// analytic full probability. rho, pi0, piK and L stay analytic.
inline QueueFeatures featurize_with_measured_loss(const LinkTraffic& link,
                                                  double drop_ratio) {
  link.validate();
  QueueFeatures f;
  f.rho = utilization(link.lambda, link.mu);
  f.pi0 = pi0(f.rho, link.K);
  f.piK = piK(f.rho, link.K);
  f.lambda_e = effective_arrival_rate_from_loss(link.lambda, drop_ratio);
  f.rho_e = f.lambda_e / link.mu;
  require(f.rho_e >= 0.0 && f.rho_e < 1.0,
          "featurize_with_measured_loss: measured rho_e outside [0, 1)");
  f.L = feature_L(f.rho, link.K);
  f.Se = feature_Se(f.rho_e, link.K);
  return f;
}

/// Occupancy -> per-link delay: d = y * E(packet bits) / capacity.
inline double occupancy_to_delay(double y_hat, double avg_packet_size,
                                 double capacity) {
  require(std::isfinite(y_hat) && y_hat >= 0.0,
          "occupancy_to_delay: occupancy must be finite and >= 0");
  require(std::isfinite(avg_packet_size) && avg_packet_size > 0.0,
          "occupancy_to_delay: packet size must be positive");
  require(std::isfinite(capacity) && capacity > 0.0,
          "occupancy_to_delay: capacity must be positive");
  return y_hat * avg_packet_size / capacity;
}

}  // namespace qpred
