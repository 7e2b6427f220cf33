#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

namespace qpred {

/// Mean absolute percentage error, in percent. Zero targets are an error:
/// silently skipping them would bias model comparisons. Callers with zero
/// labels should pre-filter (see drop_zero_occupancy in eval.hpp).
inline double mape(std::span<const double> y_hat, std::span<const double> y) {
  if (y_hat.size() != y.size())
    throw std::invalid_argument("mape: length mismatch");
  if (y.empty()) throw std::invalid_argument("mape: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) throw std::invalid_argument("mape: zero target");
    sum += std::abs((y_hat[i] - y[i]) / y[i]);
  }
  return 100.0 * sum / static_cast<double>(y.size());
}

inline double mse(std::span<const double> y_hat, std::span<const double> y) {
  if (y_hat.size() != y.size())
    throw std::invalid_argument("mse: length mismatch");
  if (y.empty()) throw std::invalid_argument("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y_hat[i] - y[i];
    sum += e * e;
  }
  return sum / static_cast<double>(y.size());
}

}  // namespace qpred
