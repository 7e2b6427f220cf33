#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qpred/lsq.hpp"
#include "qpred/queue.hpp"

namespace qpred {

// ---------------------------------------------------------------------------
// Model types

struct LinearModel {
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double intercept = 0.0;
  bool rank_warning = false;

  int parameter_count() const { return static_cast<int>(weights.size()) + 1; }
  int weight_count() const { return static_cast<int>(weights.size()); }

  double predict_row(std::span<const double> row) const {
    if (row.size() != weights.size())
      throw std::invalid_argument("LinearModel: feature row size mismatch");
    double y = intercept;
    for (std::size_t i = 0; i < weights.size(); ++i) y += weights[i] * row[i];
    return y;
  }
};

/// y = exp(p(x)) with p a dense polynomial, coefficients low order first.
struct ExpPolyModel {
  std::vector<double> coefficients;

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
  int parameter_count() const { return static_cast<int>(coefficients.size()); }

  double log_predict(double x) const {
    double p = 0.0;
    for (std::size_t i = coefficients.size(); i-- > 0;)
      p = p * x + coefficients[i];
    return p;
  }
  double predict(double x) const { return std::exp(log_predict(x)); }
};

enum class BasisKind { mm1k, bernstein };

inline const char* to_string(BasisKind k) {
  return k == BasisKind::mm1k ? "mm1k" : "bernstein";
}

struct BasisModel {
  BasisKind kind = BasisKind::bernstein;
  int K = 32;
  std::vector<double> alphas;  // K+1 coefficients

  int parameter_count() const { return K + 1; }
  double predict(double x) const;
  void predict_batch(std::span<const double> x, std::span<double> out) const;
};

/// Piecewise-linear curve through knots (a_n, b_n) in min-max normalized
/// coordinates; a_0 = 0, a_N = b_N = 1, a nondecreasing. Outside [0,1] the
/// terminal segments extend linearly.
struct ImplicitModel {
  std::vector<double> knot_a, knot_b;
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  bool converged = true;

  int segment_count() const { return static_cast<int>(knot_a.size()) - 1; }
  int parameter_count() const { return 2 * segment_count(); }

  double predict(double x) const {
    const int N = segment_count();
    const double u = (x - x_min) / (x_max - x_min);
    auto it = std::upper_bound(knot_a.begin(), knot_a.end(), u);
    int n = static_cast<int>(it - knot_a.begin()) - 1;
    n = std::clamp(n, 0, N - 1);
    constexpr double kTinyLen = 1e-15;
    if (knot_a[n + 1] - knot_a[n] < kTinyLen) {
      int left = n;
      while (left > 0 && knot_a[left + 1] - knot_a[left] < kTinyLen) --left;
      if (knot_a[left + 1] - knot_a[left] >= kTinyLen) {
        n = left;
      } else {
        while (n < N - 1 && knot_a[n + 1] - knot_a[n] < kTinyLen) ++n;
      }
    }
    const double len = knot_a[n + 1] - knot_a[n];
    const double w = (u - knot_a[n]) / len;
    const double v = knot_b[n] + (knot_b[n + 1] - knot_b[n]) * w;
    return y_min + v * (y_max - y_min);
  }
};

// ---------------------------------------------------------------------------
// Linear regression

inline LinearModel fit_linear(const std::vector<std::string>& feature_names,
                              const std::vector<std::vector<double>>& columns,
                              const std::vector<double>& y) {
  require(!feature_names.empty(), "fit_linear: no features");
  require(feature_names.size() == columns.size(),
          "fit_linear: names/columns mismatch");
  require(!y.empty(), "fit_linear: empty data");
  const std::size_t rows = y.size();
  for (const auto& c : columns)
    require(c.size() == rows, "fit_linear: ragged columns");
  require(rows >= columns.size() + 1,
          "fit_linear: need at least cols+1 samples");

  const auto p = static_cast<Eigen::Index>(columns.size());
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows), p + 1);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      require(std::isfinite(columns[j][i]), "fit_linear: non-finite feature");
      A(i, j) = columns[j][i];
    }
    require(std::isfinite(y[i]), "fit_linear: non-finite target");
    A(i, p) = 1.0;
    rhs(i) = y[i];
  }
  const auto sol = solve_least_squares(A, rhs);
  LinearModel m;
  m.feature_names = feature_names;
  m.weights.assign(sol.x.data(), sol.x.data() + p);
  m.intercept = sol.x(p);
  m.rank_warning = sol.rank_deficient;
  return m;
}

// ---------------------------------------------------------------------------
// Exponential-of-polynomial regression (fits log y)

inline ExpPolyModel fit_exp_poly(const std::vector<double>& x,
                                 const std::vector<double>& y, int degree) {
  require(degree >= 1 && degree <= 12,
          "fit_exp_poly: degree must be in [1, 12]");
  require(!x.empty() && x.size() == y.size(), "fit_exp_poly: bad data shape");
  require(x.size() >= static_cast<std::size_t>(degree) + 1,
          "fit_exp_poly: need degree+1 samples");
  const auto rows = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd A(rows, degree + 1);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    require(std::isfinite(x[i]), "fit_exp_poly: non-finite input");
    if (!(y[i] > 0.0) || !std::isfinite(y[i]))
      throw std::invalid_argument(
          "fit_exp_poly: targets must be positive (log transform)");
    double t = 1.0;
    for (int j = 0; j <= degree; ++j) {
      A(i, j) = t;
      t *= x[i];
    }
    rhs(i) = std::log(y[i]);
  }
  ExpPolyModel m;
  const auto sol = solve_least_squares(A, rhs);
  m.coefficients.assign(sol.x.data(), sol.x.data() + degree + 1);
  return m;
}

// ---------------------------------------------------------------------------
// Basis expansions on [0, 1]

namespace detail {

// C(K, n) as a double; exact for every K used here.
inline double binomial(int K, int n) {
  n = std::min(n, K - n);
  double c = 1.0;
  for (int i = 1; i <= n; ++i) c = c * (K - n + i) / i;
  return c;
}

// phi_n(x) = x^n (1-x) / (1 - x^{K+1}), written with the geometric sum in
// the denominator so x = 1 evaluates to the limit 1/(K+1).
inline double mm1k_phi(int n, int K, double x) {
  return std::pow(x, n) / geometric_sum(x, K);
}

inline double mm1k_gamma(int n, int K) {
  return mm1k_phi(n, K, static_cast<double>(n) / (n + 1));
}

/// Evaluates all K+1 basis functions at one point in O(K).
struct BasisRowEvaluator {
  BasisKind kind;
  int K;
  std::vector<double> scale;  // binomials, or 1/gamma_n

  BasisRowEvaluator(BasisKind kind, int K) : kind(kind), K(K), scale(K + 1) {
    for (int n = 0; n <= K; ++n)
      scale[n] = kind == BasisKind::bernstein ? binomial(K, n)
                                              : 1.0 / mm1k_gamma(n, K);
  }

  void operator()(double x, double* out) const {
    if (kind == BasisKind::bernstein) {
      // forward powers of x, backward powers of (1-x)
      double t = 1.0;
      for (int n = 0; n <= K; ++n) {
        out[n] = t * scale[n];
        t *= x;
      }
      t = 1.0;
      for (int n = K; n >= 0; --n) {
        out[n] *= t;
        t *= 1.0 - x;
      }
    } else {
      const double s = geometric_sum(x, K);
      double t = 1.0;
      for (int n = 0; n <= K; ++n) {
        out[n] = t / s * scale[n];
        t *= x;
      }
    }
  }
};

}  // namespace detail

/// Single basis function value. mm1k: f_n = phi_n / gamma_n with
/// gamma_n = phi_n(n/(n+1)); bernstein: C(K,n) x^n (1-x)^{K-n}.
inline double basis_value(BasisKind kind, int n, int K, double x) {
  require(K >= 1, "basis_value: K must be >= 1");
  require(n >= 0 && n <= K, "basis_value: n outside [0, K]");
  require(std::isfinite(x), "basis_value: non-finite x");
  if (kind == BasisKind::bernstein) {
    require(x >= 0.0 && x <= 1.0, "basis_value: bernstein needs x in [0, 1]");
    return detail::binomial(K, n) * std::pow(x, n) * std::pow(1.0 - x, K - n);
  }
  require(x >= 0.0 && x <= 1.0, "basis_value: mm1k needs x in [0, 1]");
  return detail::mm1k_phi(n, K, x) / detail::mm1k_gamma(n, K);
}

inline double BasisModel::predict(double x) const {
  detail::BasisRowEvaluator eval(kind, K);
  std::vector<double> row(K + 1);
  eval(x, row.data());
  double y = 0.0;
  for (int n = 0; n <= K; ++n) y += alphas[n] * row[n];
  return y;
}

inline void BasisModel::predict_batch(std::span<const double> x,
                                      std::span<double> out) const {
  require(x.size() == out.size(), "predict_batch: size mismatch");
  detail::BasisRowEvaluator eval(kind, K);
  std::vector<double> row(K + 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    eval(x[i], row.data());
    double y = 0.0;
    for (int n = 0; n <= K; ++n) y += alphas[n] * row[n];
    out[i] = y;
  }
}

inline BasisModel fit_basis(BasisKind kind, int K, const std::vector<double>& x,
                            const std::vector<double>& y) {
  require(K >= 1, "fit_basis: K must be >= 1");
  require(x.size() == y.size(), "fit_basis: bad data shape");
  require(x.size() >= static_cast<std::size_t>(K) + 2,
          "fit_basis: need at least K+2 samples");
  const auto rows = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd A(rows, K + 1);
  Eigen::VectorXd rhs(rows);
  detail::BasisRowEvaluator eval(kind, K);
  std::vector<double> row(K + 1);
  for (Eigen::Index i = 0; i < rows; ++i) {
    require(x[i] >= 0.0 && x[i] <= 1.0 && std::isfinite(x[i]),
            "fit_basis: inputs must lie in [0, 1]");
    require(std::isfinite(y[i]), "fit_basis: non-finite target");
    eval(x[i], row.data());
    for (int n = 0; n <= K; ++n) A(i, n) = row[n];
    rhs(i) = y[i];
  }
  BasisModel m;
  m.kind = kind;
  m.K = K;
  const auto sol = solve_least_squares(A, rhs);
  m.alphas.assign(sol.x.data(), sol.x.data() + K + 1);
  return m;
}

// ---------------------------------------------------------------------------
// Implicit piecewise-linear fit

enum class ImplicitLoss { mse, mape };

struct ImplicitFitOptions {
  int N = 12;
  double alpha = 1e-5;        // turn-angle penalty weight
  int max_iterations = 3000;  // optimizer budget
  double learning_rate = 0.02;
  ImplicitLoss loss = ImplicitLoss::mse;
};

struct ImplicitFitResult {
  ImplicitModel model;
  int iterations = 0;
  double objective = 0.0;
  bool converged = false;
};

namespace detail {

/// Objective and gradient for the knot fit, in normalized coordinates.
/// Raw parameters: p[0..N-1] hold s_n with abscissa increments d_n = s_n^2
/// (cumulative, normalized to a_N = 1); p[N..2N-1] hold b_0..b_{N-1}; b_N
/// is pinned to 1. Samples must be sorted by u.
class ImplicitObjective {
 public:
  ImplicitObjective(const std::vector<double>& u, const std::vector<double>& v,
                    const std::vector<double>& y_orig, double y_scale, int N,
                    double alpha, ImplicitLoss loss)
      : u_(u), v_(v), y_orig_(y_orig), y_scale_(y_scale), N_(N), alpha_(alpha),
        loss_(loss) {}

  void knots(const std::vector<double>& p, std::vector<double>& a,
             std::vector<double>& b) const {
    a.resize(N_ + 1);
    b.resize(N_ + 1);
    double c = 0.0;
    a[0] = 0.0;
    for (int n = 1; n <= N_; ++n) {
      c += p[n - 1] * p[n - 1] + 1e-12;
      a[n] = c;
    }
    for (int n = 1; n <= N_; ++n) a[n] /= c;
    a[N_] = 1.0;
    for (int n = 0; n < N_; ++n) b[n] = p[N_ + n];
    b[N_] = 1.0;
  }

  double value(const std::vector<double>& p, std::vector<double>* grad) const {
    std::vector<double> a, b;
    knots(p, a, b);
    std::vector<double> ga(N_ + 1, 0.0), gb(N_ + 1, 0.0);
    const auto M = static_cast<double>(u_.size());
    double obj = 0.0;

    int n = 0;
    for (std::size_t i = 0; i < u_.size(); ++i) {
      const double x = u_[i];
      while (n < N_ - 1 && x > a[n + 1]) ++n;
      int seg = n;
      while (seg > 0 && a[seg + 1] - a[seg] < 1e-15) --seg;
      if (a[seg + 1] - a[seg] < 1e-15) {
        seg = n;
        while (seg < N_ - 1 && a[seg + 1] - a[seg] < 1e-15) ++seg;
      }
      const double len = a[seg + 1] - a[seg];
      const double w = (x - a[seg]) / len;
      const double f = b[seg] + (b[seg + 1] - b[seg]) * w;
      double df;  // dObj/df
      if (loss_ == ImplicitLoss::mse) {
        const double e = f - v_[i];
        obj += e * e / M;
        df = 2.0 * e / M;
      } else {
        const double resid = (f - v_[i]) * y_scale_;
        obj += std::abs(resid) / (y_orig_[i] * M);
        df = (resid > 0.0 ? 1.0 : (resid < 0.0 ? -1.0 : 0.0)) * y_scale_ /
             (y_orig_[i] * M);
      }
      if (grad) {
        const double slope = b[seg + 1] - b[seg];
        gb[seg] += df * (1.0 - w);
        gb[seg + 1] += df * w;
        ga[seg] += df * slope * (x - a[seg + 1]) / (len * len);
        ga[seg + 1] += df * slope * (-(x - a[seg])) / (len * len);
      }
    }

    if (alpha_ > 0.0) {
      const double scale = alpha_ / N_;
      for (int k = 0; k + 2 <= N_; ++k) {
        const double ux0 = a[k + 1] - a[k], uy0 = b[k + 1] - b[k];
        const double ux1 = a[k + 2] - a[k + 1], uy1 = b[k + 2] - b[k + 1];
        const double q0 = ux0 * ux0 + uy0 * uy0;
        const double q1 = ux1 * ux1 + uy1 * uy1;
        if (q0 < 1e-18 || q1 < 1e-18) continue;
        const double c = ux0 * uy1 - uy0 * ux1;
        obj += scale * c * c / (q0 * q1);
        if (grad) {
          const double dc = scale * 2.0 * c / (q0 * q1);
          const double dq0 = -scale * c * c / (q0 * q0 * q1);
          const double dq1 = -scale * c * c / (q0 * q1 * q1);
          const double g_ux0 = dc * uy1 + dq0 * 2.0 * ux0;
          const double g_uy0 = dc * (-ux1) + dq0 * 2.0 * uy0;
          const double g_ux1 = dc * (-uy0) + dq1 * 2.0 * ux1;
          const double g_uy1 = dc * ux0 + dq1 * 2.0 * uy1;
          ga[k] -= g_ux0;
          ga[k + 1] += g_ux0 - g_ux1;
          ga[k + 2] += g_ux1;
          gb[k] -= g_uy0;
          gb[k + 1] += g_uy0 - g_uy1;
          gb[k + 2] += g_uy1;
        }
      }
    }

    if (grad) {
      grad->assign(2 * N_, 0.0);
      // chain through a_n = c_n / c_N with increments d_i = s_i^2
      double c_total = 0.0;
      for (int i = 0; i < N_; ++i) c_total += p[i] * p[i] + 1e-12;
      double adot = 0.0;
      for (int k = 1; k <= N_; ++k) adot += ga[k] * a[k];
      // suffix sums of ga over n >= i
      double suffix = 0.0;
      std::vector<double> suf(N_ + 2, 0.0);
      for (int k = N_; k >= 1; --k) {
        suffix += ga[k];
        suf[k] = suffix;
      }
      for (int i = 1; i <= N_; ++i) {
        const double dd = (suf[i] - adot) / c_total;
        (*grad)[i - 1] = dd * 2.0 * p[i - 1];
      }
      for (int k = 0; k < N_; ++k) (*grad)[N_ + k] = gb[k];
    }
    return obj;
  }

 private:
  const std::vector<double>& u_;
  const std::vector<double>& v_;
  const std::vector<double>& y_orig_;
  double y_scale_;
  int N_;
  double alpha_;
  ImplicitLoss loss_;
};

}  // namespace detail

inline ImplicitFitResult fit_implicit(const std::vector<double>& x,
                                      const std::vector<double>& y,
                                      const ImplicitFitOptions& opt) {
  require(opt.N >= 2, "fit_implicit: N must be >= 2");
  require(std::isfinite(opt.alpha) && opt.alpha >= 0.0,
          "fit_implicit: alpha must be >= 0");
  require(opt.max_iterations >= 1, "fit_implicit: empty budget");
  require(x.size() == y.size(), "fit_implicit: bad data shape");
  require(x.size() >= static_cast<std::size_t>(opt.N) + 1,
          "fit_implicit: need at least N+1 samples");
  const int N = opt.N;

  // sort by x; normalize both axes to [0, 1]
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  const double x_min = x[order.front()], x_max = x[order.back()];
  require(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min,
          "fit_implicit: inputs have no spread");
  double y_min = y[0], y_max = y[0];
  for (double v : y) {
    require(std::isfinite(v), "fit_implicit: non-finite target");
    y_min = std::min(y_min, v);
    y_max = std::max(y_max, v);
  }
  const double y_scale = std::max(y_max - y_min, 1e-12);
  if (opt.loss == ImplicitLoss::mape)
    for (double v : y)
      require(v > 0.0, "fit_implicit: mape loss needs positive targets");

  std::vector<double> u(x.size()), v(x.size()), yo(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    u[i] = (x[order[i]] - x_min) / (x_max - x_min);
    v[i] = (y[order[i]] - y_min) / y_scale;
    yo[i] = y[order[i]];
  }

  // init: abscissae at data quantiles, ordinates at local window means
  std::vector<double> p(2 * N, 0.0);
  std::vector<double> a0(N + 1);
  for (int n = 0; n <= N; ++n) {
    const auto q = static_cast<std::size_t>(
        std::llround(static_cast<double>(u.size() - 1) * n / N));
    a0[n] = u[q];
  }
  a0[0] = 0.0;
  a0[N] = 1.0;
  const double min_gap = 1e-3 / N;
  for (int n = 1; n <= N; ++n)
    a0[n] = std::max(a0[n], a0[n - 1] + min_gap);
  for (int n = 0; n <= N; ++n) a0[n] = std::min(a0[n] / a0[N], 1.0);
  for (int n = 1; n <= N; ++n) p[n - 1] = std::sqrt(a0[n] - a0[n - 1]);
  {
    std::size_t lo = 0;
    for (int n = 0; n < N; ++n) {
      const double left = n == 0 ? 0.0 : 0.5 * (a0[n - 1] + a0[n]);
      const double right = 0.5 * (a0[n] + a0[n + 1]);
      while (lo < u.size() && u[lo] < left) ++lo;
      std::size_t hi = lo;
      double sum = 0.0;
      while (hi < u.size() && u[hi] <= right) sum += v[hi++];
      if (hi > lo)
        p[N + n] = std::clamp(sum / (hi - lo), 0.0, 1.0);
      else
        p[N + n] = std::clamp(v[std::min(lo, v.size() - 1)], 0.0, 1.0);
    }
  }

  detail::ImplicitObjective objective(u, v, yo, y_scale, N, opt.alpha, opt.loss);

  // Adam with box projection on the ordinates.
  std::vector<double> m(2 * N, 0.0), vv(2 * N, 0.0), grad;
  std::vector<double> best_p = p;
  double best_obj = objective.value(p, nullptr);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const int patience = std::max(200, opt.max_iterations / 10);
  int since_best = 0;
  int iter = 0;
  bool plateau = false;
  for (; iter < opt.max_iterations; ++iter) {
    const double obj = objective.value(p, &grad);
    if (obj < best_obj - 1e-14 * (1.0 + std::abs(best_obj))) {
      best_obj = obj;
      best_p = p;
      since_best = 0;
    } else if (++since_best >= patience) {
      plateau = true;
      break;
    }
    const double t = iter + 1;
    for (int j = 0; j < 2 * N; ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * grad[j];
      vv[j] = b2 * vv[j] + (1.0 - b2) * grad[j] * grad[j];
      const double mhat = m[j] / (1.0 - std::pow(b1, t));
      const double vhat = vv[j] / (1.0 - std::pow(b2, t));
      p[j] -= opt.learning_rate * mhat / (std::sqrt(vhat) + eps);
    }
    for (int j = N; j < 2 * N; ++j) p[j] = std::clamp(p[j], 0.0, 1.0);
  }
  {
    const double obj = objective.value(p, nullptr);
    if (obj < best_obj) {
      best_obj = obj;
      best_p = p;
    }
  }

  // Polish the ordinates: for fixed abscissae the MSE is linear least
  // squares over the hat-function basis. Kept only if the full objective
  // improves.
  {
    std::vector<double> a, b;
    objective.knots(best_p, a, b);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(N);
    int n = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      while (n < N - 1 && u[i] > a[n + 1]) ++n;
      int seg = n;
      while (seg > 0 && a[seg + 1] - a[seg] < 1e-15) --seg;
      if (a[seg + 1] - a[seg] < 1e-15) continue;
      const double w = (u[i] - a[seg]) / (a[seg + 1] - a[seg]);
      double target = v[i];
      // columns are b_0..b_{N-1}; b_N = 1 contributes to the rhs
      if (seg + 1 == N) target -= w;
      const double c0 = 1.0 - w;
      G(seg, seg) += c0 * c0;
      r(seg) += c0 * target;
      if (seg + 1 < N) {
        G(seg + 1, seg + 1) += w * w;
        G(seg, seg + 1) += c0 * w;
        G(seg + 1, seg) += c0 * w;
        r(seg + 1) += w * target;
      }
    }
    std::vector<double> trial = best_p;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);
    const Eigen::VectorXd bs = cod.solve(r);
    for (int j = 0; j < N; ++j) {
      if (G(j, j) > 1e-12) trial[N + j] = std::clamp(bs(j), 0.0, 1.0);
    }
    const double obj = objective.value(trial, nullptr);
    if (obj < best_obj) {
      best_obj = obj;
      best_p = trial;
    }
  }

  ImplicitFitResult out;
  out.iterations = iter;
  out.objective = best_obj;
  out.converged = plateau;
  objective.knots(best_p, out.model.knot_a, out.model.knot_b);
  out.model.x_min = x_min;
  out.model.x_max = x_max;
  out.model.y_min = y_min;
  out.model.y_max = y_min + y_scale;
  out.model.converged = out.converged;
  return out;
}

// ---------------------------------------------------------------------------
// Model variant

using Model = std::variant<LinearModel, ExpPolyModel, BasisModel, ImplicitModel>;

inline std::string model_kind(const Model& m) {
  return std::visit(
      [](const auto& mm) -> std::string {
        using T = std::decay_t<decltype(mm)>;
        if constexpr (std::is_same_v<T, LinearModel>) return "linear";
        if constexpr (std::is_same_v<T, ExpPolyModel>) return "exp-poly";
        if constexpr (std::is_same_v<T, BasisModel>) return to_string(mm.kind);
        if constexpr (std::is_same_v<T, ImplicitModel>) return "implicit";
      },
      m);
}

inline int parameter_count(const Model& m) {
  return std::visit([](const auto& mm) { return mm.parameter_count(); }, m);
}

/// Parameter count with the linear intercept excluded; identical to
/// parameter_count for every other kind.
inline int parameter_count_excl_intercept(const Model& m) {
  if (const auto* lin = std::get_if<LinearModel>(&m)) return lin->weight_count();
  return parameter_count(m);
}

/// Single-input prediction for the curve models. LinearModel needs a named
/// feature row and is rejected here.
inline double predict_curve(const Model& m, double rho_e) {
  if (std::holds_alternative<LinearModel>(m))
    throw std::invalid_argument("predict_curve: linear model needs named features");
  if (const auto* e = std::get_if<ExpPolyModel>(&m)) return e->predict(rho_e);
  if (const auto* b = std::get_if<BasisModel>(&m)) return b->predict(rho_e);
  return std::get<ImplicitModel>(m).predict(rho_e);
}

}  // namespace qpred
