#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qpred/estimators.hpp"
#include "qpred/metrics.hpp"
#include "qpred/queue.hpp"
#include "qpred/rng.hpp"

namespace qpred {

/// exp() arguments are clamped here so engineered features stay finite.
inline constexpr double kExpFeatureClamp = 50.0;

inline const std::vector<std::string>& all_base_features() {
  static const std::vector<std::string> names = {"rho",    "pi0", "piK", "lambda_e",
                                                 "rho_e", "L",   "Se"};
  return names;
}

/// The four-feature set used by the default linear regressor.
inline const std::vector<std::string>& default_linear_features() {
  static const std::vector<std::string> names = {"pi0", "L", "rho_e", "Se"};
  return names;
}

inline double base_feature_value(const std::string& name, const QueueFeatures& f) {
  if (name == "rho") return f.rho;
  if (name == "pi0") return f.pi0;
  if (name == "piK") return f.piK;
  if (name == "lambda_e") return f.lambda_e;
  if (name == "rho_e") return f.rho_e;
  if (name == "L") return f.L;
  if (name == "Se") return f.Se;
  throw std::invalid_argument("unknown feature '" + name + "'");
}

/// Evaluates a (possibly engineered) feature by its canonical name:
/// a base name, <b>^2, <b>^3, log1p(<b>), exp(<b>), sqrt(<b>) or <b1>*<b2>.
inline double evaluate_feature(const std::string& name, const QueueFeatures& f) {
  const auto star = name.find('*');
  if (star != std::string::npos)
    return base_feature_value(name.substr(0, star), f) *
           base_feature_value(name.substr(star + 1), f);
  if (name.size() > 2 && name.compare(name.size() - 2, 2, "^2") == 0) {
    const double v = base_feature_value(name.substr(0, name.size() - 2), f);
    return v * v;
  }
  if (name.size() > 2 && name.compare(name.size() - 2, 2, "^3") == 0) {
    const double v = base_feature_value(name.substr(0, name.size() - 2), f);
    return v * v * v;
  }
  auto wrapped = [&](const char* fn) -> std::string {
    const std::string prefix = std::string(fn) + "(";
    if (name.size() > prefix.size() + 1 && name.rfind(prefix, 0) == 0 &&
        name.back() == ')')
      return name.substr(prefix.size(), name.size() - prefix.size() - 1);
    return {};
  };
  if (auto inner = wrapped("log1p"); !inner.empty())
    return std::log1p(base_feature_value(inner, f));
  if (auto inner = wrapped("exp"); !inner.empty())
    return std::exp(std::min(base_feature_value(inner, f), kExpFeatureClamp));
  if (auto inner = wrapped("sqrt"); !inner.empty())
    return std::sqrt(base_feature_value(inner, f));
  return base_feature_value(name, f);
}

struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<std::string> dropped;  // transforms that produced non-finite values

  std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
};

/// Expands base features into the candidate pool: the bases themselves,
/// elementwise powers 2 and 3, log1p, clamped exp, sqrt, and all pairwise
/// products of the bases. Column order is deterministic; columns with any
/// non-finite value are dropped and recorded.
inline FeatureMatrix build_candidate_features(
    const std::vector<QueueFeatures>& samples,
    const std::vector<std::string>& base = all_base_features()) {
  require(!base.empty(), "build_candidate_features: no base features");
  FeatureMatrix out;
  std::vector<std::string> names;
  for (const auto& b : base) names.push_back(b);
  for (const auto& b : base) {
    names.push_back(b + "^2");
    names.push_back(b + "^3");
    names.push_back("log1p(" + b + ")");
    names.push_back("exp(" + b + ")");
    names.push_back("sqrt(" + b + ")");
  }
  for (std::size_t i = 0; i < base.size(); ++i)
    for (std::size_t j = i + 1; j < base.size(); ++j)
      names.push_back(base[i] + "*" + base[j]);

  for (const auto& name : names) {
    std::vector<double> col(samples.size());
    bool finite = true;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      col[i] = evaluate_feature(name, samples[i]);
      if (!std::isfinite(col[i])) finite = false;
    }
    if (finite) {
      out.names.push_back(name);
      out.columns.push_back(std::move(col));
    } else {
      out.dropped.push_back(name);
    }
  }
  return out;
}

struct StepwiseResult {
  std::vector<std::string> selected;  // in pick order
  std::vector<double> scores;         // validation MAPE after each pick
  double baseline_score = 0.0;        // intercept-only validation MAPE
};

/// Greedy forward selection. Each round refits a linear model on the chosen
/// features plus one candidate and scores MAPE on a held-out fold; the best
/// candidate is kept if it strictly improves the score. Ties break on the
/// candidate name.
inline StepwiseResult forward_stepwise(const FeatureMatrix& candidates,
                                       const std::vector<double>& targets,
                                       int max_features,
                                       double validation_fraction = 0.25,
                                       std::uint64_t seed = kDefaultSeed) {
  require(!candidates.names.empty(), "forward_stepwise: no candidates");
  require(candidates.rows() == targets.size(),
          "forward_stepwise: targets/rows mismatch");
  require(targets.size() >= 8, "forward_stepwise: too few samples");
  require(validation_fraction > 0.0 && validation_fraction < 1.0,
          "forward_stepwise: bad validation fraction");
  require(max_features >= 0, "forward_stepwise: negative max_features");
  for (double t : targets)
    require(t > 0.0 && std::isfinite(t),
            "forward_stepwise: targets must be positive");

  bool any_varying = false;
  for (const auto& col : candidates.columns) {
    for (std::size_t i = 1; i < col.size(); ++i)
      if (col[i] != col[0]) {
        any_varying = true;
        break;
      }
    if (any_varying) break;
  }
  require(any_varying, "forward_stepwise: all candidates are constant");

  const std::size_t n = targets.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Xoshiro256pp rng(seed, 0xF5);
  rng.shuffle(idx);
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(validation_fraction * n)));
  std::vector<std::size_t> val(idx.begin(), idx.begin() + n_val);
  std::vector<std::size_t> fit(idx.begin() + n_val, idx.end());

  std::vector<double> y_fit, y_val;
  for (auto i : fit) y_fit.push_back(targets[i]);
  for (auto i : val) y_val.push_back(targets[i]);

  auto score_selection = [&](const std::vector<std::size_t>& cols) -> double {
    if (y_fit.size() < cols.size() + 1)
      return std::numeric_limits<double>::infinity();
    std::vector<double> pred(val.size());
    if (cols.empty()) {
      double mean = 0.0;
      for (double t : y_fit) mean += t;
      mean /= static_cast<double>(y_fit.size());
      std::fill(pred.begin(), pred.end(), mean);
      return mape(pred, y_val);
    }
    std::vector<std::string> names;
    std::vector<std::vector<double>> fit_cols;
    for (auto c : cols) {
      names.push_back(candidates.names[c]);
      std::vector<double> col;
      col.reserve(fit.size());
      for (auto i : fit) col.push_back(candidates.columns[c][i]);
      fit_cols.push_back(std::move(col));
    }
    const LinearModel m = fit_linear(names, fit_cols, y_fit);
    std::vector<double> row(cols.size());
    for (std::size_t k = 0; k < val.size(); ++k) {
      for (std::size_t j = 0; j < cols.size(); ++j)
        row[j] = candidates.columns[cols[j]][val[k]];
      pred[k] = m.predict_row(row);
    }
    return mape(pred, y_val);
  };

  StepwiseResult out;
  std::vector<std::size_t> selected;
  double best = score_selection(selected);
  out.baseline_score = best;
  std::vector<bool> used(candidates.names.size(), false);

  while (static_cast<int>(selected.size()) < max_features) {
    double round_best = std::numeric_limits<double>::infinity();
    std::size_t round_pick = candidates.names.size();
    for (std::size_t c = 0; c < candidates.names.size(); ++c) {
      if (used[c]) continue;
      selected.push_back(c);
      const double s = score_selection(selected);
      selected.pop_back();
      if (s < round_best ||
          (s == round_best && round_pick < candidates.names.size() &&
           candidates.names[c] < candidates.names[round_pick])) {
        round_best = s;
        round_pick = c;
      }
    }
    if (round_pick == candidates.names.size() || round_best >= best) break;
    used[round_pick] = true;
    selected.push_back(round_pick);
    best = round_best;
    out.selected.push_back(candidates.names[round_pick]);
    out.scores.push_back(round_best);
  }
  return out;
}

/// Occupancy prediction for any fitted model given a link's features.
inline double predict_occupancy(const Model& m, const QueueFeatures& f) {
  if (const auto* lin = std::get_if<LinearModel>(&m)) {
    std::vector<double> row(lin->feature_names.size());
    for (std::size_t i = 0; i < row.size(); ++i)
      row[i] = evaluate_feature(lin->feature_names[i], f);
    return lin->predict_row(row);
  }
  return predict_curve(m, f.rho_e);
}

}  // namespace qpred
