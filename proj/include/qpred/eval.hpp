#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <variant>
#include <vector>

#include "qpred/dataset.hpp"
#include "qpred/estimators.hpp"
#include "qpred/features.hpp"
#include "qpred/io_util.hpp"
#include "qpred/metrics.hpp"
#include "qpred/model_io.hpp"

namespace qpred {

/// Pre-filter for MAPE-based evaluation: removes links whose occupancy label
/// is exactly zero and returns how many were dropped. Paths are left alone.
inline std::pair<Dataset, std::size_t> drop_zero_occupancy(const Dataset& d) {
  Dataset out;
  out.meta = d.meta;
  out.paths = d.paths;
  std::size_t dropped = 0;
  for (const auto& s : d.links) {
    if (s.observed_occupancy == 0.0)
      ++dropped;
    else
      out.links.push_back(s);
  }
  return {out, dropped};
}

/// id -> sample lookup built once per dataset.
struct LinkIndex {
  std::unordered_map<std::string, const LinkSample*> by_id;

  explicit LinkIndex(const Dataset& d) {
    for (const auto& s : d.links) by_id.emplace(s.link_id, &s);
  }
};

/// Sums per-link predicted delays along a flow's path. Every referenced link
/// must be present and carry capacity and avg_packet_size.
inline double predict_path_delay(const Model& m, const LinkIndex& index,
                                 const PathSample& flow) {
  double total = 0.0;
  for (const auto& id : flow.link_ids) {
    const auto it = index.by_id.find(id);
    if (it == index.by_id.end())
      throw std::runtime_error("predict_path_delay: missing link '" + id + "'");
    const LinkSample& s = *it->second;
    if (!s.capacity || !s.avg_packet_size)
      throw std::runtime_error("predict_path_delay: link '" + id +
                               "' lacks capacity/packet size");
    const double y = predict_occupancy(m, featurize(s.traffic()));
    total += occupancy_to_delay(y, *s.avg_packet_size, *s.capacity);
  }
  return total;
}

inline double predict_path_delay(const Model& m, const Dataset& d,
                                 const PathSample& flow) {
  return predict_path_delay(m, LinkIndex(d), flow);
}

// ---------------------------------------------------------------------------
// Model specs

/// Everything needed to fit one estimator. Parsed from strings of the form
///   linear | exp-poly[:degree=8] | mm1k[:K=32] | bernstein[:K=32] |
///   implicit[:N=12,alpha=1e-5,budget=3000,loss=mse]
/// linear accepts features=pi0+L+rho_e+Se.
struct ModelSpec {
  std::string kind = "linear";
  int degree = 8;
  int K = 32;
  int N = 12;
  double alpha = 1e-5;
  int budget = 3000;
  ImplicitLoss loss = ImplicitLoss::mse;
  std::vector<std::string> features = default_linear_features();

  std::string name() const {
    if (kind == "exp-poly") return "exp-poly(deg=" + std::to_string(degree) + ")";
    if (kind == "mm1k") return "mm1k(K=" + std::to_string(K) + ")";
    if (kind == "bernstein") return "bernstein(K=" + std::to_string(K) + ")";
    if (kind == "implicit")
      return "implicit(N=" + std::to_string(N) + ",alpha=" + format_double(alpha) + ")";
    return "linear";
  }

  std::string input_features() const {
    if (kind != "linear") return "rho_e";
    std::string out;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (i) out += '+';
      out += features[i];
    }
    return out;
  }

  static ModelSpec parse(const std::string& text) {
    ModelSpec spec;
    const auto colon = text.find(':');
    spec.kind = text.substr(0, colon == std::string::npos ? text.size() : colon);
    if (spec.kind != "linear" && spec.kind != "exp-poly" && spec.kind != "mm1k" &&
        spec.kind != "bernstein" && spec.kind != "implicit")
      throw std::invalid_argument("unknown model kind '" + spec.kind + "'");
    if (spec.kind == "exp-poly") spec.degree = 8;
    if (colon == std::string::npos) return spec;
    for (const auto& kvs : split(text.substr(colon + 1), ',')) {
      if (kvs.empty()) continue;
      const auto eq = kvs.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("model option needs key=value: '" + kvs + "'");
      const std::string key = kvs.substr(0, eq);
      const std::string val = kvs.substr(eq + 1);
      if (key == "degree" || key == "deg")
        spec.degree = static_cast<int>(parse_int(val, "model spec"));
      else if (key == "K")
        spec.K = static_cast<int>(parse_int(val, "model spec"));
      else if (key == "N")
        spec.N = static_cast<int>(parse_int(val, "model spec"));
      else if (key == "alpha")
        spec.alpha = parse_double(val, "model spec");
      else if (key == "budget")
        spec.budget = static_cast<int>(parse_int(val, "model spec"));
      else if (key == "loss")
        spec.loss = val == "mape" ? ImplicitLoss::mape : ImplicitLoss::mse;
      else if (key == "features") {
        spec.features.clear();
        for (const auto& f : split(val, '+'))
          if (!f.empty()) spec.features.push_back(f);
      } else {
        throw std::invalid_argument("unknown model option '" + key + "'");
      }
    }
    return spec;
  }
};

struct FitReport {
  std::string model;
  double train_mape_pct = 0.0;
  double train_mse = 0.0;
  double fit_seconds = 0.0;
  std::size_t samples = 0;
  int iterations = 0;  // optimizer iterations where applicable
};

inline Model fit_model(const ModelSpec& spec,
                       const std::vector<QueueFeatures>& feats,
                       const std::vector<double>& y, int* iterations = nullptr) {
  if (iterations) *iterations = 0;
  if (spec.kind == "linear") {
    std::vector<std::vector<double>> cols;
    for (const auto& name : spec.features) {
      std::vector<double> col(feats.size());
      for (std::size_t i = 0; i < feats.size(); ++i)
        col[i] = evaluate_feature(name, feats[i]);
      cols.push_back(std::move(col));
    }
    return fit_linear(spec.features, cols, y);
  }
  std::vector<double> x(feats.size());
  for (std::size_t i = 0; i < feats.size(); ++i) x[i] = feats[i].rho_e;
  if (spec.kind == "exp-poly") return fit_exp_poly(x, y, spec.degree);
  if (spec.kind == "mm1k") return fit_basis(BasisKind::mm1k, spec.K, x, y);
  if (spec.kind == "bernstein") return fit_basis(BasisKind::bernstein, spec.K, x, y);
  ImplicitFitOptions opt;
  opt.N = spec.N;
  opt.alpha = spec.alpha;
  opt.max_iterations = spec.budget;
  opt.loss = spec.loss;
  auto fit = fit_implicit(x, y, opt);
  if (iterations) *iterations = fit.iterations;
  return std::move(fit.model);
}

/// Fits and reports train-set metrics; the wall time covers the fit only.
inline std::pair<Model, FitReport> fit_model_timed(
    const ModelSpec& spec, const std::vector<QueueFeatures>& feats,
    const std::vector<double>& y) {
  FitReport rep;
  rep.model = spec.name();
  rep.samples = y.size();
  const auto t0 = std::chrono::steady_clock::now();
  Model m = fit_model(spec, feats, y, &rep.iterations);
  const auto t1 = std::chrono::steady_clock::now();
  rep.fit_seconds = std::chrono::duration<double>(t1 - t0).count();
  std::vector<double> pred(feats.size());
  for (std::size_t i = 0; i < feats.size(); ++i)
    pred[i] = predict_occupancy(m, feats[i]);
  rep.train_mape_pct = mape(pred, y);
  rep.train_mse = mse(pred, y);
  return {std::move(m), rep};
}

// ---------------------------------------------------------------------------
// Benchmark reports

struct BenchmarkRow {
  std::string model;
  std::string input_features;
  int params = 0;
  int params_excl_intercept = 0;
  double mape_pct = 0.0;
  double mse_value = 0.0;
  std::optional<double> delay_mape_pct;
  double fit_seconds = 0.0;
  double inference_seconds = 0.0;
  std::optional<double> path_inference_seconds;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  std::size_t test_paths = 0;
  std::string status = "ok";
};

struct EvalReport {
  std::vector<BenchmarkRow> rows;           // sorted: ok rows by MAPE, failures last
  std::vector<std::optional<Model>> models; // in input spec order

  std::string to_csv() const;
  std::string to_text() const;
};

struct BenchmarkOptions {
  int threads = 1;
};

inline EvalReport benchmark(const std::vector<ModelSpec>& specs,
                            const Dataset& train, const Dataset& test,
                            const BenchmarkOptions& opt = {}) {
  require(!specs.empty(), "benchmark: no models");
  require(!train.links.empty() && !test.links.empty(),
          "benchmark: empty train or test split");

  auto prepare = [](const Dataset& d, std::vector<QueueFeatures>& feats,
                    std::vector<double>& y) {
    feats.reserve(d.links.size());
    y.reserve(d.links.size());
    for (const auto& s : d.links) {
      feats.push_back(featurize(s.traffic()));
      if (!(s.observed_occupancy > 0.0))
        throw std::invalid_argument(
            "benchmark: zero occupancy label on link '" + s.link_id +
            "' makes MAPE undefined; pre-filter with drop_zero_occupancy");
      y.push_back(s.observed_occupancy);
    }
  };
  std::vector<QueueFeatures> train_feats, test_feats;
  std::vector<double> y_train, y_test;
  prepare(train, train_feats, y_train);
  prepare(test, test_feats, y_test);

  const LinkIndex test_index(test);
  std::unordered_map<std::string, QueueFeatures> test_feat_by_id;
  for (std::size_t i = 0; i < test.links.size(); ++i)
    test_feat_by_id.emplace(test.links[i].link_id, test_feats[i]);

  // paths evaluable on the test split: all links present with capacity data
  std::vector<const PathSample*> eval_paths;
  for (const auto& p : test.paths) {
    bool ok = !p.link_ids.empty();
    for (const auto& id : p.link_ids) {
      const auto it = test_index.by_id.find(id);
      if (it == test_index.by_id.end() || !it->second->capacity ||
          !it->second->avg_packet_size) {
        ok = false;
        break;
      }
    }
    if (ok && p.observed_end_to_end_delay > 0.0) eval_paths.push_back(&p);
  }

  EvalReport report;
  report.rows.resize(specs.size());
  report.models.resize(specs.size());

  auto run_one = [&](std::size_t si) {
    const ModelSpec& spec = specs[si];
    BenchmarkRow& row = report.rows[si];
    row.model = spec.name();
    row.input_features = spec.input_features();
    row.train_samples = y_train.size();
    row.test_samples = y_test.size();
    row.test_paths = eval_paths.size();
    try {
      auto [model, rep] = fit_model_timed(spec, train_feats, y_train);
      row.fit_seconds = rep.fit_seconds;
      row.params = parameter_count(model);
      row.params_excl_intercept = parameter_count_excl_intercept(model);

      std::vector<double> pred(test_feats.size());
      const auto t0 = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < test_feats.size(); ++i)
        pred[i] = predict_occupancy(model, test_feats[i]);
      const auto t1 = std::chrono::steady_clock::now();
      row.inference_seconds = std::chrono::duration<double>(t1 - t0).count();
      row.mape_pct = mape(pred, y_test);
      row.mse_value = mse(pred, y_test);

      if (!eval_paths.empty()) {
        try {
          std::vector<double> dp(eval_paths.size()), dy(eval_paths.size());
          const auto p0 = std::chrono::steady_clock::now();
          for (std::size_t i = 0; i < eval_paths.size(); ++i) {
            double total = 0.0;
            for (const auto& id : eval_paths[i]->link_ids) {
              const LinkSample& s = *test_index.by_id.at(id);
              const double yhat =
                  predict_occupancy(model, test_feat_by_id.at(id));
              total += occupancy_to_delay(yhat, *s.avg_packet_size, *s.capacity);
            }
            dp[i] = total;
            dy[i] = eval_paths[i]->observed_end_to_end_delay;
          }
          const auto p1 = std::chrono::steady_clock::now();
          row.path_inference_seconds =
              std::chrono::duration<double>(p1 - p0).count();
          row.delay_mape_pct = mape(dp, dy);
        } catch (const std::exception&) {
          // negative occupancy predictions make the delay conversion fail;
          // the occupancy columns stay valid
          row.delay_mape_pct.reset();
          row.path_inference_seconds.reset();
        }
      }
      report.models[si] = std::move(model);
    } catch (const std::exception& e) {
      row.status = e.what();
    }
  };

  // Each fit runs on its own thread so wall times are comparable; the pool
  // width only controls how many run at once.
  const int workers = std::max(1, opt.threads);
  if (workers == 1) {
    for (std::size_t si = 0; si < specs.size(); ++si) {
      std::thread th(run_one, si);
      th.join();
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int wi = 0; wi < std::min<int>(workers, static_cast<int>(specs.size()));
         ++wi)
      pool.emplace_back([&] {
        while (true) {
          const std::size_t si = next.fetch_add(1);
          if (si >= specs.size()) return;
          run_one(si);
        }
      });
    for (auto& th : pool) th.join();
  }

  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const BenchmarkRow& a, const BenchmarkRow& b) {
                     const bool fa = a.status != "ok", fb = b.status != "ok";
                     if (fa != fb) return fb;
                     if (fa) return false;
                     return a.mape_pct < b.mape_pct;
                   });
  return report;
}

inline std::string EvalReport::to_csv() const {
  std::string out =
      "model,input_features,params,params_excl_intercept,test_mape_pct,"
      "test_mse,delay_mape_pct,fit_seconds,inference_seconds,"
      "path_inference_seconds,train_samples,test_samples,test_paths,status\n";
  for (const auto& r : rows) {
    const bool ok = r.status == "ok";
    out += r.model + ',' + r.input_features + ',';
    out += std::to_string(r.params) + ',' + std::to_string(r.params_excl_intercept) + ',';
    out += (ok ? format_double(r.mape_pct) : std::string()) + ',';
    out += (ok ? format_double(r.mse_value) : std::string()) + ',';
    out += (r.delay_mape_pct ? format_double(*r.delay_mape_pct) : std::string()) + ',';
    out += format_double(r.fit_seconds) + ',';
    out += format_double(r.inference_seconds) + ',';
    out += (r.path_inference_seconds ? format_double(*r.path_inference_seconds)
                                     : std::string()) + ',';
    out += std::to_string(r.train_samples) + ',' + std::to_string(r.test_samples) +
           ',' + std::to_string(r.test_paths) + ',';
    // commas in error messages would break the row
    std::string status = r.status;
    for (auto& c : status)
      if (c == ',' || c == '\n') c = ';';
    out += status + '\n';
  }
  return out;
}

inline std::string EvalReport::to_text() const {
  std::vector<std::array<std::string, 9>> cells;
  cells.push_back({"model", "features", "params", "mape%", "mse", "delay mape%",
                   "fit s", "infer s", "status"});
  auto fmt = [](double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
  };
  for (const auto& r : rows) {
    const bool ok = r.status == "ok";
    cells.push_back({r.model, r.input_features, std::to_string(r.params),
                     ok ? fmt(r.mape_pct) : "-", ok ? fmt(r.mse_value) : "-",
                     r.delay_mape_pct ? fmt(*r.delay_mape_pct) : "-",
                     fmt(r.fit_seconds), fmt(r.inference_seconds), r.status});
  }
  std::array<std::size_t, 9> width{};
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out += row[c];
      out.append(width[c] - row[c].size() + 2, ' ');
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

/// (rho_e, observed, predicted) triples for external plotting.
inline void write_fit_cloud(const std::string& path,
                            const std::vector<double>& rho_e,
                            const std::vector<double>& y,
                            const std::vector<double>& y_hat) {
  require(rho_e.size() == y.size() && y.size() == y_hat.size(),
          "write_fit_cloud: size mismatch");
  std::string out = "rho_e,observed,predicted\n";
  for (std::size_t i = 0; i < y.size(); ++i)
    out += format_double(rho_e[i]) + ',' + format_double(y[i]) + ',' +
           format_double(y_hat[i]) + '\n';
  write_file(path, out);
}

}  // namespace qpred
