#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qpred/estimators.hpp"
#include "qpred/io_util.hpp"

namespace qpred {

constexpr int kModelSchemaVersion = 1;

/// Training provenance stored next to the model. Deliberately free of wall
/// times so that model files are byte-identical across reruns.
struct ModelMeta {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double train_mape_pct = 0.0;
  double train_mse = 0.0;
};

namespace detail {

inline std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

inline std::vector<double> parse_doubles(const std::string& s, const std::string& ctx) {
  std::vector<double> out;
  for (const auto& tok : split(s, ' '))
    if (!tok.empty()) out.push_back(parse_double(tok, ctx));
  return out;
}

inline std::string join_names(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += v[i];
  }
  return out;
}

}  // namespace detail

inline void save_model(const Model& m, const ModelMeta& meta,
                       const std::string& path) {
  std::string doc = "qpred-model " + std::to_string(kModelSchemaVersion) + "\n";
  doc += "kind: " + model_kind(m) + "\n";
  if (const auto* lin = std::get_if<LinearModel>(&m)) {
    doc += "features: " + detail::join_names(lin->feature_names) + "\n";
    doc += "weights: " + detail::join_doubles(lin->weights) + "\n";
    doc += "intercept: " + format_double(lin->intercept) + "\n";
    doc += "rank_warning: " + std::to_string(lin->rank_warning ? 1 : 0) + "\n";
  } else if (const auto* ep = std::get_if<ExpPolyModel>(&m)) {
    doc += "degree: " + std::to_string(ep->degree()) + "\n";
    doc += "coefficients: " + detail::join_doubles(ep->coefficients) + "\n";
  } else if (const auto* ba = std::get_if<BasisModel>(&m)) {
    doc += "K: " + std::to_string(ba->K) + "\n";
    doc += "alphas: " + detail::join_doubles(ba->alphas) + "\n";
  } else {
    const auto& im = std::get<ImplicitModel>(m);
    doc += "N: " + std::to_string(im.segment_count()) + "\n";
    doc += "knots_a: " + detail::join_doubles(im.knot_a) + "\n";
    doc += "knots_b: " + detail::join_doubles(im.knot_b) + "\n";
    doc += "x_min: " + format_double(im.x_min) + "\n";
    doc += "x_max: " + format_double(im.x_max) + "\n";
    doc += "y_min: " + format_double(im.y_min) + "\n";
    doc += "y_max: " + format_double(im.y_max) + "\n";
    doc += "converged: " + std::to_string(im.converged ? 1 : 0) + "\n";
  }
  doc += "samples: " + std::to_string(meta.samples) + "\n";
  doc += "seed: " + std::to_string(meta.seed) + "\n";
  doc += "train_mape_pct: " + format_double(meta.train_mape_pct) + "\n";
  doc += "train_mse: " + format_double(meta.train_mse) + "\n";
  write_file(path, doc);
}

struct LoadedModel {
  Model model;
  ModelMeta meta;
};

inline LoadedModel load_model(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error(path + ": empty model file");
  {
    const auto head = split(lines[0], ' ');
    if (head.size() != 2 || head[0] != "qpred-model")
      throw std::runtime_error(path + ": not a qpred model file");
    const auto version = parse_int(head[1], path);
    if (version != kModelSchemaVersion)
      throw std::runtime_error(path + ": model schema version " +
                               std::to_string(version) + " not supported (expected " +
                               std::to_string(kModelSchemaVersion) + ")");
  }
  std::map<std::string, std::string> kv;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto colon = lines[i].find(':');
    if (colon == std::string::npos)
      throw std::runtime_error(path + ": malformed line '" + lines[i] + "'");
    kv[trim(lines[i].substr(0, colon))] = trim(lines[i].substr(colon + 1));
  }
  auto need = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end())
      throw std::runtime_error(path + ": missing field '" + key + "'");
    return it->second;
  };

  LoadedModel out;
  const std::string kind = need("kind");
  if (kind == "linear") {
    LinearModel m;
    for (const auto& n : split(need("features"), ' '))
      if (!n.empty()) m.feature_names.push_back(n);
    m.weights = detail::parse_doubles(need("weights"), path);
    m.intercept = parse_double(need("intercept"), path);
    m.rank_warning = parse_int(need("rank_warning"), path) != 0;
    if (m.weights.size() != m.feature_names.size())
      throw std::runtime_error(path + ": weights/features size mismatch");
    out.model = std::move(m);
  } else if (kind == "exp-poly") {
    ExpPolyModel m;
    m.coefficients = detail::parse_doubles(need("coefficients"), path);
    const auto degree = parse_int(need("degree"), path);
    if (static_cast<std::size_t>(degree) + 1 != m.coefficients.size())
      throw std::runtime_error(path + ": degree/coefficients mismatch");
    out.model = std::move(m);
  } else if (kind == "mm1k" || kind == "bernstein") {
    BasisModel m;
    m.kind = kind == "mm1k" ? BasisKind::mm1k : BasisKind::bernstein;
    m.K = static_cast<int>(parse_int(need("K"), path));
    m.alphas = detail::parse_doubles(need("alphas"), path);
    if (m.alphas.size() != static_cast<std::size_t>(m.K) + 1)
      throw std::runtime_error(path + ": expected K+1 alphas");
    out.model = std::move(m);
  } else if (kind == "implicit") {
    ImplicitModel m;
    m.knot_a = detail::parse_doubles(need("knots_a"), path);
    m.knot_b = detail::parse_doubles(need("knots_b"), path);
    m.x_min = parse_double(need("x_min"), path);
    m.x_max = parse_double(need("x_max"), path);
    m.y_min = parse_double(need("y_min"), path);
    m.y_max = parse_double(need("y_max"), path);
    m.converged = parse_int(need("converged"), path) != 0;
    const auto N = parse_int(need("N"), path);
    if (m.knot_a.size() != m.knot_b.size() ||
        m.knot_a.size() != static_cast<std::size_t>(N) + 1 || N < 2)
      throw std::runtime_error(path + ": bad knot arrays");
    if (m.knot_a.front() != 0.0 || m.knot_a.back() != 1.0 ||
        m.knot_b.back() != 1.0)
      throw std::runtime_error(path + ": knot endpoint constraints violated");
    for (std::size_t i = 1; i < m.knot_a.size(); ++i)
      if (m.knot_a[i] < m.knot_a[i - 1])
        throw std::runtime_error(path + ": knot abscissae not monotone");
    if (!(m.x_max > m.x_min))
      throw std::runtime_error(path + ": bad normalization range");
    out.model = std::move(m);
  } else {
    throw std::runtime_error(path + ": unknown model kind '" + kind + "'");
  }

  if (kv.count("samples"))
    out.meta.samples = static_cast<std::size_t>(parse_int(kv["samples"], path));
  if (kv.count("seed"))
    out.meta.seed = static_cast<std::uint64_t>(parse_int(kv["seed"], path));
  if (kv.count("train_mape_pct"))
    out.meta.train_mape_pct = parse_double(kv["train_mape_pct"], path);
  if (kv.count("train_mse"))
    out.meta.train_mse = parse_double(kv["train_mse"], path);
  return out;
}

}  // namespace qpred
