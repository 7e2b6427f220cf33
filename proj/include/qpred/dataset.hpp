#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "qpred/io_util.hpp"
#include "qpred/queue.hpp"
#include "qpred/rng.hpp"

namespace qpred {

constexpr int kDatasetSchemaVersion = 1;

/// One labeled link. Units are fixed: packets/s for rates, bits for packet
/// sizes, bits/s for capacity, seconds for delays.
struct LinkSample {
  std::string link_id;
  double lambda = 0.0;
  double mu = 0.0;
  int K = 1;
  std::optional<double> capacity;
  std::optional<double> avg_packet_size;
  double observed_occupancy = 0.0;
  std::optional<double> observed_delay;
  std::optional<double> observed_loss;

  LinkTraffic traffic() const {
    LinkTraffic t;
    t.lambda = lambda;
    t.mu = mu;
    t.K = K;
    t.capacity = capacity;
    t.avg_packet_size = avg_packet_size;
    t.validate();
    return t;
  }

  bool operator==(const LinkSample&) const = default;
};

struct PathSample {
  std::string flow_id;
  std::vector<std::string> link_ids;
  double observed_end_to_end_delay = 0.0;

  bool operator==(const PathSample&) const = default;
};

struct DatasetMeta {
  int schema_version = kDatasetSchemaVersion;
  std::string source = "simulated";  // simulated | imported
  std::uint64_t seed = 0;
  std::string generator;

  bool operator==(const DatasetMeta&) const = default;
};

struct Dataset {
  std::vector<LinkSample> links;
  std::vector<PathSample> paths;
  DatasetMeta meta;

  bool operator==(const Dataset&) const = default;
};

namespace detail {

inline const char* kLinksHeader =
    "link_id,lambda,mu,K,capacity,avg_packet_size,observed_occupancy,"
    "observed_delay,observed_loss";
inline const char* kPathsHeader = "flow_id,link_ids,observed_end_to_end_delay";

inline std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

inline std::optional<double> parse_opt(const std::string& s, const std::string& ctx) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, ctx);
}

inline void check_link_invariants(const LinkSample& s, const std::string& where) {
  if (!(s.observed_occupancy >= 0.0))
    throw std::runtime_error(where + ": negative occupancy label for link '" +
                             s.link_id + "'");
  if (s.observed_occupancy > s.K)
    throw std::runtime_error(where + ": observed_occupancy > K for link '" +
                             s.link_id + "'");
  if (s.observed_delay && *s.observed_delay < 0.0)
    throw std::runtime_error(where + ": negative delay label for link '" +
                             s.link_id + "'");
  if (s.observed_loss && (*s.observed_loss < 0.0 || *s.observed_loss > 1.0))
    throw std::runtime_error(where + ": loss label outside [0,1] for link '" +
                             s.link_id + "'");
}

}  // namespace detail

/// Writes <stem>.links.csv, <stem>.paths.csv, <stem>.meta. Floats use the
/// shortest round-trip decimal form, so save/load is bit-exact.
inline void save_dataset(const Dataset& d, const std::string& stem) {
  std::string links;
  links += detail::kLinksHeader;
  links += '\n';
  for (const auto& s : d.links) {
    links += s.link_id;
    links += ',';
    links += format_double(s.lambda);
    links += ',';
    links += format_double(s.mu);
    links += ',';
    links += std::to_string(s.K);
    links += ',';
    links += detail::opt_field(s.capacity);
    links += ',';
    links += detail::opt_field(s.avg_packet_size);
    links += ',';
    links += format_double(s.observed_occupancy);
    links += ',';
    links += detail::opt_field(s.observed_delay);
    links += ',';
    links += detail::opt_field(s.observed_loss);
    links += '\n';
  }
  write_file(stem + ".links.csv", links);

  std::string paths;
  paths += detail::kPathsHeader;
  paths += '\n';
  for (const auto& p : d.paths) {
    paths += p.flow_id;
    paths += ',';
    for (std::size_t i = 0; i < p.link_ids.size(); ++i) {
      if (i) paths += ';';
      paths += p.link_ids[i];
    }
    paths += ',';
    paths += format_double(p.observed_end_to_end_delay);
    paths += '\n';
  }
  write_file(stem + ".paths.csv", paths);

  std::string meta;
  meta += "schema_version: " + std::to_string(d.meta.schema_version) + "\n";
  meta += "source: " + d.meta.source + "\n";
  meta += "seed: " + std::to_string(d.meta.seed) + "\n";
  if (!d.meta.generator.empty()) meta += "generator: " + d.meta.generator + "\n";
  write_file(stem + ".meta", meta);
}

inline Dataset load_dataset(const std::string& stem) {
  Dataset d;

  const auto meta_lines = read_lines(stem + ".meta");
  bool have_version = false;
  for (const auto& line : meta_lines) {
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error(stem + ".meta: malformed line '" + line + "'");
    const std::string key = trim(line.substr(0, colon));
    const std::string val = trim(line.substr(colon + 1));
    if (key == "schema_version") {
      d.meta.schema_version = static_cast<int>(parse_int(val, stem + ".meta"));
      have_version = true;
    } else if (key == "source") {
      d.meta.source = val;
    } else if (key == "seed") {
      d.meta.seed = static_cast<std::uint64_t>(parse_int(val, stem + ".meta"));
    } else if (key == "generator") {
      d.meta.generator = val;
    }
  }
  if (!have_version)
    throw std::runtime_error(stem + ".meta: missing schema_version");
  if (d.meta.schema_version != kDatasetSchemaVersion)
    throw std::runtime_error(
        "dataset schema_version " + std::to_string(d.meta.schema_version) +
        " not supported (expected " + std::to_string(kDatasetSchemaVersion) + ")");

  const std::string links_path = stem + ".links.csv";
  const auto link_lines = read_lines(links_path);
  if (link_lines.empty() || link_lines[0] != detail::kLinksHeader)
    throw std::runtime_error(links_path + ": unexpected header");
  std::unordered_set<std::string> ids;
  for (std::size_t i = 1; i < link_lines.size(); ++i) {
    if (link_lines[i].empty()) continue;
    const std::string where = links_path + ":" + std::to_string(i + 1);
    const auto f = split(link_lines[i], ',');
    if (f.size() != 9) throw std::runtime_error(where + ": expected 9 fields");
    LinkSample s;
    s.link_id = f[0];
    s.lambda = parse_double(f[1], where);
    s.mu = parse_double(f[2], where);
    s.K = static_cast<int>(parse_int(f[3], where));
    s.capacity = detail::parse_opt(f[4], where);
    s.avg_packet_size = detail::parse_opt(f[5], where);
    s.observed_occupancy = parse_double(f[6], where);
    s.observed_delay = detail::parse_opt(f[7], where);
    s.observed_loss = detail::parse_opt(f[8], where);
    detail::check_link_invariants(s, where);
    ids.insert(s.link_id);
    d.links.push_back(std::move(s));
  }

  const std::string paths_path = stem + ".paths.csv";
  const auto path_lines = read_lines(paths_path);
  if (path_lines.empty() || path_lines[0] != detail::kPathsHeader)
    throw std::runtime_error(paths_path + ": unexpected header");
  for (std::size_t i = 1; i < path_lines.size(); ++i) {
    if (path_lines[i].empty()) continue;
    const std::string where = paths_path + ":" + std::to_string(i + 1);
    const auto f = split(path_lines[i], ',');
    if (f.size() != 3) throw std::runtime_error(where + ": expected 3 fields");
    PathSample p;
    p.flow_id = f[0];
    p.link_ids = split(f[1], ';');
    if (p.link_ids.size() == 1 && p.link_ids[0].empty())
      throw std::runtime_error(where + ": empty link list");
    p.observed_end_to_end_delay = parse_double(f[2], where);
    if (p.observed_end_to_end_delay < 0.0)
      throw std::runtime_error(where + ": negative delay label");
    d.paths.push_back(std::move(p));
  }
  return d;
}

enum class SplitMode {
  iid,     // links and paths shuffled and split independently
  by_size  // whole topologies assigned by ascending size; big ones land in test
};

/// Deterministic split. Fractions must be positive and sum to 1. In by_size
/// mode the topology of a link is the id prefix before the last '.'; smaller
/// topologies fill the train share first, so the largest ones end up in test,
/// and path samples follow their topology.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& d,
                                                 double train_fraction,
                                                 double test_fraction,
                                                 std::uint64_t seed,
                                                 SplitMode mode = SplitMode::iid) {
  require(std::isfinite(train_fraction) && std::isfinite(test_fraction) &&
              train_fraction > 0.0 && test_fraction > 0.0 &&
              std::abs(train_fraction + test_fraction - 1.0) <= 1e-9,
          "split_dataset: degenerate fractions");

  Dataset train, test;
  train.meta = d.meta;
  test.meta = d.meta;

  if (mode == SplitMode::iid) {
    std::vector<std::size_t> idx(d.links.size());
    std::iota(idx.begin(), idx.end(), 0);
    Xoshiro256pp rng(seed, 0x51);
    rng.shuffle(idx);
    const auto cut = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(idx.size())));
    std::vector<std::size_t> tr(idx.begin(), idx.begin() + cut);
    std::vector<std::size_t> te(idx.begin() + cut, idx.end());
    std::sort(tr.begin(), tr.end());
    std::sort(te.begin(), te.end());
    for (auto i : tr) train.links.push_back(d.links[i]);
    for (auto i : te) test.links.push_back(d.links[i]);

    std::vector<std::size_t> pidx(d.paths.size());
    std::iota(pidx.begin(), pidx.end(), 0);
    Xoshiro256pp prng(seed, 0x52);
    prng.shuffle(pidx);
    const auto pcut = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(pidx.size())));
    std::vector<std::size_t> ptr(pidx.begin(), pidx.begin() + pcut);
    std::vector<std::size_t> pte(pidx.begin() + pcut, pidx.end());
    std::sort(ptr.begin(), ptr.end());
    std::sort(pte.begin(), pte.end());
    for (auto i : ptr) train.paths.push_back(d.paths[i]);
    for (auto i : pte) test.paths.push_back(d.paths[i]);
    return {train, test};
  }

  auto topo_of = [](const std::string& id) {
    const auto dot = id.rfind('.');
    return dot == std::string::npos ? id : id.substr(0, dot);
  };
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < d.links.size(); ++i)
    groups[topo_of(d.links[i].link_id)].push_back(i);

  std::vector<std::pair<std::string, std::size_t>> order;
  order.reserve(groups.size());
  for (const auto& [name, members] : groups) order.emplace_back(name, members.size());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });

  const auto target = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(d.links.size())));
  std::unordered_set<std::string> train_topos;
  std::size_t assigned = 0;
  for (const auto& [name, size] : order) {
    if (assigned + size > target) break;
    train_topos.insert(name);
    assigned += size;
  }
  for (const auto& s : d.links)
    (train_topos.count(topo_of(s.link_id)) ? train : test).links.push_back(s);
  for (const auto& p : d.paths) {
    const std::string topo =
        p.link_ids.empty() ? std::string() : topo_of(p.link_ids.front());
    (train_topos.count(topo) ? train : test).paths.push_back(p);
  }
  return {train, test};
}

struct ImportColumnMap {
  // canonical field name -> column header in the flat file
  std::map<std::string, std::string> columns;
  char delimiter = ',';
};

struct ImportResult {
  Dataset dataset;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<std::string> first_rejects;  // at most 10, "line N: reason"
};

/// Ingests a flattened delimited export with a header row. Canonical fields:
/// link_id (optional; row number used otherwise), lambda, mu, K, capacity,
/// avg_packet_size, observed_occupancy (all per the links.csv schema).
/// mu may be omitted when capacity and avg_packet_size are mapped. Rows that
/// violate LinkTraffic invariants are rejected, not fatal.
inline ImportResult import_flat(const std::string& path, const ImportColumnMap& map) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error(path + ": empty file");

  auto lookup = [&](const std::string& canonical) {
    const auto it = map.columns.find(canonical);
    return it == map.columns.end() ? canonical : it->second;
  };

  const auto header = split(lines[0], map.delimiter);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;

  auto col_of = [&](const std::string& canonical,
                    bool required) -> std::optional<std::size_t> {
    const std::string name = lookup(canonical);
    const auto it = col.find(name);
    if (it == col.end()) {
      if (required)
        throw std::runtime_error(path + ": missing required column '" + name +
                                 "' (" + canonical + ")");
      return std::nullopt;
    }
    return it->second;
  };

  const auto c_lambda = col_of("lambda", true);
  const auto c_K = col_of("K", true);
  const auto c_occ = col_of("observed_occupancy", true);
  const auto c_mu = col_of("mu", false);
  const auto c_cap = col_of("capacity", false);
  const auto c_size = col_of("avg_packet_size", false);
  const auto c_id = col_of("link_id", false);
  const auto c_delay = col_of("observed_delay", false);
  const auto c_loss = col_of("observed_loss", false);
  if (!c_mu && !(c_cap && c_size))
    throw std::runtime_error(
        path + ": need column 'mu' or both 'capacity' and 'avg_packet_size'");

  ImportResult out;
  out.dataset.meta.source = "imported";
  out.dataset.meta.generator = path;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], map.delimiter);
    const std::string where = "line " + std::to_string(i + 1);
    auto field = [&](std::size_t c) -> std::string {
      if (c >= f.size()) throw std::runtime_error("missing field");
      return trim(f[c]);
    };
    try {
      LinkSample s;
      s.link_id = c_id ? field(*c_id) : "row" + std::to_string(i);
      s.lambda = parse_double(field(*c_lambda), where);
      s.K = static_cast<int>(parse_int(field(*c_K), where));
      if (c_cap) s.capacity = detail::parse_opt(field(*c_cap), where);
      if (c_size) s.avg_packet_size = detail::parse_opt(field(*c_size), where);
      if (c_mu) {
        s.mu = parse_double(field(*c_mu), where);
      } else {
        if (!s.capacity || !s.avg_packet_size)
          throw std::runtime_error("cannot derive mu");
        s.mu = *s.capacity / *s.avg_packet_size;
      }
      s.observed_occupancy = parse_double(field(*c_occ), where);
      if (c_delay) s.observed_delay = detail::parse_opt(field(*c_delay), where);
      if (c_loss) s.observed_loss = detail::parse_opt(field(*c_loss), where);
      s.traffic();  // LinkTraffic invariants
      detail::check_link_invariants(s, where);
      out.dataset.links.push_back(std::move(s));
      ++out.accepted;
    } catch (const std::exception& e) {
      ++out.rejected;
      if (out.first_rejects.size() < 10)
        out.first_rejects.push_back(where + ": " + e.what());
    }
  }
  if (out.accepted == 0)
    throw std::runtime_error(path + ": no valid rows");
  return out;
}

}  // namespace qpred
