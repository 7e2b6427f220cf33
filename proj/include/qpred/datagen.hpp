#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "qpred/dataset.hpp"
#include "qpred/sim.hpp"

namespace qpred {

struct TopologyTemplate {
  enum class Kind { single, chain, star, dag };

  Kind kind = Kind::single;
  int size = 1;  // links in a chain/dag, spokes of a star

  static TopologyTemplate parse(const std::string& spec) {
    if (spec == "single") return {Kind::single, 1};
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
      const std::string kind = spec.substr(0, colon);
      const int size = std::stoi(spec.substr(colon + 1));
      require(size >= 1, "topology size must be >= 1");
      if (kind == "chain") return {Kind::chain, size};
      if (kind == "star") return {Kind::star, size};
      if (kind == "dag") {
        require(size >= 2, "dag topology needs at least 2 links");
        return {Kind::dag, size};
      }
    }
    throw std::invalid_argument("unknown topology '" + spec +
                                "' (single, chain:N, star:N, dag:N)");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::single: return "single";
      case Kind::chain: return "chain:" + std::to_string(size);
      case Kind::star: return "star:" + std::to_string(size);
      case Kind::dag: return "dag:" + std::to_string(size);
    }
    return "single";
  }
};

enum class ServiceMix { exponential, deterministic, truncated_normal, mixed };

inline ServiceMix parse_service_mix(const std::string& s) {
  if (s == "exp") return ServiceMix::exponential;
  if (s == "det") return ServiceMix::deterministic;
  if (s == "tnorm") return ServiceMix::truncated_normal;
  if (s == "mixed") return ServiceMix::mixed;
  throw std::invalid_argument("unknown service mix '" + s +
                              "' (exp, det, tnorm, mixed)");
}

/// Grid description for the synthetic dataset generator. Per topology
/// instance, flow rates and per-link service rates are drawn uniformly from
/// the given ranges; "mixed" service assigns each link exponential or
/// truncated-normal service with equal probability.
struct GenSpec {
  TopologyTemplate topology;
  int count = 1;
  double lambda_min = 0.5, lambda_max = 5.0;  // per-flow rate range
  double mu_min = 8.0, mu_max = 12.0;         // per-link service rate range
  int K = 32;
  ServiceMix service = ServiceMix::exponential;
  double tnorm_cv = 0.3;  // std/mean for truncated-normal service
  std::int64_t measured_events = 10'000;
  std::int64_t warmup_events = -1;
  std::uint64_t seed = kDefaultSeed;
  double avg_packet_bits = 1000.0;

  void validate() const {
    require(count >= 1, "GenSpec: empty grid");
    require(std::isfinite(lambda_min) && std::isfinite(lambda_max) &&
                lambda_min >= 0.0 && lambda_max >= lambda_min && lambda_max > 0.0,
            "GenSpec: bad lambda range");
    require(std::isfinite(mu_min) && std::isfinite(mu_max) && mu_min > 0.0 &&
                mu_max >= mu_min,
            "GenSpec: bad mu range");
    require(K >= 1, "GenSpec: K must be >= 1");
    require(tnorm_cv >= 0.0 && tnorm_cv < 1.0, "GenSpec: cv must be in [0, 1)");
    require(measured_events >= 10'000,
            "GenSpec: measured_events must be >= 10000");
    require(avg_packet_bits > 0.0, "GenSpec: packet size must be positive");
  }
};

namespace detail {

struct InstanceOut {
  std::vector<LinkSample> links;
  std::vector<PathSample> paths;
};

inline InstanceOut generate_instance(const GenSpec& spec, int t) {
  Xoshiro256pp rng(spec.seed, 0x10000u + static_cast<std::uint64_t>(t));
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * rng.uniform01();
  };

  TandemConfig cfg;
  cfg.measured_events = spec.measured_events;
  cfg.warmup_events = spec.warmup_events;
  cfg.seed = SplitMix64(spec.seed ^
                        (0x9e3779b97f4a7c15ULL *
                         (static_cast<std::uint64_t>(t) + 0x5150))).next();

  const std::string prefix = "t" + std::to_string(t) + ".";
  auto add_link = [&](const std::string& name) {
    TandemLink l;
    l.id = prefix + name;
    l.K = spec.K;
    const double mu = uniform(spec.mu_min, spec.mu_max);
    ServiceMix mix = spec.service;
    if (mix == ServiceMix::mixed)
      mix = rng.uniform01() < 0.5 ? ServiceMix::exponential
                                  : ServiceMix::truncated_normal;
    switch (mix) {
      case ServiceMix::exponential:
        l.service = ServiceDistribution::exponential(mu);
        break;
      case ServiceMix::deterministic:
        l.service = ServiceDistribution::deterministic(1.0 / mu);
        break;
      default:
        l.service = ServiceDistribution::truncated_normal(
            1.0 / mu, spec.tnorm_cv / mu);
        break;
    }
    cfg.links.push_back(l);
  };
  auto add_flow = [&](int j, std::vector<int> path) {
    TandemFlow f;
    f.id = prefix + "f" + std::to_string(j);
    f.path = std::move(path);
    f.rate = uniform(spec.lambda_min, spec.lambda_max);
    cfg.flows.push_back(std::move(f));
  };

  const int n = spec.topology.size;
  switch (spec.topology.kind) {
    case TopologyTemplate::Kind::single:
      add_link("l0");
      add_flow(0, {0});
      break;
    case TopologyTemplate::Kind::chain: {
      for (int i = 0; i < n; ++i) add_link("l" + std::to_string(i));
      std::vector<int> through(n);
      for (int i = 0; i < n; ++i) through[i] = i;
      add_flow(0, through);
      for (int i = 0; i < n; ++i) add_flow(i + 1, {i});
      break;
    }
    case TopologyTemplate::Kind::star: {
      for (int i = 0; i < n; ++i) add_link("s" + std::to_string(i));
      add_link("hub");
      for (int i = 0; i < n; ++i) add_flow(i, {i, n});
      break;
    }
    case TopologyTemplate::Kind::dag: {
      for (int i = 0; i < n; ++i) add_link("l" + std::to_string(i));
      for (int j = 0; j < n; ++j) {
        const int len =
            2 + static_cast<int>(rng.bounded(std::min(n, 4) - 1));
        std::vector<int> all(n);
        for (int i = 0; i < n; ++i) all[i] = i;
        // partial Fisher-Yates, then sort picks into feed-forward order
        std::vector<int> picks;
        for (int i = 0; i < len; ++i) {
          const auto r = i + static_cast<int>(rng.bounded(n - i));
          std::swap(all[i], all[r]);
          picks.push_back(all[i]);
        }
        std::sort(picks.begin(), picks.end());
        add_flow(j, picks);
      }
      break;
    }
  }

  const TandemResult sim = simulate_tandem(cfg);

  InstanceOut out;
  std::vector<double> offered(cfg.links.size(), 0.0);
  for (const auto& f : cfg.flows)
    for (int l : f.path) offered[static_cast<std::size_t>(l)] += f.rate;

  for (std::size_t l = 0; l < cfg.links.size(); ++l) {
    LinkSample s;
    s.link_id = cfg.links[l].id;
    s.lambda = offered[l];
    s.mu = cfg.links[l].service.nominal_rate();
    s.K = cfg.links[l].K;
    s.avg_packet_size = spec.avg_packet_bits;
    s.capacity = s.mu * spec.avg_packet_bits;
    s.observed_occupancy = sim.links[l].mean_occupancy;
    s.observed_delay = sim.links[l].mean_sojourn;
    s.observed_loss = sim.links[l].loss_prob;
    out.links.push_back(std::move(s));
  }
  for (std::size_t j = 0; j < cfg.flows.size(); ++j) {
    if (sim.flows[j].delivered == 0) continue;  // no delay label
    PathSample p;
    p.flow_id = cfg.flows[j].id;
    for (int l : cfg.flows[j].path) p.link_ids.push_back(cfg.links[l].id);
    p.observed_end_to_end_delay = sim.flows[j].mean_delay;
    out.paths.push_back(std::move(p));
  }
  return out;
}

}  // namespace detail

/// Simulates `count` independent topology instances and collects one
/// LinkSample per link and one PathSample per flow with delivered packets.
/// Bit-identical for a given spec regardless of the thread count.
inline Dataset generate_dataset(const GenSpec& spec, int threads = 1) {
  spec.validate();
  std::vector<detail::InstanceOut> parts(spec.count);

  const int workers =
      std::max(1, std::min(threads, spec.count));
  if (workers == 1) {
    for (int t = 0; t < spec.count; ++t)
      parts[t] = detail::generate_instance(spec, t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int wi = 0; wi < workers; ++wi)
      pool.emplace_back([&] {
        while (true) {
          const int t = next.fetch_add(1);
          if (t >= spec.count) return;
          parts[t] = detail::generate_instance(spec, t);
        }
      });
    for (auto& th : pool) th.join();
  }

  Dataset d;
  d.meta.source = "simulated";
  d.meta.seed = spec.seed;
  d.meta.generator = "qpred gen-data " + spec.topology.to_string();
  for (auto& part : parts) {
    for (auto& s : part.links) d.links.push_back(std::move(s));
    for (auto& p : part.paths) d.paths.push_back(std::move(p));
  }
  return d;
}

}  // namespace qpred
