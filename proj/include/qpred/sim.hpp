#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "qpred/queue.hpp"
#include "qpred/rng.hpp"

namespace qpred {

struct ServiceDistribution {
  enum class Kind { exponential, deterministic, truncated_normal };

  Kind kind = Kind::exponential;
  double mean_time = 1.0;  // mean service seconds (1/rate for exponential)
  double std_dev = 0.0;    // truncated_normal only

  static ServiceDistribution exponential(double rate) {
    require(std::isfinite(rate) && rate > 0.0,
            "ServiceDistribution: rate must be positive");
    return {Kind::exponential, 1.0 / rate, 0.0};
  }

  static ServiceDistribution deterministic(double time) {
    require(std::isfinite(time) && time > 0.0,
            "ServiceDistribution: service time must be positive");
    return {Kind::deterministic, time, 0.0};
  }

  static ServiceDistribution truncated_normal(double mean, double std_dev) {
    require(std::isfinite(mean) && mean > 0.0,
            "ServiceDistribution: mean must be positive");
    require(std::isfinite(std_dev) && std_dev >= 0.0,
            "ServiceDistribution: std must be >= 0");
    return {Kind::truncated_normal, mean, std_dev};
  }

  /// Nominal service rate 1/mean. For truncated_normal this ignores the small
  /// mean shift introduced by truncation at 0.
  double nominal_rate() const { return 1.0 / mean_time; }

  double sample(Xoshiro256pp& rng) const {
    switch (kind) {
      case Kind::exponential:
        return rng.exponential(1.0 / mean_time);
      case Kind::deterministic:
        return mean_time;
      case Kind::truncated_normal:
        return std_dev == 0.0 ? mean_time : rng.positive_normal(mean_time, std_dev);
    }
    return mean_time;
  }

  void validate() const {
    require(std::isfinite(mean_time) && mean_time > 0.0,
            "ServiceDistribution: mean service time must be positive");
    require(std::isfinite(std_dev) && std_dev >= 0.0,
            "ServiceDistribution: std must be >= 0");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::exponential:
        return "exp:" + std::to_string(1.0 / mean_time);
      case Kind::deterministic:
        return "det:" + std::to_string(mean_time);
      case Kind::truncated_normal:
        return "tnorm:" + std::to_string(mean_time) + "," + std::to_string(std_dev);
    }
    return "";
  }

  /// Parses "exp:<rate>", "det:<time>" or "tnorm:<mean>,<std>".
  static ServiceDistribution parse(const std::string& spec);
};

inline ServiceDistribution ServiceDistribution::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("service spec needs kind:params, got '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string args = spec.substr(colon + 1);
  try {
    if (kind == "exp") return exponential(std::stod(args));
    if (kind == "det") return deterministic(std::stod(args));
    if (kind == "tnorm") {
      const auto comma = args.find(',');
      if (comma == std::string::npos)
        throw std::invalid_argument("tnorm needs mean,std");
      return truncated_normal(std::stod(args.substr(0, comma)),
                              std::stod(args.substr(comma + 1)));
    }
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad service spec '" + spec + "'");
  }
  throw std::invalid_argument("unknown service kind '" + kind + "'");
}

struct SimConfig {
  double lambda = 0.0;  // Poisson arrival rate, packets/s
  ServiceDistribution service;
  int K = 1;
  std::int64_t measured_events = 1'000'000;  // offered arrivals measured
  std::int64_t warmup_events = -1;           // -1: measured/10
  std::uint64_t seed = 1;

  std::int64_t effective_warmup() const {
    return warmup_events < 0 ? measured_events / 10 : warmup_events;
  }

  void validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0,
            "SimConfig: lambda must be finite and >= 0");
    service.validate();
    require(K >= 1, "SimConfig: K must be >= 1");
    require(measured_events >= 10'000,
            "SimConfig: measured_events must be >= 10000");
  }
};

/// 95% CI half-widths from 32 batch means (t quantile, 31 dof).
struct EstimateCi {
  double occupancy = 0.0;
  double loss = 0.0;
  double sojourn = 0.0;
  double pi0 = 0.0;
  double piK = 0.0;
  double lambda_e = 0.0;
};

struct SimResult {
  double mean_occupancy = 0.0;  // time-averaged packets in system
  double loss_prob = 0.0;       // dropped / offered
  double mean_sojourn = 0.0;    // seconds, delivered packets
  double emp_pi0 = 0.0;         // time fraction empty
  double emp_piK = 0.0;         // time fraction full
  double emp_lambda_e = 0.0;    // accepted / measured_time
  EstimateCi half_width;
  std::int64_t offered = 0;
  std::int64_t accepted = 0;
  std::int64_t dropped = 0;
  std::int64_t delivered = 0;
  double measured_time = 0.0;
};

namespace detail {

constexpr int kBatches = 32;
constexpr double kTQuantile31 = 2.0395134463964077;  // t_{0.975, 31}

struct BatchWindow {
  std::array<double, kBatches> occ_int{}, pi0_time{}, piK_time{}, duration{};
  std::array<double, kBatches> sojourn_sum{};
  std::array<std::int64_t, kBatches> offered{}, accepted{}, dropped{}, sojourn_n{};
};

template <typename Mean>
inline double batch_half_width(Mean mean_of_batch) {
  double means[kBatches];
  int n = 0;
  for (int b = 0; b < kBatches; ++b) {
    double m;
    if (mean_of_batch(b, m)) means[n++] = m;
  }
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += means[i];
  const double avg = sum / n;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) ss += (means[i] - avg) * (means[i] - avg);
  const double sd = std::sqrt(ss / (n - 1));
  return kTQuantile31 * sd / std::sqrt(static_cast<double>(n));
}

inline EstimateCi half_widths_from(const BatchWindow& w) {
  EstimateCi ci;
  ci.occupancy = batch_half_width([&](int b, double& m) {
    if (w.duration[b] <= 0.0) return false;
    m = w.occ_int[b] / w.duration[b];
    return true;
  });
  ci.pi0 = batch_half_width([&](int b, double& m) {
    if (w.duration[b] <= 0.0) return false;
    m = w.pi0_time[b] / w.duration[b];
    return true;
  });
  ci.piK = batch_half_width([&](int b, double& m) {
    if (w.duration[b] <= 0.0) return false;
    m = w.piK_time[b] / w.duration[b];
    return true;
  });
  ci.loss = batch_half_width([&](int b, double& m) {
    if (w.offered[b] <= 0) return false;
    m = static_cast<double>(w.dropped[b]) / static_cast<double>(w.offered[b]);
    return true;
  });
  ci.lambda_e = batch_half_width([&](int b, double& m) {
    if (w.duration[b] <= 0.0) return false;
    m = static_cast<double>(w.accepted[b]) / w.duration[b];
    return true;
  });
  ci.sojourn = batch_half_width([&](int b, double& m) {
    if (w.sojourn_n[b] <= 0) return false;
    m = w.sojourn_sum[b] / static_cast<double>(w.sojourn_n[b]);
    return true;
  });
  return ci;
}

}  // namespace detail

/// Event-driven M/G/1/K simulation. The measurement window spans the offered
/// arrivals (warmup, warmup + measured]; occupancy and the pi estimates are
/// time-weighted over that window, sojourns cover packets admitted inside it
/// (the run continues past the window until they all depart). Deterministic:
/// one arrival stream and one service stream, both derived from the seed.
inline SimResult simulate_queue(const SimConfig& cfg) {
  cfg.validate();
  SimResult res;
  if (cfg.lambda == 0.0) return res;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  Xoshiro256pp arrival_rng(cfg.seed, 0);
  Xoshiro256pp service_rng(cfg.seed, 1);

  const std::int64_t warmup = cfg.effective_warmup();
  const std::int64_t measured = cfg.measured_events;

  double t = 0.0;
  int n = 0;
  double next_arrival = arrival_rng.exponential(cfg.lambda);
  double next_departure = kInf;
  bool arrivals_on = true;
  bool in_window = warmup == 0;

  // FIFO of (admit time, batch index; -1 for out-of-window admissions).
  std::deque<std::pair<double, int>> fifo;

  std::int64_t offered_total = 0;
  std::int64_t stats_in_flight = 0;
  double window_start = 0.0, window_end = 0.0;
  int cur_batch = 0;
  detail::BatchWindow w;

  while (true) {
    const bool is_arrival = arrivals_on && next_arrival <= next_departure;
    if (!is_arrival && next_departure == kInf) break;
    const double te = is_arrival ? next_arrival : next_departure;

    if (in_window) {
      const double dt = te - t;
      w.duration[cur_batch] += dt;
      w.occ_int[cur_batch] += n * dt;
      if (n == 0) w.pi0_time[cur_batch] += dt;
      if (n == cfg.K) w.piK_time[cur_batch] += dt;
    }
    t = te;

    if (is_arrival) {
      ++offered_total;
      const bool measured_arrival =
          offered_total > warmup && offered_total <= warmup + measured;
      int batch = -1;
      if (measured_arrival) {
        const std::int64_t idx = offered_total - warmup - 1;
        batch = static_cast<int>(idx * detail::kBatches / measured);
        cur_batch = batch;
        ++w.offered[batch];
        ++res.offered;
      }
      if (n == cfg.K) {
        if (measured_arrival) {
          ++w.dropped[batch];
          ++res.dropped;
        }
      } else {
        ++n;
        fifo.emplace_back(t, batch);
        if (measured_arrival) {
          ++w.accepted[batch];
          ++res.accepted;
          ++stats_in_flight;
        }
        if (n == 1) next_departure = t + cfg.service.sample(service_rng);
      }
      if (offered_total == warmup) {
        window_start = t;
        in_window = true;
      }
      if (offered_total == warmup + measured) {
        window_end = t;
        in_window = false;
        arrivals_on = false;
        next_arrival = kInf;
        if (stats_in_flight == 0) break;
      } else {
        next_arrival = t + arrival_rng.exponential(cfg.lambda);
      }
    } else {
      --n;
      const auto [t_admit, batch] = fifo.front();
      fifo.pop_front();
      if (batch >= 0) {
        w.sojourn_sum[batch] += t - t_admit;
        ++w.sojourn_n[batch];
        ++res.delivered;
        --stats_in_flight;
      }
      next_departure = n > 0 ? t + cfg.service.sample(service_rng) : kInf;
      if (!arrivals_on && stats_in_flight == 0) break;
    }
  }

  res.measured_time = window_end - window_start;
  double dur = 0.0, occ = 0.0, p0 = 0.0, pk = 0.0, soj = 0.0;
  for (int b = 0; b < detail::kBatches; ++b) {
    dur += w.duration[b];
    occ += w.occ_int[b];
    p0 += w.pi0_time[b];
    pk += w.piK_time[b];
    soj += w.sojourn_sum[b];
  }
  if (dur > 0.0) {
    res.mean_occupancy = occ / dur;
    res.emp_pi0 = p0 / dur;
    res.emp_piK = pk / dur;
    res.emp_lambda_e = static_cast<double>(res.accepted) / dur;
  }
  if (res.offered > 0)
    res.loss_prob = static_cast<double>(res.dropped) / static_cast<double>(res.offered);
  if (res.delivered > 0)
    res.mean_sojourn = soj / static_cast<double>(res.delivered);
  res.half_width = detail::half_widths_from(w);
  return res;
}

// ---------------------------------------------------------------------------
// Feed-forward tandem networks.

struct TandemLink {
  std::string id;
  ServiceDistribution service;
  int K = 1;
};

struct TandemFlow {
  std::string id;
  std::vector<int> path;  // link indices, traversed in order
  double rate = 0.0;      // Poisson generation rate, packets/s
};

struct TandemConfig {
  std::vector<TandemLink> links;
  std::vector<TandemFlow> flows;
  std::int64_t measured_events = 100'000;  // flow generations measured
  std::int64_t warmup_events = -1;
  std::uint64_t seed = 1;

  std::int64_t effective_warmup() const {
    return warmup_events < 0 ? measured_events / 10 : warmup_events;
  }

  void validate() const;
};

struct FlowResult {
  double mean_delay = 0.0;  // end-to-end seconds, delivered packets only
  double half_width = 0.0;
  std::int64_t generated = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped = 0;
};

struct TandemResult {
  std::vector<SimResult> links;
  std::vector<FlowResult> flows;
  double measured_time = 0.0;
};

inline void TandemConfig::validate() const {
  require(!links.empty(), "TandemConfig: no links");
  require(!flows.empty(), "TandemConfig: no flows");
  for (const auto& l : links) {
    l.service.validate();
    require(l.K >= 1, "TandemConfig: link K must be >= 1");
  }
  const int n = static_cast<int>(links.size());
  std::vector<std::vector<int>> adj(n);
  for (const auto& f : flows) {
    require(!f.path.empty(), "TandemConfig: flow path is empty");
    require(std::isfinite(f.rate) && f.rate >= 0.0,
            "TandemConfig: flow rate must be finite and >= 0");
    for (std::size_t i = 0; i < f.path.size(); ++i) {
      require(f.path[i] >= 0 && f.path[i] < n,
              "TandemConfig: flow references unknown link");
      if (i + 1 < f.path.size()) adj[f.path[i]].push_back(f.path[i + 1]);
    }
  }
  // Kahn toposort over the link-precedence graph; leftovers mean a cycle.
  std::vector<int> indeg(n, 0);
  for (const auto& outs : adj)
    for (int v : outs) ++indeg[v];
  std::vector<int> ready;
  for (int v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  int seen = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++seen;
    for (int u : adj[v])
      if (--indeg[u] == 0) ready.push_back(u);
  }
  if (seen != n)
    throw std::invalid_argument("TandemConfig: cyclic path specification");
}

/// Packets traverse their flow's path through FIFO single-server queues; a
/// full queue drops the packet and ends its journey. The measurement window
/// is counted in flow generations, like simulate_queue counts arrivals.
/// Generation keeps running after the window closes until every measured
/// packet is delivered or dropped, so downstream interference stays live.
inline TandemResult simulate_tandem(const TandemConfig& cfg) {
  cfg.validate();
  const int nlinks = static_cast<int>(cfg.links.size());
  const int nflows = static_cast<int>(cfg.flows.size());

  TandemResult res;
  res.links.resize(nlinks);
  res.flows.resize(nflows);

  double total_rate = 0.0;
  for (const auto& f : cfg.flows) total_rate += f.rate;
  if (total_rate == 0.0) return res;

  struct Packet {
    int flow;
    std::size_t hop;
    double t_gen;
    double t_enter_link;
    int batch;  // generation batch; -1 outside the window
  };

  struct LinkState {
    std::deque<std::int64_t> fifo;  // packet pool indices, front in service
    int n = 0;
    detail::BatchWindow w;
  };

  struct Event {
    double t;
    std::uint64_t seq;
    int kind;  // 0 = generation (idx = flow), 1 = departure (idx = link)
    int idx;
    bool operator>(const Event& o) const {
      if (t != o.t) return t > o.t;
      return seq > o.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> heap;
  std::uint64_t seq = 0;

  std::vector<Xoshiro256pp> flow_rng, link_rng;
  flow_rng.reserve(nflows);
  link_rng.reserve(nlinks);
  for (int f = 0; f < nflows; ++f) flow_rng.emplace_back(cfg.seed, 2 * f);
  for (int l = 0; l < nlinks; ++l) link_rng.emplace_back(cfg.seed, 2 * l + 1);

  std::vector<LinkState> links(nlinks);
  std::vector<Packet> pool;
  pool.reserve(4096);

  std::array<double, detail::kBatches> flow_zero{};
  std::vector<std::array<double, detail::kBatches>> flow_delay(nflows, flow_zero);
  std::vector<std::array<std::int64_t, detail::kBatches>> flow_count(
      nflows, std::array<std::int64_t, detail::kBatches>{});

  const std::int64_t warmup = cfg.effective_warmup();
  const std::int64_t measured = cfg.measured_events;

  for (int f = 0; f < nflows; ++f)
    if (cfg.flows[f].rate > 0.0)
      heap.push({flow_rng[f].exponential(cfg.flows[f].rate), seq++, 0, f});

  double t = 0.0;
  bool in_window = warmup == 0;
  bool window_closed = false;
  int cur_batch = 0;
  std::int64_t generated_total = 0;
  std::int64_t stats_in_flight = 0;
  double window_start = 0.0, window_end = 0.0;

  auto integrate_to = [&](double te) {
    if (!in_window) return;
    const double dt = te - t;
    for (int l = 0; l < nlinks; ++l) {
      auto& st = links[l];
      st.w.duration[cur_batch] += dt;
      st.w.occ_int[cur_batch] += st.n * dt;
      if (st.n == 0) st.w.pi0_time[cur_batch] += dt;
      if (st.n == cfg.links[l].K) st.w.piK_time[cur_batch] += dt;
    }
  };

  // One outstanding departure event per busy link; service time is drawn
  // when the head-of-line packet actually enters service.
  auto start_service = [&](int l) {
    heap.push({t + cfg.links[l].service.sample(link_rng[l]), seq++, 1, l});
  };

  auto resolve_drop = [&](std::int64_t pidx) {
    auto& p = pool[pidx];
    if (p.batch >= 0) {
      ++res.flows[p.flow].dropped;
      --stats_in_flight;
    }
  };
  auto arrive_at_link = [&](std::int64_t pidx) {
    auto& p = pool[pidx];
    const int l = cfg.flows[p.flow].path[p.hop];
    auto& st = links[l];
    if (in_window) {
      ++st.w.offered[cur_batch];
      ++res.links[l].offered;
    }
    if (st.n == cfg.links[l].K) {
      if (in_window) {
        ++st.w.dropped[cur_batch];
        ++res.links[l].dropped;
      }
      resolve_drop(pidx);
      return;
    }
    ++st.n;
    p.t_enter_link = t;
    st.fifo.push_back(pidx);
    if (in_window) {
      ++st.w.accepted[cur_batch];
      ++res.links[l].accepted;
    }
    if (st.n == 1) start_service(l);
  };

  while (!heap.empty()) {
    const Event ev = heap.top();
    heap.pop();
    integrate_to(ev.t);
    t = ev.t;

    if (ev.kind == 0) {
      const int f = ev.idx;
      ++generated_total;
      const bool measured_gen =
          generated_total > warmup && generated_total <= warmup + measured;
      int batch = -1;
      if (measured_gen) {
        const std::int64_t idx = generated_total - warmup - 1;
        batch = static_cast<int>(idx * detail::kBatches / measured);
        cur_batch = batch;
        ++res.flows[f].generated;
      }
      pool.push_back({f, 0, t, t, batch});
      if (batch >= 0) ++stats_in_flight;
      arrive_at_link(static_cast<std::int64_t>(pool.size()) - 1);

      if (generated_total == warmup) {
        window_start = t;
        in_window = true;
      }
      if (generated_total == warmup + measured) {
        window_end = t;
        in_window = false;
        window_closed = true;
      }
      if (!window_closed || stats_in_flight > 0)
        heap.push({t + flow_rng[f].exponential(cfg.flows[f].rate), seq++, 0, f});
    } else {
      const int l = ev.idx;
      auto& st = links[l];
      const std::int64_t pidx = st.fifo.front();
      st.fifo.pop_front();
      --st.n;
      auto& p = pool[pidx];
      if (p.batch >= 0) {
        st.w.sojourn_sum[p.batch] += t - p.t_enter_link;
        ++st.w.sojourn_n[p.batch];
        ++res.links[l].delivered;
      }
      if (st.n > 0) start_service(l);

      ++p.hop;
      if (p.hop == cfg.flows[p.flow].path.size()) {
        if (p.batch >= 0) {
          flow_delay[p.flow][p.batch] += t - p.t_gen;
          ++flow_count[p.flow][p.batch];
          ++res.flows[p.flow].delivered;
          --stats_in_flight;
        }
      } else {
        arrive_at_link(pidx);
      }
    }

    if (window_closed && stats_in_flight == 0) break;
  }

  res.measured_time = window_end - window_start;
  for (int l = 0; l < nlinks; ++l) {
    auto& st = links[l];
    auto& r = res.links[l];
    double dur = 0.0, occ = 0.0, p0 = 0.0, pk = 0.0, soj = 0.0;
    std::int64_t nsoj = 0;
    for (int b = 0; b < detail::kBatches; ++b) {
      dur += st.w.duration[b];
      occ += st.w.occ_int[b];
      p0 += st.w.pi0_time[b];
      pk += st.w.piK_time[b];
      soj += st.w.sojourn_sum[b];
      nsoj += st.w.sojourn_n[b];
    }
    if (dur > 0.0) {
      r.mean_occupancy = occ / dur;
      r.emp_pi0 = p0 / dur;
      r.emp_piK = pk / dur;
      r.emp_lambda_e = static_cast<double>(r.accepted) / dur;
    }
    if (r.offered > 0)
      r.loss_prob = static_cast<double>(r.dropped) / static_cast<double>(r.offered);
    if (nsoj > 0) r.mean_sojourn = soj / static_cast<double>(nsoj);
    r.measured_time = res.measured_time;
    r.half_width = detail::half_widths_from(st.w);
  }
  for (int f = 0; f < nflows; ++f) {
    double sum = 0.0;
    std::int64_t cnt = 0;
    for (int b = 0; b < detail::kBatches; ++b) {
      sum += flow_delay[f][b];
      cnt += flow_count[f][b];
    }
    if (cnt > 0) res.flows[f].mean_delay = sum / static_cast<double>(cnt);
    res.flows[f].half_width = detail::batch_half_width([&](int b, double& m) {
      if (flow_count[f][b] <= 0) return false;
      m = flow_delay[f][b] / static_cast<double>(flow_count[f][b]);
      return true;
    });
  }
  return res;
}

}  // namespace qpred
