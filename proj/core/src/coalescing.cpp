#include "pullcons/coalescing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>

#include "pullcons/parallel.hpp"

namespace pullcons {

Graph Graph::complete(NodeId n) {
  if (n < 2) throw Error(Errc::NoNeighbor, "complete graph needs at least 2 nodes");
  return Graph(n, true, {});
}

Graph Graph::cycle(NodeId n) {
  if (n < 3) throw Error(Errc::InvalidArgument, "cycle needs at least 3 nodes");
  std::vector<std::vector<NodeId>> adj(n);
  for (NodeId u = 0; u < n; ++u) adj[u] = {(u + n - 1) % n, (u + 1) % n};
  return Graph(n, false, std::move(adj));
}

Graph Graph::random_regular(NodeId n, unsigned d, RngStream& rng) {
  if (d < 1 || d >= n || (static_cast<std::uint64_t>(n) * d) % 2 != 0) {
    throw Error(Errc::InvalidArgument, "no simple " + std::to_string(d) + "-regular graph on " +
                                           std::to_string(n) + " nodes");
  }
  std::vector<NodeId> stubs;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    stubs.clear();
    for (NodeId u = 0; u < n; ++u) stubs.insert(stubs.end(), d, u);
    for (std::size_t i = stubs.size(); i > 1; --i) {
      std::swap(stubs[i - 1], stubs[rng.uniform_index(i)]);
    }
    std::vector<std::vector<NodeId>> adj(n);
    bool simple = true;
    for (std::size_t i = 0; i < stubs.size() && simple; i += 2) {
      const NodeId a = stubs[i];
      const NodeId b = stubs[i + 1];
      if (a == b || std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end()) {
        simple = false;
      } else {
        adj[a].push_back(b);
        adj[b].push_back(a);
      }
    }
    if (simple) {
      for (auto& nb : adj) std::sort(nb.begin(), nb.end());
      return Graph(n, false, std::move(adj));
    }
  }
  throw Error(Errc::InvalidArgument, "random regular graph sampling did not converge");
}

Graph Graph::from_adjacency(std::vector<std::vector<NodeId>> adjacency) {
  const auto n = static_cast<NodeId>(adjacency.size());
  if (n < 2) throw Error(Errc::InvalidArgument, "graph needs at least 2 nodes");
  for (NodeId u = 0; u < n; ++u) {
    if (adjacency[u].empty()) {
      throw Error(Errc::NoNeighbor, "node " + std::to_string(u) + " is isolated");
    }
    for (NodeId v : adjacency[u]) {
      if (v >= n) throw Error(Errc::InvalidArgument, "neighbor out of range");
      const auto& back = adjacency[v];
      if (std::find(back.begin(), back.end(), u) == back.end()) {
        throw Error(Errc::InvalidArgument, "adjacency is not symmetric at (" +
                                               std::to_string(u) + "," + std::to_string(v) + ")");
      }
    }
  }
  return Graph(n, false, std::move(adjacency));
}

Graph Graph::read_edge_list(std::istream& in) {
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  if (!(in >> n >> m)) throw Error(Errc::ParseError, "edge list header must be 'n m'");
  if (n > std::numeric_limits<NodeId>::max()) throw Error(Errc::ParseError, "n too large");
  std::vector<std::vector<NodeId>> adj(n);
  for (std::uint64_t e = 0; e < m; ++e) {
    std::uint64_t u = 0;
    std::uint64_t v = 0;
    if (!(in >> u >> v)) {
      throw Error(Errc::ParseError, "expected " + std::to_string(m) + " edges, read " +
                                        std::to_string(e));
    }
    if (u >= n || v >= n) {
      throw Error(Errc::ParseError, "edge (" + std::to_string(u) + "," + std::to_string(v) +
                                        ") out of range");
    }
    if (u == v) throw Error(Errc::ParseError, "self-loop at " + std::to_string(u));
    adj[u].push_back(static_cast<NodeId>(v));
    adj[v].push_back(static_cast<NodeId>(u));
  }
  return from_adjacency(std::move(adj));
}

Graph Graph::load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  return read_edge_list(in);
}

std::size_t Graph::degree(NodeId u) const {
  return complete_ ? n_ - 1 : adjacency_.at(u).size();
}

NodeId Graph::uniform_neighbor(NodeId u, RngStream& rng) const {
  if (complete_) return static_cast<NodeId>(sample_uniform_node(n_, true, u, rng));
  const auto& nb = adjacency_[u];
  return nb[rng.uniform_index(nb.size())];
}

bool Graph::adjacent(NodeId u, NodeId v) const {
  if (complete_) return u != v && u < n_ && v < n_;
  const auto& nb = adjacency_.at(u);
  return std::find(nb.begin(), nb.end(), v) != nb.end();
}

std::string Graph::describe() const {
  if (complete_) return "complete:" + std::to_string(n_);
  std::size_t edges = 0;
  for (const auto& nb : adjacency_) edges += nb.size();
  return "explicit:" + std::to_string(n_) + ":" + std::to_string(edges / 2);
}

RandomMapTable::RandomMapTable(const Graph& g, RngStream rng) : graph_(&g), rng_(std::move(rng)) {}

RandomMapTable RandomMapTable::from_rows(const Graph& g, std::vector<std::vector<NodeId>> rows) {
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != g.size()) {
      throw Error(Errc::InvalidArgument, "map row " + std::to_string(t) + " has wrong length");
    }
    for (NodeId u = 0; u < g.size(); ++u) {
      if (!g.adjacent(u, rows[t][u])) {
        throw Error(Errc::InvalidArgument, "Y_" + std::to_string(t) + "(" + std::to_string(u) +
                                               ") is not a neighbor");
      }
    }
  }
  return RandomMapTable(g, std::nullopt, std::move(rows));
}

const std::vector<NodeId>* RandomMapTable::row(std::uint64_t t) {
  if (t >= rows_.size()) {
    if (!rng_) return nullptr;
    while (rows_.size() <= t) {
      std::vector<NodeId> r(graph_->size());
      for (NodeId u = 0; u < graph_->size(); ++u) r[u] = graph_->uniform_neighbor(u, *rng_);
      rows_.push_back(std::move(r));
    }
  }
  return &rows_[t];
}

namespace {

/// Distinct-value counter over node ids with O(1) reset.
class DistinctCounter {
 public:
  explicit DistinctCounter(std::size_t n) : stamp_(n, 0) {}

  std::uint64_t count(std::span<const NodeId> values) {
    ++epoch_;
    std::uint64_t distinct = 0;
    for (NodeId v : values) {
      if (stamp_[v] != epoch_) {
        stamp_[v] = epoch_;
        ++distinct;
      }
    }
    return distinct;
  }

 private:
  std::vector<std::uint64_t> stamp_;
  std::uint64_t epoch_ = 0;
};

}  // namespace

CoalescenceTrajectory run_coalescence(const Graph& g, RandomMapTable& maps, std::uint64_t k,
                                      std::uint64_t max_rounds, bool keep_positions) {
  const NodeId n = g.size();
  std::vector<NodeId> pos(n);
  std::iota(pos.begin(), pos.end(), NodeId{0});
  DistinctCounter distinct(n);

  CoalescenceTrajectory traj;
  traj.walk_counts.push_back(n);
  if (keep_positions) traj.positions.push_back(pos);
  for (std::uint64_t t = 0; traj.walk_counts.back() > k; ++t) {
    const auto* y = t < max_rounds ? maps.row(t) : nullptr;
    if (y == nullptr) {
      traj.truncated = true;
      break;
    }
    for (auto& p : pos) p = (*y)[p];
    traj.walk_counts.push_back(distinct.count(pos));
    if (keep_positions) traj.positions.push_back(pos);
  }
  return traj;
}

std::uint64_t run_voter_with_maps(const Graph& g, RandomMapTable& maps, std::uint64_t tau) {
  const NodeId n = g.size();
  std::vector<NodeId> opinion(n);
  std::iota(opinion.begin(), opinion.end(), NodeId{0});
  std::vector<NodeId> next(n);
  for (std::uint64_t r = 1; r <= tau; ++r) {
    const auto* y = maps.row(tau - r);
    if (y == nullptr) throw Error(Errc::InvalidArgument, "map table shorter than tau");
    for (NodeId u = 0; u < n; ++u) next[u] = opinion[(*y)[u]];
    opinion.swap(next);
  }
  return DistinctCounter(n).count(opinion);
}

bool duality_check(const Graph& g, std::uint64_t t_max, const RngStream& rng) {
  if (t_max < 1) throw Error(Errc::InvalidArgument, "t_max must be >= 1");
  RandomMapTable maps(g, rng);
  const auto traj = run_coalescence(g, maps, 1, t_max);
  for (std::uint64_t tau = 0; tau <= t_max; ++tau) {
    // Once a single walk is left it stays single.
    const std::uint64_t walks =
        tau < traj.walk_counts.size() ? traj.walk_counts[tau] : traj.walk_counts.back();
    const std::uint64_t opinions = run_voter_with_maps(g, maps, tau);
    if (walks != opinions) {
      throw Error(Errc::CouplingViolation,
                  "tau=" + std::to_string(tau) + ": " + std::to_string(walks) + " walks vs " +
                      std::to_string(opinions) + " opinions on " + g.describe());
    }
  }
  return true;
}

StoppingTimeSample summarize_times(std::vector<std::optional<std::uint64_t>> times) {
  StoppingTimeSample s;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t done = 0;
  for (const auto& t : times) {
    if (!t) {
      ++s.censored;
      continue;
    }
    const auto v = static_cast<double>(*t);
    sum += v;
    sum_sq += v * v;
    ++done;
  }
  if (done > 0) {
    const auto nd = static_cast<double>(done);
    s.mean = sum / nd;
    if (done > 1) {
      const double var = std::max(0.0, (sum_sq - nd * s.mean * s.mean) / (nd - 1.0));
      s.stderr_mean = std::sqrt(var / nd);
    }
  }
  s.times = std::move(times);
  return s;
}

StoppingTimeSample coalescence_time_stats(const Graph& g, std::uint64_t k, std::uint64_t trials,
                                          const RngStream& rng, std::uint64_t max_rounds,
                                          unsigned workers) {
  const NodeId n = g.size();
  if (k < 1 || k > n) throw Error(Errc::InvalidArgument, "need 1 <= k <= n");
  if (g.is_complete() && n < 3 && k < n) {
    // Two neighbor-only walks on K_2 swap forever.
    throw Error(Errc::InvalidArgument, "coalescence on K_2 never completes");
  }
  std::vector<std::optional<std::uint64_t>> times(trials);
  parallel_for(trials, workers, [&](std::uint64_t i) {
    RngStream trial_rng = rng.for_trial(i);
    std::vector<NodeId> occupied(n);
    std::iota(occupied.begin(), occupied.end(), NodeId{0});
    std::uint64_t t = 0;
    while (occupied.size() > k) {
      if (t == max_rounds) return;
      for (auto& p : occupied) p = g.uniform_neighbor(p, trial_rng);
      std::sort(occupied.begin(), occupied.end());
      occupied.erase(std::unique(occupied.begin(), occupied.end()), occupied.end());
      ++t;
    }
    times[i] = t;
  });
  return summarize_times(std::move(times));
}

namespace {

/// x distinct nodes of [0, n), Floyd's algorithm.
std::vector<NodeId> distinct_nodes(std::uint64_t n, std::uint64_t x, RngStream& rng) {
  std::vector<NodeId> chosen;
  chosen.reserve(x);
  std::vector<bool> taken(n, false);
  for (std::uint64_t j = n - x; j < n; ++j) {
    const auto t = static_cast<NodeId>(rng.uniform_index(j + 1));
    const NodeId pick = taken[t] ? static_cast<NodeId>(j) : t;
    taken[pick] = true;
    chosen.push_back(pick);
  }
  return chosen;
}

}  // namespace

std::uint64_t coalescence_count_step(std::uint64_t n, std::uint64_t x, RngStream& rng) {
  if (n < 2) throw Error(Errc::NoNeighbor, "complete graph needs at least 2 nodes");
  if (x > n) throw Error(Errc::InvalidArgument, "more walks than nodes");
  if (x == 0) return 0;
  auto walks = distinct_nodes(n, x, rng);
  for (auto& p : walks) p = static_cast<NodeId>(sample_uniform_node(n, true, p, rng));
  std::sort(walks.begin(), walks.end());
  return static_cast<std::uint64_t>(std::unique(walks.begin(), walks.end()) - walks.begin());
}

MeanEstimate empirical_one_step_drift(std::uint64_t n, std::uint64_t x, std::uint64_t samples,
                                      const RngStream& rng) {
  if (x < 2 || x > n) throw Error(Errc::InvalidArgument, "need 2 <= x <= n");
  if (samples < 2) throw Error(Errc::InvalidArgument, "need at least two samples");
  RngStream s = rng;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const auto v = static_cast<double>(coalescence_count_step(n, x, s));
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  MeanEstimate est;
  est.samples = samples;
  est.mean = mean;
  est.stddev = std::sqrt(m2 / static_cast<double>(samples - 1));
  est.stderr_mean = est.stddev / std::sqrt(static_cast<double>(samples));
  return est;
}

}  // namespace pullcons
