#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pullcons/sampler.hpp"

namespace pullcons {

using NodeId = std::uint32_t;

/// Undirected graph on nodes [0, n). The complete graph is stored implicitly.
class Graph {
 public:
  static Graph complete(NodeId n);
  static Graph cycle(NodeId n);
  /// Uniform-ish random d-regular simple graph via the configuration model
  /// with restarts.
  static Graph random_regular(NodeId n, unsigned d, RngStream& rng);
  /// Neighbor lists must be symmetric and every node must have degree >= 1.
  static Graph from_adjacency(std::vector<std::vector<NodeId>> adjacency);
  /// Edge-list text: first line "n m", then m lines "u v", 0-indexed.
  static Graph read_edge_list(std::istream& in);
  static Graph load_edge_list(const std::string& path);

  NodeId size() const noexcept { return n_; }
  bool is_complete() const noexcept { return complete_; }
  std::size_t degree(NodeId u) const;
  /// Uniform over N(u); on the complete graph N(u) = V \ {u}.
  NodeId uniform_neighbor(NodeId u, RngStream& rng) const;
  bool adjacent(NodeId u, NodeId v) const;
  std::string describe() const;

 private:
  Graph(NodeId n, bool complete, std::vector<std::vector<NodeId>> adjacency)
      : n_(n), complete_(complete), adjacency_(std::move(adjacency)) {}

  NodeId n_ = 0;
  bool complete_ = false;
  std::vector<std::vector<NodeId>> adjacency_;
};

/// The shared neighbor choices Y_t(u). Rows are drawn lazily from the owned
/// stream and retained; a table built from explicit rows has a fixed length.
class RandomMapTable {
 public:
  RandomMapTable(const Graph& g, RngStream rng);
  /// Validates maps[t][u] in N(u).
  static RandomMapTable from_rows(const Graph& g, std::vector<std::vector<NodeId>> rows);

  /// Row t, drawing rows up to t if needed; nullptr past a fixed table's end.
  const std::vector<NodeId>* row(std::uint64_t t);
  std::uint64_t materialized_rounds() const noexcept { return rows_.size(); }
  bool is_fixed() const noexcept { return !rng_.has_value(); }
  const Graph& graph() const noexcept { return *graph_; }

 private:
  RandomMapTable(const Graph& g, std::optional<RngStream> rng,
                 std::vector<std::vector<NodeId>> rows)
      : graph_(&g), rng_(std::move(rng)), rows_(std::move(rows)) {}

  const Graph* graph_;
  std::optional<RngStream> rng_;
  std::vector<std::vector<NodeId>> rows_;
};

struct CoalescenceTrajectory {
  std::vector<std::uint64_t> walk_counts;  // X_0 = n, X_1, ...
  std::vector<std::vector<NodeId>> positions;  // X_t(u) per round, when retained
  bool truncated = false;  // budget ran out while X_t > k
};

/// Applies X_t(u) = Y_{t-1}(X_{t-1}(u)) from X_0(u) = u until at most k walks
/// remain or `max_rounds` rounds (or the fixed table) are exhausted.
CoalescenceTrajectory run_coalescence(const Graph& g, RandomMapTable& maps, std::uint64_t k,
                                      std::uint64_t max_rounds, bool keep_positions = false);

/// Voter with every node starting on its own color, where round r of tau uses
/// map Y_{tau - r}. Returns the number of surviving opinions.
std::uint64_t run_voter_with_maps(const Graph& g, RandomMapTable& maps, std::uint64_t tau);

/// Draws one map table and checks the opinion count of run_voter_with_maps
/// equals the walk count for every tau <= t_max. Throws CouplingViolation on
/// the first mismatch.
bool duality_check(const Graph& g, std::uint64_t t_max, const RngStream& rng);

struct StoppingTimeSample {
  std::vector<std::optional<std::uint64_t>> times;  // empty = censored
  std::uint64_t censored = 0;
  double mean = 0.0;    // over uncensored samples
  double stderr_mean = 0.0;
};

StoppingTimeSample summarize_times(std::vector<std::optional<std::uint64_t>> times);

/// Samples of T_C^k = min{t : X_t <= k}. Trial i uses substream i of rng.
/// The complete graph runs on the occupied-node set only.
StoppingTimeSample coalescence_time_stats(const Graph& g, std::uint64_t k, std::uint64_t trials,
                                          const RngStream& rng,
                                          std::uint64_t max_rounds = 10'000'000,
                                          unsigned workers = 1);

/// Next walk count on K_n from x walks on distinct nodes. On the complete
/// graph the count is a Markov chain, so this is its transition sampler.
std::uint64_t coalescence_count_step(std::uint64_t n, std::uint64_t x, RngStream& rng);

struct MeanEstimate {
  double mean = 0.0;
  double stddev = 0.0;
  double stderr_mean = 0.0;
  std::uint64_t samples = 0;
};

/// Monte-Carlo E[X_{t+1} | X_t = x] on K_n, walks placed on x distinct
/// uniformly chosen nodes.
MeanEstimate empirical_one_step_drift(std::uint64_t n, std::uint64_t x, std::uint64_t samples,
                                      const RngStream& rng);

}  // namespace pullcons
