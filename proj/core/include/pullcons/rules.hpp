#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "pullcons/configuration.hpp"
#include "pullcons/sampler.hpp"

namespace pullcons {

enum class RuleKind { Voter, TwoChoices, HMajority };

/// Self-inclusive: samples are uniform over all n nodes, with replacement.
/// Neighbor-only: uniform over the n - 1 other nodes.
enum class SamplingMode { SelfInclusive, NeighborOnly };

struct UpdateRule {
  RuleKind kind = RuleKind::Voter;
  int h = 1;  // sample count; meaningful for HMajority only
  SamplingMode mode = SamplingMode::SelfInclusive;

  static UpdateRule voter() { return {RuleKind::Voter, 1, SamplingMode::SelfInclusive}; }
  static UpdateRule two_choices() { return {RuleKind::TwoChoices, 2, SamplingMode::SelfInclusive}; }
  static UpdateRule h_majority(int h);

  /// Number of nodes each node samples per round.
  int samples_per_node() const noexcept;
  /// Whether one step is Mult(n, alpha(c)) for a process function alpha.
  bool is_ac() const noexcept;
  /// "voter", "2choices" or "hmaj:<h>".
  std::string name() const;

  friend bool operator==(const UpdateRule&, const UpdateRule&) = default;
};

/// Accepts "voter", "2choices", "twochoices", "hmaj:<h>" and "<h>maj".
UpdateRule parse_rule(std::string_view text);

/// Budget on k^h for the plurality enumeration of general h-Majority.
inline constexpr double kExactEnumerationBudget = 1e7;

/// alpha(c) for an AC rule. Voter and h-Majority with h <= 2 give c/n,
/// 3-Majority uses its closed form, h >= 4 enumerates sample multisets.
ProbabilityVector process_function(const UpdateRule& rule, const Configuration& c);

/// Plurality-with-uniform-tie-break adoption probabilities when each node
/// draws h samples with replacement from the color distribution x. Sums over
/// multiplicity vectors weighted by multinomial coefficients, so it works
/// for any ordered field (double, boost::rational).
template <typename T>
std::vector<T> plurality_adoption(int h, const std::vector<T>& x);

using Rational = boost::rational<std::int64_t>;

/// Exact rational process function for small populations (denominators grow
/// as n^h; no overflow checking beyond what boost::rational does).
std::vector<Rational> process_function_exact(const UpdateRule& rule, const Configuration& c);

/// One synchronous round of an AC rule: canonicalize(Mult(n, alpha(c))).
Configuration step_ac(const UpdateRule& rule, const Configuration& c, RngStream& rng);

/// One synchronous round of 2-Choices, drawn per source color: the nodes of
/// color j that switch, then their split across target colors, each by
/// conditional binomials. O(k^2) worst case, far less when few nodes move.
Configuration step_two_choices(const Configuration& c, RngStream& rng);

/// Reference stepper: materializes every node, draws its samples explicitly
/// and applies the rule. O(n * h). Supports both sampling modes.
Configuration step_per_node(const UpdateRule& rule, const Configuration& c, RngStream& rng);

/// Dispatches to the fastest exact stepper for the rule. h-Majority with
/// k^h above the enumeration budget falls back to the per-node stepper.
Configuration step(const UpdateRule& rule, const Configuration& c, RngStream& rng);

/// Expected fractions after one round where a closed form exists: Voter gives
/// x (as do 1- and 2-Majority), 2-Choices and 3-Majority both give
/// x_i^2 + (1 - |x|^2) x_i.
ProbabilityVector expected_fraction_after_step(const UpdateRule& rule, const Configuration& c);

struct StopOutcome {
  std::optional<std::uint64_t> stop_time;  // empty when censored
  Configuration final_state;
  Count max_support_peak = 0;

  bool censored() const noexcept { return !stop_time.has_value(); }
};

/// Called with (round, configuration) for round 0 and after every step.
using RoundObserver = std::function<void(std::uint64_t, const Configuration&)>;

/// Steps `rule` from c0 until at most stop.kappa colors remain or
/// stop.max_rounds rounds have run.
StopOutcome simulate_until(const UpdateRule& rule, const Configuration& c0,
                           const StopCondition& stop, RngStream& rng,
                           const RoundObserver& observer = {});

// ---------------------------------------------------------------------------

template <typename T>
std::vector<T> plurality_adoption(int h, const std::vector<T>& x) {
  const std::size_t k = x.size();
  std::vector<T> alpha(k, T(0));
  if (k == 0 || h < 1) return alpha;

  std::vector<int> mult(k, 0);
  // binom[r][m] = C(r, m)
  std::vector<std::vector<std::int64_t>> binom(static_cast<std::size_t>(h) + 1);
  for (int r = 0; r <= h; ++r) {
    binom[r].assign(static_cast<std::size_t>(r) + 1, 1);
    for (int m = 1; m < r; ++m) binom[r][m] = binom[r - 1][m - 1] + binom[r - 1][m];
  }

  std::vector<int> tied;
  auto leaf = [&](const T& weight) {
    int top = 0;
    for (int m : mult) top = std::max(top, m);
    tied.clear();
    for (std::size_t i = 0; i < k; ++i) {
      if (mult[i] == top) tied.push_back(static_cast<int>(i));
    }
    const T share = weight / T(static_cast<std::int64_t>(tied.size()));
    for (int i : tied) alpha[static_cast<std::size_t>(i)] += share;
  };

  std::function<void(std::size_t, int, const T&)> recurse =
      [&](std::size_t i, int remaining, const T& weight) {
        if (i + 1 == k) {
          T w = weight;
          for (int r = 0; r < remaining; ++r) w *= x[i];
          mult[i] = remaining;
          leaf(w);
          mult[i] = 0;
          return;
        }
        T power(1);
        for (int m = 0; m <= remaining; ++m) {
          mult[i] = m;
          recurse(i + 1, remaining - m,
                  weight * T(binom[static_cast<std::size_t>(remaining)][static_cast<std::size_t>(m)]) *
                      power);
          power *= x[i];
        }
        mult[i] = 0;
      };
  recurse(0, h, T(1));
  return alpha;
}

}  // namespace pullcons
