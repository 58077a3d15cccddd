#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pullcons/configuration.hpp"
#include "pullcons/rules.hpp"
#include "pullcons/sampler.hpp"

namespace pullcons {

/// Largest n accepted by enumerate_configurations (p(40) = 37338).
inline constexpr Count kMaxEnumeratedPopulation = 40;

/// All partitions of n in canonical form, from (n) down to (1,...,1).
std::vector<Configuration> enumerate_configurations(Count n);

struct DominanceViolation {
  Configuration c;        // the majorizing input, fed to rule_p
  Configuration c_tilde;  // the majorized input, fed to rule_q
  std::size_t prefix = 0; // prefix length with the largest deficit
  double margin = 0.0;    // prefix(alpha_q(c_tilde)) - prefix(alpha_p(c)) at that prefix
};

struct DominanceReport {
  Count n = 0;
  UpdateRule rule_p;
  UpdateRule rule_q;
  std::uint64_t pairs_checked = 0;
  std::vector<DominanceViolation> violations;

  bool holds() const noexcept { return violations.empty(); }
};

/// For every ordered pair of partitions c, c~ of n with c majorizing c~,
/// checks alpha_p(c) majorizes alpha_q(c~).
DominanceReport check_dominance(const UpdateRule& rule_p, const UpdateRule& rule_q, Count n);

struct PrefixComparison {
  std::size_t prefix = 0;
  double mean_lower = 0.0;   // E[phi_j(Mult(m, theta1))] estimate
  double mean_upper = 0.0;   // E[phi_j(Mult(m, theta2))] estimate
  double stderr_diff = 0.0;  // standard error of the paired difference
  bool pass = false;
};

struct StochasticMajorizationReport {
  Count trials_per_draw = 0;
  std::uint64_t draws = 0;
  std::vector<PrefixComparison> prefixes;

  bool pass() const noexcept;
};

/// Monte-Carlo check that Mult(m, theta1) is dominated by Mult(m, theta2) in
/// every prefix functional. Both laws are driven by the same random stream,
/// so identical inputs produce identical draws.
StochasticMajorizationReport empirical_stochastic_majorization(const ProbabilityVector& theta1,
                                                              const ProbabilityVector& theta2,
                                                              Count m, std::uint64_t draws,
                                                              const RngStream& rng);

/// Two-sided DKW-style radius sqrt(ln(2/delta) / (2 trials)).
double dkw_epsilon(std::uint64_t trials, double delta = 0.05);

struct TimeDominanceOptions {
  /// Maximum tolerated CDF deficit; dkw_epsilon(trials) when unset.
  std::optional<double> epsilon;
  unsigned workers = 1;
};

struct TimeDominanceReport {
  std::vector<std::optional<std::uint64_t>> fast_times;  // empty = censored
  std::vector<std::optional<std::uint64_t>> slow_times;
  std::uint64_t max_rounds = 0;
  std::uint64_t fast_censored = 0;
  std::uint64_t slow_censored = 0;
  double delta = 0.0;             // max_t F_slow(t) - F_fast(t), floored at 0
  std::uint64_t worst_round = 0;  // a t attaining delta
  double epsilon = 0.0;
  bool verdict = false;
};

/// Empirical CDF of stopping times; censored samples never count as stopped.
double empirical_cdf(const std::vector<std::optional<std::uint64_t>>& times, std::uint64_t t);

/// Runs paired trials of both rules from c0 (trial i of either rule uses
/// substream i of rng) and compares the stopping-time CDFs. A censored fast
/// trial never stops; a censored slow trial counts as stopping at max_rounds.
TimeDominanceReport empirical_time_dominance(const UpdateRule& rule_fast,
                                             const UpdateRule& rule_slow,
                                             const Configuration& c0, const StopCondition& stop,
                                             std::uint64_t trials, const RngStream& rng,
                                             const TimeDominanceOptions& options = {});

/// Same comparison from distinct starting points (c for the fast rule,
/// c_tilde for the slow one).
TimeDominanceReport empirical_time_dominance_pairwise(
    const UpdateRule& rule_fast, const Configuration& c, const UpdateRule& rule_slow,
    const Configuration& c_tilde, const StopCondition& stop, std::uint64_t trials,
    const RngStream& rng, const TimeDominanceOptions& options = {});

}  // namespace pullcons
