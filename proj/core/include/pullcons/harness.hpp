#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pullcons/configuration.hpp"
#include "pullcons/rules.hpp"
#include "pullcons/sampler.hpp"

namespace pullcons {

inline constexpr std::string_view kVersion = "0.1.0";

/// Purposes used when deriving substreams from an experiment seed.
enum class StreamPurpose : std::uint64_t {
  Simulation = 1,
  LowerBound = 2,
  CoupledProcess = 3,
  TwoPhase = 4,
  Duality = 5,
  Coalescence = 6,
  DriftValidation = 7,
};

/// Initial-configuration families.
struct InitialSpec {
  enum class Kind { NColor, Balanced, Biased, Explicit };

  Kind kind = Kind::NColor;
  Count k = 0;
  Count bias = 0;
  std::vector<Count> counts;

  /// "ncolor", "balanced:<k>", "biased:<k>:<b>" or "explicit:<c1,c2,...>".
  static InitialSpec parse(std::string_view text);
  std::string to_string() const;

  /// NColor: n colors of support 1. Balanced(k): as even as possible, the
  /// first n mod k colors one larger. Biased(k, b): c2 = ceil((n-b)/k),
  /// c1 = c2 + b, colors 3..k split the rest evenly. Explicit: as given,
  /// and must sum to n.
  Configuration build(Count n) const;
};

struct RecordSpec {
  enum class Mode { SummaryOnly, Auto, Every };

  Mode mode = Mode::SummaryOnly;
  std::uint64_t every = 1;  // stride for Mode::Every
  bool full_counts = false;
};

struct ExperimentSpec {
  std::vector<UpdateRule> rules;
  Count n = 0;
  InitialSpec initial;
  StopCondition stop;
  std::uint64_t trials = 1;
  std::uint64_t seed = 1;
  RecordSpec record;

  void validate() const;
};

struct TrajectoryPoint {
  std::uint64_t round = 0;
  std::size_t number_of_colors = 0;
  Count max_support = 0;
  std::vector<Count> counts;  // only when full counts are recorded
};

using TrajectoryRecord = std::vector<TrajectoryPoint>;

struct SimulationOutcome {
  std::optional<std::uint64_t> stop_time;
  Count max_support_peak = 0;
  Configuration final_state = Configuration::consensus(1);
  TrajectoryRecord trajectory;

  bool censored() const noexcept { return !stop_time.has_value(); }
};

/// Runs `rule` from spec.initial until at most kappa colors remain. Trial i of
/// every rule draws from the same substream, so rules are compared on paired
/// randomness. Mode::Auto keeps every ceil(T/1000)-th round plus the last.
SimulationOutcome simulate_to_stop(const UpdateRule& rule, const ExperimentSpec& spec,
                                   std::uint64_t trial);

/// Thresholds of the 2-Choices lower-bound argument; derived quantities are
/// always recomputed from (gamma, ell, n). Logarithms are natural.
class LowerBoundParams {
 public:
  LowerBoundParams(double gamma, Count ell, Count n);

  double gamma() const noexcept { return gamma_; }
  Count ell() const noexcept { return ell_; }
  Count n() const noexcept { return n_; }
  /// max(2 ell, ceil(gamma ln n)).
  Count ell_prime() const;
  /// floor(n / (gamma ell')).
  std::uint64_t t0() const;
  /// (ell' / n)^2.
  double p() const;

 private:
  double gamma_;
  Count ell_;
  Count n_;
};

struct LowerBoundReport {
  Count ell = 0;
  Count ell_prime = 0;
  std::uint64_t t0 = 0;
  double p = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t exceeded = 0;
  std::vector<std::optional<std::uint64_t>> first_exceedance;  // per trial
  std::vector<Count> peak_support;                             // max over [0, t0]
  std::vector<TrajectoryRecord> trajectories;                  // when requested

  double exceedance_fraction() const noexcept {
    return trials == 0 ? 0.0 : static_cast<double>(exceeded) / static_cast<double>(trials);
  }
};

/// Runs 2-Choices for t0 rounds per trial and records whether any color ever
/// exceeded ell' over rounds 0..t0.
LowerBoundReport run_lower_bound_experiment(const LowerBoundParams& params,
                                            const Configuration& initial, std::uint64_t trials,
                                            const RngStream& rng, bool record_trajectory = false,
                                            unsigned workers = 1);

struct CoupledRound {
  std::uint64_t round = 0;
  Count tracked = 0;    // support of the tracked color under 2-Choices
  Count dominating = 0; // P(t)
};

struct CoupledRun {
  std::vector<CoupledRound> rounds;
  std::optional<std::uint64_t> first_exceedance;  // first t with tracked > ell'
};

/// Per-node 2-Choices run coupled with P(0) = ell, P(t+1) = P(t) + Bin(n, p):
/// node j draws one uniform U_j; it contributes to P iff U_j < p and sees the
/// tracked color twice iff U_j < (c/n)^2. Throws CouplingViolation if
/// tracked > P at any round up to and including the first exceedance.
/// `color` indexes the canonical colors of `initial`; an index past the end
/// tracks an absent color.
CoupledRun run_coupled_dominating_process(const LowerBoundParams& params,
                                          const Configuration& initial, std::size_t color,
                                          std::uint64_t rounds, RngStream& rng);

struct TwoPhaseRow {
  std::optional<std::uint64_t> hmaj_phase1;
  std::optional<std::uint64_t> hmaj_phase2;
  std::optional<std::uint64_t> voter_phase1;
};

struct TwoPhaseReport {
  Count n = 0;
  std::size_t phase_k = 0;
  std::vector<TwoPhaseRow> rows;
  double win_fraction = 0.0;  // share of pairs with hmaj_phase1 <= voter_phase1
  double voter_phase1_mean = 0.0;
  double hmaj_phase1_mean = 0.0;
  double hmaj_phase2_mean = 0.0;
  double hmaj_total_mean = 0.0;
  double voter_bound = 0.0;   // 20 n / k
  std::uint64_t censored = 0;
};

/// 3-Majority from the n-color start, split at phase_k colors (default
/// ceil(n^(1/4))), against Voter's time to the same split on paired seeds.
TwoPhaseReport run_two_phase_check(Count n, std::uint64_t trials, const RngStream& rng,
                                   std::optional<std::size_t> phase_k = std::nullopt,
                                   std::uint64_t max_rounds = 10'000'000, unsigned workers = 1);

}  // namespace pullcons
