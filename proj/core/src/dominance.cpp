#include "pullcons/dominance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "pullcons/parallel.hpp"

namespace pullcons {

std::vector<Configuration> enumerate_configurations(Count n) {
  if (n < 1) throw Error(Errc::InvalidConfiguration, "population must be positive");
  if (n > kMaxEnumeratedPopulation) {
    throw Error(Errc::EnumerationBudgetExceeded,
                "n = " + std::to_string(n) + " exceeds " + std::to_string(kMaxEnumeratedPopulation));
  }
  std::vector<Configuration> out;
  std::vector<Count> parts;
  std::function<void(Count, Count)> recurse = [&](Count remaining, Count largest) {
    if (remaining == 0) {
      out.push_back(Configuration::canonicalize(parts));
      return;
    }
    for (Count part = std::min(remaining, largest); part >= 1; --part) {
      parts.push_back(part);
      recurse(remaining - part, part);
      parts.pop_back();
    }
  };
  recurse(n, n);
  return out;
}

namespace {

std::vector<double> prefix_sums_sorted(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  for (std::size_t i = 1; i < s.size(); ++i) s[i] += s[i - 1];
  return s;
}

}  // namespace

DominanceReport check_dominance(const UpdateRule& rule_p, const UpdateRule& rule_q, Count n) {
  const auto configs = enumerate_configurations(n);
  std::vector<std::vector<double>> prefix_p;
  std::vector<std::vector<double>> prefix_q;
  prefix_p.reserve(configs.size());
  prefix_q.reserve(configs.size());
  for (const auto& c : configs) {
    prefix_p.push_back(prefix_sums_sorted(process_function(rule_p, c).probs()));
    prefix_q.push_back(prefix_sums_sorted(process_function(rule_q, c).probs()));
  }

  DominanceReport report{n, rule_p, rule_q, 0, {}};
  for (std::size_t a = 0; a < configs.size(); ++a) {
    for (std::size_t b = 0; b < configs.size(); ++b) {
      if (!majorizes(configs[a], configs[b])) continue;
      ++report.pairs_checked;
      const auto& pp = prefix_p[a];
      const auto& pq = prefix_q[b];
      const std::size_t len = std::max(pp.size(), pq.size());
      double worst = 0.0;
      std::size_t worst_prefix = 0;
      for (std::size_t j = 0; j < len; ++j) {
        const double lhs = j < pp.size() ? pp[j] : pp.back();
        const double rhs = j < pq.size() ? pq[j] : pq.back();
        const double deficit = rhs - lhs;
        if (deficit > kPrefixSlack && deficit > worst) {
          worst = deficit;
          worst_prefix = j + 1;
        }
      }
      if (worst_prefix != 0) {
        report.violations.push_back({configs[a], configs[b], worst_prefix, worst});
      }
    }
  }
  return report;
}

bool StochasticMajorizationReport::pass() const noexcept {
  return std::all_of(prefixes.begin(), prefixes.end(), [](const auto& p) { return p.pass; });
}

StochasticMajorizationReport empirical_stochastic_majorization(const ProbabilityVector& theta1,
                                                              const ProbabilityVector& theta2,
                                                              Count m, std::uint64_t draws,
                                                              const RngStream& rng) {
  if (!majorizes(theta2, theta1)) {
    throw Error(Errc::NotMajorized, "theta2 must majorize theta1");
  }
  if (draws < 2) throw Error(Errc::InvalidArgument, "need at least two draws");
  const std::size_t k = std::max(theta1.size(), theta2.size());

  // Sorting the weights descending lets both laws consume the stream in the
  // same category order.
  auto sorted = [k](const ProbabilityVector& t) {
    std::vector<double> v(t.probs().begin(), t.probs().end());
    v.resize(k, 0.0);
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
  };
  const auto w1 = sorted(theta1);
  const auto w2 = sorted(theta2);

  std::vector<double> sum1(k, 0.0), sum2(k, 0.0), sum_d(k, 0.0), sum_d2(k, 0.0);
  RngStream s1 = rng;
  RngStream s2 = rng;
  for (std::uint64_t d = 0; d < draws; ++d) {
    const auto x = sample_multinomial_weights(m, w1, s1);
    const auto y = sample_multinomial_weights(m, w2, s2);
    for (std::size_t j = 1; j <= k; ++j) {
      const auto fx = static_cast<double>(prefix_functional(x, j));
      const auto fy = static_cast<double>(prefix_functional(y, j));
      sum1[j - 1] += fx;
      sum2[j - 1] += fy;
      sum_d[j - 1] += fy - fx;
      sum_d2[j - 1] += (fy - fx) * (fy - fx);
    }
  }

  StochasticMajorizationReport report{m, draws, {}};
  const auto nd = static_cast<double>(draws);
  for (std::size_t j = 0; j < k; ++j) {
    const double mean_d = sum_d[j] / nd;
    const double var_d = std::max(0.0, (sum_d2[j] - nd * mean_d * mean_d) / (nd - 1.0));
    PrefixComparison cmp;
    cmp.prefix = j + 1;
    cmp.mean_lower = sum1[j] / nd;
    cmp.mean_upper = sum2[j] / nd;
    cmp.stderr_diff = std::sqrt(var_d / nd);
    cmp.pass = cmp.mean_lower <= cmp.mean_upper + 3.0 * cmp.stderr_diff;
    report.prefixes.push_back(cmp);
  }
  return report;
}

double dkw_epsilon(std::uint64_t trials, double delta) {
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(trials)));
}

double empirical_cdf(const std::vector<std::optional<std::uint64_t>>& times, std::uint64_t t) {
  if (times.empty()) return 0.0;
  const auto hits = std::count_if(times.begin(), times.end(),
                                  [t](const auto& x) { return x.has_value() && *x <= t; });
  return static_cast<double>(hits) / static_cast<double>(times.size());
}

TimeDominanceReport empirical_time_dominance_pairwise(
    const UpdateRule& rule_fast, const Configuration& c, const UpdateRule& rule_slow,
    const Configuration& c_tilde, const StopCondition& stop, std::uint64_t trials,
    const RngStream& rng, const TimeDominanceOptions& options) {
  stop.validate();
  if (trials < 1) throw Error(Errc::InvalidArgument, "need at least one trial");
  TimeDominanceReport report;
  report.max_rounds = stop.max_rounds;
  report.fast_times.resize(trials);
  report.slow_times.resize(trials);

  parallel_for(trials, options.workers, [&](std::uint64_t i) {
    RngStream fast_rng = rng.for_trial(i);
    RngStream slow_rng = rng.for_trial(i);
    report.fast_times[i] = simulate_until(rule_fast, c, stop, fast_rng).stop_time;
    report.slow_times[i] = simulate_until(rule_slow, c_tilde, stop, slow_rng).stop_time;
  });

  // Censored slow samples are pulled in to max_rounds; censored fast samples
  // stay at infinity. Both choices can only enlarge the deficit.
  std::vector<std::optional<std::uint64_t>> slow_adjusted = report.slow_times;
  for (auto& t : slow_adjusted) {
    if (!t) {
      t = stop.max_rounds;
      ++report.slow_censored;
    }
  }
  report.fast_censored = static_cast<std::uint64_t>(
      std::count_if(report.fast_times.begin(), report.fast_times.end(),
                    [](const auto& t) { return !t.has_value(); }));

  std::set<std::uint64_t> grid;
  for (const auto& t : report.fast_times) if (t) grid.insert(*t);
  for (const auto& t : slow_adjusted) grid.insert(*t);
  for (std::uint64_t t : grid) {
    const double d = empirical_cdf(slow_adjusted, t) - empirical_cdf(report.fast_times, t);
    if (d > report.delta) {
      report.delta = d;
      report.worst_round = t;
    }
  }
  report.epsilon = options.epsilon.value_or(dkw_epsilon(trials));
  report.verdict = report.delta <= report.epsilon;
  return report;
}

TimeDominanceReport empirical_time_dominance(const UpdateRule& rule_fast,
                                             const UpdateRule& rule_slow,
                                             const Configuration& c0, const StopCondition& stop,
                                             std::uint64_t trials, const RngStream& rng,
                                             const TimeDominanceOptions& options) {
  return empirical_time_dominance_pairwise(rule_fast, c0, rule_slow, c0, stop, trials, rng,
                                           options);
}

}  // namespace pullcons
