#include "pullcons/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "pullcons/parallel.hpp"

namespace pullcons {

namespace {

Count parse_count(std::string_view s, std::string_view what) {
  Count value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw Error(Errc::ParseError, std::string(what) + ": '" + std::string(s) + "' is not an integer");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto pos = s.find(sep);
    parts.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return parts;
}

}  // namespace

InitialSpec InitialSpec::parse(std::string_view text) {
  InitialSpec spec;
  if (text == "ncolor") return spec;
  const auto parts = split(text, ':');
  if (parts[0] == "balanced" && parts.size() == 2) {
    spec.kind = Kind::Balanced;
    spec.k = parse_count(parts[1], "balanced k");
  } else if (parts[0] == "biased" && parts.size() == 3) {
    spec.kind = Kind::Biased;
    spec.k = parse_count(parts[1], "biased k");
    spec.bias = parse_count(parts[2], "biased b");
  } else if (parts[0] == "explicit" && parts.size() == 2) {
    spec.kind = Kind::Explicit;
    for (auto c : split(parts[1], ',')) spec.counts.push_back(parse_count(c, "explicit count"));
  } else {
    throw Error(Errc::ParseError, "unknown initial configuration '" + std::string(text) + "'");
  }
  return spec;
}

std::string InitialSpec::to_string() const {
  switch (kind) {
    case Kind::NColor: return "ncolor";
    case Kind::Balanced: return "balanced:" + std::to_string(k);
    case Kind::Biased: return "biased:" + std::to_string(k) + ":" + std::to_string(bias);
    case Kind::Explicit: {
      std::string s = "explicit:";
      for (std::size_t i = 0; i < counts.size(); ++i) {
        if (i > 0) s += ',';
        s += std::to_string(counts[i]);
      }
      return s;
    }
  }
  return "unknown";
}

Configuration InitialSpec::build(Count n) const {
  if (n < 1) throw Error(Errc::InvalidConfiguration, "n must be positive");
  switch (kind) {
    case Kind::NColor: return Configuration::n_color(n);
    case Kind::Balanced: {
      if (k < 1 || k > n) throw Error(Errc::InvalidConfiguration, "balanced needs 1 <= k <= n");
      std::vector<Count> c(static_cast<std::size_t>(k), n / k);
      for (Count i = 0; i < n % k; ++i) ++c[static_cast<std::size_t>(i)];
      return Configuration::canonicalize(c);
    }
    case Kind::Biased: {
      if (k < 2 || bias < 0 || bias >= n) {
        throw Error(Errc::InvalidConfiguration, "biased needs k >= 2 and 0 <= b < n");
      }
      const Count second = (n - bias + k - 1) / k;
      const Count rest = n - bias - 2 * second;
      if (rest < k - 2 || (k == 2 && rest != 0)) {
        throw Error(Errc::InvalidConfiguration,
                    "no configuration with k=" + std::to_string(k) + " and bias " +
                        std::to_string(bias) + " for n=" + std::to_string(n));
      }
      std::vector<Count> c{second + bias, second};
      for (Count i = 0; i < k - 2; ++i) c.push_back(rest / (k - 2) + (i < rest % (k - 2) ? 1 : 0));
      return Configuration::canonicalize(c);
    }
    case Kind::Explicit: {
      auto c = Configuration::canonicalize(counts);
      if (c.population() != n) {
        throw Error(Errc::InvalidConfiguration, "explicit counts sum to " +
                                                    std::to_string(c.population()) + ", not n=" +
                                                    std::to_string(n));
      }
      return c;
    }
  }
  throw Error(Errc::InvalidConfiguration, "unknown initial kind");
}

void ExperimentSpec::validate() const {
  if (rules.empty()) throw Error(Errc::InvalidArgument, "rules: at least one rule is required");
  if (n < 1) throw Error(Errc::InvalidArgument, "n: must be >= 1");
  if (trials < 1) throw Error(Errc::InvalidArgument, "trials: must be >= 1");
  stop.validate();
  if (record.mode == RecordSpec::Mode::Every && record.every < 1) {
    throw Error(Errc::InvalidArgument, "record.every: must be >= 1");
  }
  (void)initial.build(n);
}

namespace {

TrajectoryPoint make_point(std::uint64_t t, const Configuration& c, bool full) {
  TrajectoryPoint p{t, c.number_of_colors(), c.max_support(), {}};
  if (full) p.counts.assign(c.counts().begin(), c.counts().end());
  return p;
}

}  // namespace

SimulationOutcome simulate_to_stop(const UpdateRule& rule, const ExperimentSpec& spec,
                                   std::uint64_t trial) {
  const auto c0 = spec.initial.build(spec.n);
  RngStream rng(spec.seed,
                {0, trial, static_cast<std::uint64_t>(StreamPurpose::Simulation)});
  SimulationOutcome out;
  const auto& rec = spec.record;
  RoundObserver observer;
  if (rec.mode == RecordSpec::Mode::Every) {
    observer = [&](std::uint64_t t, const Configuration& c) {
      if (t % rec.every == 0) out.trajectory.push_back(make_point(t, c, rec.full_counts));
    };
  } else if (rec.mode == RecordSpec::Mode::Auto) {
    observer = [&](std::uint64_t t, const Configuration& c) {
      out.trajectory.push_back(make_point(t, c, rec.full_counts));
    };
  }
  auto result = simulate_until(rule, c0, spec.stop, rng, observer);
  out.stop_time = result.stop_time;
  out.max_support_peak = result.max_support_peak;

  const std::uint64_t last_round =
      result.stop_time.value_or(spec.stop.max_rounds);
  if (rec.mode == RecordSpec::Mode::Auto && !out.trajectory.empty()) {
    const std::uint64_t stride = std::max<std::uint64_t>(1, (last_round + 999) / 1000);
    TrajectoryRecord thinned;
    for (auto& p : out.trajectory) {
      if (p.round % stride == 0 || p.round == last_round) thinned.push_back(std::move(p));
    }
    out.trajectory = std::move(thinned);
  } else if (rec.mode == RecordSpec::Mode::Every &&
             (out.trajectory.empty() || out.trajectory.back().round != last_round)) {
    out.trajectory.push_back(make_point(last_round, result.final_state, rec.full_counts));
  }
  out.final_state = std::move(result.final_state);
  return out;
}

LowerBoundParams::LowerBoundParams(double gamma, Count ell, Count n)
    : gamma_(gamma), ell_(ell), n_(n) {
  if (!(gamma > 0.0)) throw Error(Errc::InvalidArgument, "gamma must be positive");
  if (ell < 0 || ell > n) throw Error(Errc::InvalidArgument, "need 0 <= ell <= n");
  if (n < 2) throw Error(Errc::InvalidArgument, "n must be >= 2");
}

Count LowerBoundParams::ell_prime() const {
  const auto log_term = static_cast<Count>(std::ceil(gamma_ * std::log(static_cast<double>(n_))));
  return std::max(2 * ell_, log_term);
}

std::uint64_t LowerBoundParams::t0() const {
  return static_cast<std::uint64_t>(
      std::floor(static_cast<double>(n_) / (gamma_ * static_cast<double>(ell_prime()))));
}

double LowerBoundParams::p() const {
  const double r = static_cast<double>(ell_prime()) / static_cast<double>(n_);
  return r * r;
}

LowerBoundReport run_lower_bound_experiment(const LowerBoundParams& params,
                                            const Configuration& initial, std::uint64_t trials,
                                            const RngStream& rng, bool record_trajectory,
                                            unsigned workers) {
  if (initial.population() != params.n()) {
    throw Error(Errc::InvalidArgument, "initial configuration has the wrong population");
  }
  if (initial.max_support() != params.ell()) {
    throw Error(Errc::InvalidArgument, "ell must equal the initial maximum support");
  }
  LowerBoundReport report;
  report.ell = params.ell();
  report.ell_prime = params.ell_prime();
  report.t0 = params.t0();
  report.p = params.p();
  report.trials = trials;
  report.first_exceedance.resize(trials);
  report.peak_support.resize(trials);
  if (record_trajectory) report.trajectories.resize(trials);

  parallel_for(trials, workers, [&](std::uint64_t i) {
    RngStream s = rng.for_trial(i);
    Configuration c = initial;
    Count peak = c.max_support();
    auto note = [&](std::uint64_t t) {
      if (c.max_support() > report.ell_prime && !report.first_exceedance[i]) {
        report.first_exceedance[i] = t;
      }
      if (record_trajectory) report.trajectories[i].push_back(make_point(t, c, false));
    };
    note(0);
    for (std::uint64_t t = 1; t <= report.t0; ++t) {
      c = step_two_choices(c, s);
      peak = std::max(peak, c.max_support());
      note(t);
    }
    report.peak_support[i] = peak;
  });
  report.exceeded = static_cast<std::uint64_t>(
      std::count_if(report.first_exceedance.begin(), report.first_exceedance.end(),
                    [](const auto& t) { return t.has_value(); }));
  return report;
}

CoupledRun run_coupled_dominating_process(const LowerBoundParams& params,
                                          const Configuration& initial, std::size_t color,
                                          std::uint64_t rounds, RngStream& rng) {
  const Count n = params.n();
  if (initial.population() != n) {
    throw Error(Errc::InvalidArgument, "initial configuration has the wrong population");
  }
  const std::size_t k = initial.number_of_colors();
  const Count tracked0 = color < k ? initial[color] : 0;
  if (tracked0 > params.ell()) {
    throw Error(Errc::InvalidArgument, "P(0) = ell must dominate the tracked support");
  }
  const auto nodes = static_cast<std::uint64_t>(n);
  std::vector<std::size_t> node_color;
  node_color.reserve(nodes);
  for (std::size_t i = 0; i < k; ++i) node_color.insert(node_color.end(), initial[i], i);
  std::vector<std::size_t> next(nodes);

  const double p = params.p();
  const Count ell_prime = params.ell_prime();
  CoupledRun run;
  Count tracked = tracked0;
  Count dominating = params.ell();
  run.rounds.push_back({0, tracked, dominating});
  if (tracked > ell_prime) run.first_exceedance = 0;

  for (std::uint64_t t = 1; t <= rounds; ++t) {
    const double x = static_cast<double>(tracked) / static_cast<double>(n);
    const double q = x * x;
    Count increments = 0;
    Count new_tracked = 0;
    for (std::uint64_t j = 0; j < nodes; ++j) {
      const double u = rng.uniform01();
      if (u < p) ++increments;
      std::size_t adopted = node_color[j];
      if (u < q) {
        adopted = color;
      } else {
        // Pair of samples conditioned on not both showing the tracked color.
        std::size_t a = 0;
        std::size_t b = 0;
        do {
          a = node_color[rng.uniform_index(nodes)];
          b = node_color[rng.uniform_index(nodes)];
        } while (a == color && b == color);
        if (a == b) adopted = a;
      }
      next[j] = adopted;
      if (adopted == color) ++new_tracked;
    }
    node_color.swap(next);
    tracked = new_tracked;
    dominating += increments;
    run.rounds.push_back({t, tracked, dominating});
    const bool coupled = !run.first_exceedance.has_value();
    if (coupled && tracked > dominating) {
      throw Error(Errc::CouplingViolation,
                  "round " + std::to_string(t) + ": tracked support " + std::to_string(tracked) +
                      " above P(t) = " + std::to_string(dominating));
    }
    if (coupled && tracked > ell_prime) run.first_exceedance = t;
  }
  return run;
}

TwoPhaseReport run_two_phase_check(Count n, std::uint64_t trials, const RngStream& rng,
                                   std::optional<std::size_t> phase_k, std::uint64_t max_rounds,
                                   unsigned workers) {
  if (n < 256) throw Error(Errc::InvalidArgument, "two-phase check needs n >= 256");
  if (trials < 1) throw Error(Errc::InvalidArgument, "need at least one trial");
  TwoPhaseReport report;
  report.n = n;
  report.phase_k = phase_k.value_or(
      static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 0.25) - 1e-9)));
  if (report.phase_k < 1) throw Error(Errc::InvalidArgument, "phase split must be >= 1");
  report.voter_bound = 20.0 * static_cast<double>(n) / static_cast<double>(report.phase_k);
  report.rows.resize(trials);

  const auto start = Configuration::n_color(n);
  const auto hmaj = UpdateRule::h_majority(3);
  const auto voter = UpdateRule::voter();
  parallel_for(trials, workers, [&](std::uint64_t i) {
    TwoPhaseRow& row = report.rows[i];
    RngStream hmaj_rng = rng.for_trial(i);
    RngStream voter_rng = rng.for_trial(i);
    const auto phase1 = simulate_until(hmaj, start, {report.phase_k, max_rounds}, hmaj_rng);
    row.hmaj_phase1 = phase1.stop_time;
    if (phase1.stop_time) {
      const auto phase2 = simulate_until(hmaj, phase1.final_state,
                                         {1, max_rounds}, hmaj_rng);
      row.hmaj_phase2 = phase2.stop_time;
    }
    row.voter_phase1 = simulate_until(voter, start, {report.phase_k, max_rounds}, voter_rng).stop_time;
  });

  std::uint64_t wins = 0;
  double sum_v = 0.0, sum_h1 = 0.0, sum_h2 = 0.0;
  std::uint64_t n_v = 0, n_h1 = 0, n_h2 = 0;
  for (const auto& row : report.rows) {
    if (!row.hmaj_phase1 || !row.hmaj_phase2 || !row.voter_phase1) ++report.censored;
    // A censored Voter run loses to any finished 3-Majority run; a censored
    // 3-Majority run never wins.
    if (row.hmaj_phase1 && (!row.voter_phase1 || *row.hmaj_phase1 <= *row.voter_phase1)) ++wins;
    if (row.voter_phase1) sum_v += static_cast<double>(*row.voter_phase1), ++n_v;
    if (row.hmaj_phase1) sum_h1 += static_cast<double>(*row.hmaj_phase1), ++n_h1;
    if (row.hmaj_phase2) sum_h2 += static_cast<double>(*row.hmaj_phase2), ++n_h2;
  }
  const auto mean = [](double s, std::uint64_t c) { return c ? s / static_cast<double>(c) : 0.0; };
  report.win_fraction = static_cast<double>(wins) / static_cast<double>(trials);
  report.voter_phase1_mean = mean(sum_v, n_v);
  report.hmaj_phase1_mean = mean(sum_h1, n_h1);
  report.hmaj_phase2_mean = mean(sum_h2, n_h2);
  report.hmaj_total_mean = report.hmaj_phase1_mean + report.hmaj_phase2_mean;
  return report;
}

}  // namespace pullcons
