#include <gtest/gtest.h>

#include <cmath>

#include "pullcons/harness.hpp"

namespace {

using namespace pullcons;

TEST(InitialSpec, ParseAndPrint) {
  for (const char* text : {"ncolor", "balanced:4", "biased:3:10", "explicit:5,3,2"}) {
    EXPECT_EQ(InitialSpec::parse(text).to_string(), text);
  }
  for (const char* bad : {"", "balanced", "balanced:x", "biased:3", "explicit:", "explicit:1,,2",
                          "uniform:3"}) {
    EXPECT_THROW(InitialSpec::parse(bad), Error) << bad;
  }
}

TEST(InitialSpec, Build) {
  EXPECT_EQ(InitialSpec::parse("ncolor").build(5), Configuration::n_color(5));
  EXPECT_EQ(InitialSpec::parse("balanced:3").build(10), Configuration::canonicalize({4, 3, 3}));
  EXPECT_EQ(InitialSpec::parse("explicit:2,5,3").build(10), Configuration::canonicalize({5, 3, 2}));
  EXPECT_THROW(InitialSpec::parse("explicit:2,5").build(10), Error);
  EXPECT_THROW(InitialSpec::parse("balanced:11").build(10), Error);
  EXPECT_THROW(InitialSpec::parse("ncolor").build(0), Error);
}

TEST(InitialSpec, BiasedHasExactBias) {
  for (Count n : {100, 101, 997, 1000}) {
    for (Count k : {2, 3, 5}) {
      for (Count b : {0, 1, 10, 33}) {
        const auto spec = InitialSpec::parse("biased:" + std::to_string(k) + ":" + std::to_string(b));
        if (k == 2 && (n - b) % 2 != 0) {
          EXPECT_THROW(spec.build(n), Error);
          continue;
        }
        const auto c = spec.build(n);
        EXPECT_EQ(c.population(), n);
        ASSERT_GE(c.number_of_colors(), 2u);
        EXPECT_EQ(c[0] - c[1], b) << n << " " << k << " " << b;
        EXPECT_LE(c.number_of_colors(), static_cast<std::size_t>(k));
      }
    }
  }
  EXPECT_THROW(InitialSpec::parse("biased:1:0").build(10), Error);
  EXPECT_THROW(InitialSpec::parse("biased:2:10").build(10), Error);
}

ExperimentSpec small_spec(std::vector<UpdateRule> rules) {
  ExperimentSpec s;
  s.rules = std::move(rules);
  s.n = 300;
  s.trials = 3;
  s.seed = 9;
  return s;
}

TEST(ExperimentSpec, Validation) {
  auto s = small_spec({UpdateRule::voter()});
  EXPECT_NO_THROW(s.validate());
  s.n = 0;
  EXPECT_THROW(s.validate(), Error);
  s = small_spec({});
  EXPECT_THROW(s.validate(), Error);
  s = small_spec({UpdateRule::voter()});
  s.trials = 0;
  EXPECT_THROW(s.validate(), Error);
  s = small_spec({UpdateRule::voter()});
  s.record.mode = RecordSpec::Mode::Every;
  s.record.every = 0;
  EXPECT_THROW(s.validate(), Error);
}

// Property: along every recorded trajectory the color count never grows and
// the counts always sum to n.
TEST(SimulateToStop, TrajectoryInvariants) {
  for (const auto& rule : {UpdateRule::voter(), UpdateRule::two_choices(), UpdateRule::h_majority(3),
                           UpdateRule::h_majority(4)}) {
    auto spec = small_spec({rule});
    spec.record.mode = RecordSpec::Mode::Every;
    spec.record.every = 1;
    spec.record.full_counts = true;
    for (std::uint64_t t = 0; t < spec.trials; ++t) {
      const auto out = simulate_to_stop(rule, spec, t);
      ASSERT_FALSE(out.trajectory.empty());
      EXPECT_EQ(out.trajectory.front().round, 0u);
      std::size_t prev = out.trajectory.front().number_of_colors;
      for (const auto& p : out.trajectory) {
        EXPECT_LE(p.number_of_colors, prev);
        prev = p.number_of_colors;
        Count sum = 0;
        for (Count c : p.counts) sum += c;
        EXPECT_EQ(sum, spec.n);
        EXPECT_EQ(p.counts.size(), p.number_of_colors);
      }
      ASSERT_TRUE(out.stop_time.has_value());
      EXPECT_EQ(out.trajectory.back().round, *out.stop_time);
      EXPECT_EQ(out.trajectory.size(), *out.stop_time + 1);
    }
  }
}

TEST(SimulateToStop, RecordingModes) {
  auto spec = small_spec({UpdateRule::voter()});
  const auto none = simulate_to_stop(UpdateRule::voter(), spec, 0);
  EXPECT_TRUE(none.trajectory.empty());

  spec.record.mode = RecordSpec::Mode::Every;
  spec.record.every = 10;
  const auto every = simulate_to_stop(UpdateRule::voter(), spec, 0);
  ASSERT_TRUE(every.stop_time.has_value());
  EXPECT_EQ(every.stop_time, none.stop_time);
  for (std::size_t i = 0; i + 1 < every.trajectory.size(); ++i) {
    EXPECT_EQ(every.trajectory[i].round % 10, 0u);
  }
  EXPECT_EQ(every.trajectory.back().round, *every.stop_time);
  EXPECT_TRUE(every.trajectory.front().counts.empty());

  spec.n = 3000;
  spec.record.mode = RecordSpec::Mode::Auto;
  const auto thin = simulate_to_stop(UpdateRule::voter(), spec, 0);
  ASSERT_TRUE(thin.stop_time.has_value());
  EXPECT_GT(*thin.stop_time, 1000u);
  EXPECT_LE(thin.trajectory.size(), 1002u);
  EXPECT_EQ(thin.trajectory.back().round, *thin.stop_time);
}

TEST(SimulateToStop, PairedAcrossRulesAndReproducible) {
  auto spec = small_spec({UpdateRule::voter()});
  const auto a = simulate_to_stop(UpdateRule::voter(), spec, 1);
  const auto b = simulate_to_stop(UpdateRule::voter(), spec, 1);
  EXPECT_EQ(a.stop_time, b.stop_time);
  EXPECT_EQ(a.final_state, b.final_state);
  spec.seed = 10;
  spec.stop.max_rounds = 3;
  const auto c = simulate_to_stop(UpdateRule::voter(), spec, 1);
  EXPECT_TRUE(c.censored());
}

TEST(LowerBoundParams, DerivedQuantities) {
  const LowerBoundParams p(4.0, 1, 100000);
  EXPECT_EQ(p.ell_prime(), 47);  // ceil(4 ln 1e5) = ceil(46.05)
  EXPECT_EQ(p.t0(), 531u);       // floor(1e5 / 188)
  EXPECT_DOUBLE_EQ(p.p(), (47.0 / 100000.0) * (47.0 / 100000.0));
  EXPECT_EQ(LowerBoundParams(4.0, 30, 100000).ell_prime(), 60);
  EXPECT_THROW(LowerBoundParams(0.0, 1, 100), Error);
  EXPECT_THROW(LowerBoundParams(4.0, 200, 100), Error);
  EXPECT_THROW(LowerBoundParams(4.0, 1, 1), Error);
}

TEST(LowerBound, ExperimentReport) {
  const LowerBoundParams params(4.0, 1, 2000);
  const auto c0 = Configuration::n_color(2000);
  const auto r = run_lower_bound_experiment(params, c0, 10, RngStream(3), true);
  EXPECT_EQ(r.trials, 10u);
  EXPECT_EQ(r.ell_prime, params.ell_prime());
  EXPECT_EQ(r.t0, params.t0());
  ASSERT_EQ(r.first_exceedance.size(), 10u);
  ASSERT_EQ(r.trajectories.size(), 10u);
  std::uint64_t exceeded = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    exceeded += r.first_exceedance[i].has_value() ? 1 : 0;
    EXPECT_EQ(r.first_exceedance[i].has_value(), r.peak_support[i] > r.ell_prime);
    EXPECT_EQ(r.trajectories[i].size(), r.t0 + 1);
  }
  EXPECT_EQ(exceeded, r.exceeded);
  const auto again = run_lower_bound_experiment(params, c0, 10, RngStream(3), false, 4);
  EXPECT_EQ(again.first_exceedance, r.first_exceedance);
  EXPECT_THROW(run_lower_bound_experiment(LowerBoundParams(4.0, 2, 2000), c0, 1, RngStream(1)), Error);
}

TEST(LowerBound, ExceedanceDetectedFromLargeStart) {
  const auto c0 = Configuration::canonicalize({1200, 800});
  const LowerBoundParams params(4.0, 1200, 2000);
  const auto r = run_lower_bound_experiment(params, c0, 5, RngStream(4));
  EXPECT_EQ(r.ell_prime, 2400);
  EXPECT_EQ(r.exceeded, 0u);  // support can never pass n < ell'
}

TEST(CoupledProcess, DominatesOnSeededRuns) {
  const Count n = 2000;
  const LowerBoundParams params(4.0, 1, n);
  const auto c0 = Configuration::n_color(n);
  for (std::uint64_t s = 0; s < 30; ++s) {
    RngStream rng(100 + s);
    const auto run = run_coupled_dominating_process(params, c0, 0, params.t0(), rng);
    ASSERT_FALSE(run.rounds.empty());
    EXPECT_EQ(run.rounds.front().dominating, 1);
    for (const auto& r : run.rounds) {
      if (run.first_exceedance && r.round > *run.first_exceedance) break;
      EXPECT_LE(r.tracked, r.dominating);
    }
    for (std::size_t i = 1; i < run.rounds.size(); ++i) {
      EXPECT_GE(run.rounds[i].dominating, run.rounds[i - 1].dominating);
    }
  }
}

TEST(CoupledProcess, AbsentColorAndErrors) {
  const LowerBoundParams params(4.0, 1, 500);
  RngStream rng(5);
  const auto run = run_coupled_dominating_process(params, Configuration::n_color(500), 10'000, 20, rng);
  for (const auto& r : run.rounds) EXPECT_EQ(r.tracked, 0);
  RngStream rng2(6);
  EXPECT_THROW(run_coupled_dominating_process(params, Configuration::n_color(400), 0, 5, rng2), Error);
  EXPECT_THROW(run_coupled_dominating_process(params, Configuration::canonicalize({3, 497}), 0, 5, rng2),
               Error);
}

TEST(TwoPhase, SmallRun) {
  const auto r = run_two_phase_check(256, 4, RngStream(7));
  EXPECT_EQ(r.phase_k, 4u);  // ceil(256^(1/4))
  EXPECT_EQ(r.rows.size(), 4u);
  EXPECT_GE(r.win_fraction, 0.0);
  EXPECT_LE(r.win_fraction, 1.0);
  EXPECT_DOUBLE_EQ(r.voter_bound, 20.0 * 256 / 4);
  EXPECT_EQ(r.censored, 0u);
  for (const auto& row : r.rows) {
    ASSERT_TRUE(row.hmaj_phase1 && row.voter_phase1 && row.hmaj_phase2);
  }
  EXPECT_NEAR(r.hmaj_total_mean, r.hmaj_phase1_mean + r.hmaj_phase2_mean, 1e-9);
  const auto w = run_two_phase_check(256, 4, RngStream(7), std::nullopt, 10'000'000, 4);
  EXPECT_EQ(w.win_fraction, r.win_fraction);
  EXPECT_THROW(run_two_phase_check(100, 4, RngStream(7)), Error);
  EXPECT_THROW(run_two_phase_check(256, 0, RngStream(7)), Error);
}

}  // namespace
