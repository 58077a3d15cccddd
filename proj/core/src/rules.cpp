#include "pullcons/rules.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace pullcons {

UpdateRule UpdateRule::h_majority(int h) {
  if (h < 1) throw Error(Errc::InvalidArgument, "h-Majority needs h >= 1");
  return {RuleKind::HMajority, h, SamplingMode::SelfInclusive};
}

int UpdateRule::samples_per_node() const noexcept {
  switch (kind) {
    case RuleKind::Voter: return 1;
    case RuleKind::TwoChoices: return 2;
    case RuleKind::HMajority: return h;
  }
  return 1;
}

bool UpdateRule::is_ac() const noexcept {
  return kind != RuleKind::TwoChoices && mode == SamplingMode::SelfInclusive;
}

std::string UpdateRule::name() const {
  std::string base;
  switch (kind) {
    case RuleKind::Voter: base = "voter"; break;
    case RuleKind::TwoChoices: base = "2choices"; break;
    case RuleKind::HMajority: base = "hmaj:" + std::to_string(h); break;
  }
  if (mode == SamplingMode::NeighborOnly) base += "/neighbor";
  return base;
}

namespace {

std::optional<int> parse_int(std::string_view s) {
  int value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

UpdateRule parse_rule(std::string_view text) {
  if (text == "voter") return UpdateRule::voter();
  if (text == "2choices" || text == "twochoices") return UpdateRule::two_choices();
  std::optional<int> h;
  if (text.starts_with("hmaj:")) {
    h = parse_int(text.substr(5));
  } else if (text.ends_with("maj")) {
    h = parse_int(text.substr(0, text.size() - 3));
  }
  if (!h || *h < 1) throw Error(Errc::ParseError, "unknown rule '" + std::string(text) + "'");
  return UpdateRule::h_majority(*h);
}

namespace {

void require_ac(const UpdateRule& rule) {
  if (rule.kind == RuleKind::TwoChoices) {
    throw Error(Errc::NotAnACProcess, "2-Choices depends on the node's own color");
  }
  if (rule.mode != SamplingMode::SelfInclusive) {
    throw Error(Errc::NotAnACProcess, "neighbor-only sampling is not anonymous");
  }
}

bool within_enumeration_budget(int h, std::size_t k) {
  double cost = 1.0;
  for (int i = 0; i < h; ++i) {
    cost *= static_cast<double>(k);
    if (cost > kExactEnumerationBudget) return false;
  }
  return true;
}

void check_enumeration_budget(int h, std::size_t k) {
  if (!within_enumeration_budget(h, k)) {
    throw Error(Errc::TooManyColorsForExactH,
                std::to_string(k) + "^" + std::to_string(h) + " exceeds the enumeration budget");
  }
}

std::vector<double> three_majority(const std::vector<double>& x) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  std::vector<double> alpha(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) alpha[i] = x[i] * (1.0 + x[i] - sq);
  return alpha;
}

/// Removes the rounding residue so the vector passes ProbabilityVector
/// validation without distorting any entry by more than ~1e-15.
std::vector<double> clamp_unit(std::vector<double> v) {
  for (double& p : v) p = std::clamp(p, 0.0, 1.0);
  return v;
}

}  // namespace

ProbabilityVector process_function(const UpdateRule& rule, const Configuration& c) {
  require_ac(rule);
  auto x = c.fractions();
  if (rule.kind == RuleKind::Voter || rule.h <= 2) return ProbabilityVector(std::move(x));
  if (rule.h == 3) return ProbabilityVector(clamp_unit(three_majority(x)));
  check_enumeration_budget(rule.h, x.size());
  return ProbabilityVector(clamp_unit(plurality_adoption(rule.h, x)));
}

std::vector<Rational> process_function_exact(const UpdateRule& rule, const Configuration& c) {
  require_ac(rule);
  std::vector<Rational> x;
  x.reserve(c.number_of_colors());
  for (Count ci : c.counts()) x.emplace_back(ci, c.population());
  if (rule.kind == RuleKind::Voter || rule.h <= 2) return x;
  if (rule.h == 3) {
    Rational sq(0);
    for (const auto& v : x) sq += v * v;
    std::vector<Rational> alpha;
    alpha.reserve(x.size());
    for (const auto& v : x) alpha.push_back(v * (Rational(1) + v - sq));
    return alpha;
  }
  check_enumeration_budget(rule.h, x.size());
  return plurality_adoption(rule.h, x);
}

Configuration step_ac(const UpdateRule& rule, const Configuration& c, RngStream& rng) {
  const auto alpha = process_function(rule, c);
  const auto counts = sample_multinomial(c.population(), alpha, rng);
  return Configuration::canonicalize(counts);
}

Configuration step_two_choices(const Configuration& c, RngStream& rng) {
  const std::size_t k = c.number_of_colors();
  if (k == 1) return c;
  const auto x = c.fractions();
  std::vector<double> sq(k);
  for (std::size_t i = 0; i < k; ++i) sq[i] = x[i] * x[i];
  std::vector<double> suffix(k + 1, 0.0);
  for (std::size_t i = k; i-- > 0;) suffix[i] = suffix[i + 1] + sq[i];

  std::vector<Count> next(k, 0);
  for (std::size_t j = 0; j < k; ++j) {
    const double switch_mass = suffix[0] - sq[j];
    const Count movers = sample_binomial(c[j], std::clamp(switch_mass, 0.0, 1.0), rng);
    next[j] += c[j] - movers;
    Count remaining = movers;
    // Targets are visited largest first so the remainder runs out early.
    std::size_t last_target = (j == k - 1) ? k - 2 : k - 1;
    for (std::size_t i = 0; i < k && remaining > 0; ++i) {
      if (i == j) continue;
      if (i == last_target) {
        next[i] += remaining;
        remaining = 0;
        break;
      }
      const double mass = suffix[i] - (j > i ? sq[j] : 0.0);
      const double p = mass > 0.0 ? std::min(1.0, sq[i] / mass) : 1.0;
      const Count moved = sample_binomial(remaining, p, rng);
      next[i] += moved;
      remaining -= moved;
    }
  }
  return Configuration::canonicalize(next);
}

namespace {

std::size_t plurality_pick(std::span<const std::size_t> sampled_colors, RngStream& rng) {
  // h is small; quadratic counting beats any map here.
  std::size_t top = 0;
  std::vector<std::size_t> tied;
  for (std::size_t a = 0; a < sampled_colors.size(); ++a) {
    bool seen = false;
    for (std::size_t b = 0; b < a; ++b) seen = seen || sampled_colors[b] == sampled_colors[a];
    if (seen) continue;
    std::size_t mult = 0;
    for (std::size_t b : sampled_colors) mult += (b == sampled_colors[a]) ? 1 : 0;
    if (mult > top) {
      top = mult;
      tied.clear();
    }
    if (mult == top) tied.push_back(sampled_colors[a]);
  }
  return tied.size() == 1 ? tied.front() : tied[rng.uniform_index(tied.size())];
}

}  // namespace

Configuration step_per_node(const UpdateRule& rule, const Configuration& c, RngStream& rng) {
  const auto n = static_cast<std::uint64_t>(c.population());
  const bool exclude_self = rule.mode == SamplingMode::NeighborOnly;
  std::vector<std::size_t> color;
  color.reserve(n);
  for (std::size_t i = 0; i < c.number_of_colors(); ++i) color.insert(color.end(), c[i], i);

  std::vector<Count> next(c.number_of_colors(), 0);
  std::vector<std::size_t> sampled(static_cast<std::size_t>(rule.samples_per_node()));
  for (std::uint64_t u = 0; u < n; ++u) {
    for (auto& s : sampled) s = color[sample_uniform_node(n, exclude_self, u, rng)];
    std::size_t adopted = color[u];
    switch (rule.kind) {
      case RuleKind::Voter: adopted = sampled[0]; break;
      case RuleKind::TwoChoices:
        if (sampled[0] == sampled[1]) adopted = sampled[0];
        break;
      case RuleKind::HMajority: adopted = plurality_pick(sampled, rng); break;
    }
    ++next[adopted];
  }
  return Configuration::canonicalize(next);
}

Configuration step(const UpdateRule& rule, const Configuration& c, RngStream& rng) {
  if (rule.mode == SamplingMode::NeighborOnly) return step_per_node(rule, c, rng);
  if (rule.kind == RuleKind::TwoChoices) return step_two_choices(c, rng);
  if (rule.kind == RuleKind::HMajority && rule.h >= 4 &&
      !within_enumeration_budget(rule.h, c.number_of_colors())) {
    return step_per_node(rule, c, rng);
  }
  return step_ac(rule, c, rng);
}

ProbabilityVector expected_fraction_after_step(const UpdateRule& rule, const Configuration& c) {
  if (rule.mode != SamplingMode::SelfInclusive) {
    throw Error(Errc::NoClosedForm, "closed forms assume self-inclusive sampling");
  }
  auto x = c.fractions();
  if (rule.kind == RuleKind::Voter || (rule.kind == RuleKind::HMajority && rule.h <= 2)) {
    return ProbabilityVector(std::move(x));
  }
  if (rule.kind == RuleKind::TwoChoices || rule.h == 3) {
    return ProbabilityVector(clamp_unit(three_majority(x)));
  }
  throw Error(Errc::NoClosedForm, "no closed form for " + rule.name());
}

StopOutcome simulate_until(const UpdateRule& rule, const Configuration& c0,
                           const StopCondition& stop, RngStream& rng,
                           const RoundObserver& observer) {
  stop.validate();
  Configuration c = c0;
  Count peak = c.max_support();
  if (observer) observer(0, c);
  std::uint64_t t = 0;
  while (c.number_of_colors() > stop.kappa) {
    if (t == stop.max_rounds) return {std::nullopt, std::move(c), peak};
    c = step(rule, c, rng);
    ++t;
    peak = std::max(peak, c.max_support());
    if (observer) observer(t, c);
  }
  return {t, std::move(c), peak};
}

}  // namespace pullcons
