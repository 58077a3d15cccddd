#include "pullcons/drift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pullcons/coalescing.hpp"
#include "pullcons/parallel.hpp"

namespace pullcons {

DriftFunction DriftFunction::power_law(double a, double b, double x_min, double x_max) {
  if (!(a > 0.0) || !(b >= 0.0)) {
    throw Error(Errc::InvalidArgument, "power law needs a > 0 and b >= 0");
  }
  if (!(x_min >= 0.0) || !(x_max >= x_min) || (b > 0.0 && x_min == 0.0)) {
    throw Error(Errc::DomainError, "h must be positive on [x_min, x_max]");
  }
  DriftFunction h;
  h.a_ = a;
  h.b_ = b;
  h.x_min_ = x_min;
  h.x_max_ = x_max;
  return h;
}

DriftFunction DriftFunction::tabulated(std::vector<std::pair<double, double>> grid) {
  if (grid.size() < 2) throw Error(Errc::InvalidArgument, "table needs at least two rows");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i].second > 0.0)) throw Error(Errc::InvalidArgument, "h must be positive");
    if (i > 0 && !(grid[i].first > grid[i - 1].first)) {
      throw Error(Errc::InvalidArgument, "x must be strictly increasing");
    }
    if (i > 0 && grid[i].second < grid[i - 1].second) {
      throw Error(Errc::InvalidArgument, "h must be non-decreasing");
    }
  }
  DriftFunction h;
  h.x_min_ = grid.front().first;
  h.x_max_ = grid.back().first;
  h.grid_ = std::move(grid);
  return h;
}

DriftFunction DriftFunction::tabulate(const std::function<double(double)>& f, double x_min,
                                      double x_max, std::size_t points, bool geometric) {
  if (points < 2 || !(x_max > x_min) || (geometric && !(x_min > 0.0))) {
    throw Error(Errc::InvalidArgument, "bad tabulation range");
  }
  std::vector<std::pair<double, double>> grid(points);
  const double last = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double s = static_cast<double>(i) / last;
    double x = geometric ? x_min * std::pow(x_max / x_min, s) : x_min + (x_max - x_min) * s;
    if (i == 0) x = x_min;
    if (i + 1 == points) x = x_max;
    grid[i] = {x, f(x)};
  }
  return tabulated(std::move(grid));
}

DriftFunction DriftFunction::read_csv(std::istream& in) {
  std::vector<std::pair<double, double>> grid;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x = 0.0;
    double hx = 0.0;
    if (!(row >> x >> hx)) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected 'x,h'");
    }
    first = false;
    grid.emplace_back(x, hx);
  }
  return tabulated(std::move(grid));
}

DriftFunction DriftFunction::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  return read_csv(in);
}

void DriftFunction::check_domain(double x, const char* what) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(x_max_));
  if (!(x >= x_min_ - slack && x <= x_max_ + slack)) {
    throw Error(Errc::DomainError, std::string(what) + " = " + std::to_string(x) +
                                       " outside [" + std::to_string(x_min_) + ", " +
                                       std::to_string(x_max_) + "]");
  }
}

double DriftFunction::operator()(double x) const {
  check_domain(x, "x");
  if (is_power_law()) return b_ == 0.0 ? a_ : a_ * std::pow(x, b_);
  x = std::clamp(x, x_min_, x_max_);
  auto it = std::lower_bound(grid_.begin(), grid_.end(), x,
                             [](const auto& row, double v) { return row.first < v; });
  if (it == grid_.begin()) return it->second;
  const auto& [x1, h1] = *it;
  const auto& [x0, h0] = *(it - 1);
  return h0 + (h1 - h0) * (x - x0) / (x1 - x0);
}

DriftFunction::Integral DriftFunction::integrate_reciprocal(double lo, double hi) const {
  check_domain(lo, "lower limit");
  check_domain(hi, "upper limit");
  if (hi < lo) throw Error(Errc::DomainError, "upper limit below lower limit");
  if (hi == lo) return {};

  if (is_power_law()) {
    if (b_ == 1.0) return {std::log(hi / lo) / a_, 0.0};
    const double e = 1.0 - b_;
    return {(std::pow(hi, e) - std::pow(lo, e)) / (a_ * e), 0.0};
  }

  // Nodes: lo, every grid abscissa strictly inside, hi.
  std::vector<double> xs{lo};
  for (const auto& [x, hx] : grid_) {
    if (x > lo && x < hi) xs.push_back(x);
  }
  xs.push_back(hi);
  std::vector<double> fs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = 1.0 / (*this)(xs[i]);

  auto second_difference = [&](std::size_t c) {
    const double left = (fs[c] - fs[c - 1]) / (xs[c] - xs[c - 1]);
    const double right = (fs[c + 1] - fs[c]) / (xs[c + 1] - xs[c]);
    return std::abs(2.0 * (right - left) / (xs[c + 1] - xs[c - 1]));
  };

  Integral out;
  const std::size_t last = xs.size() - 1;
  for (std::size_t i = 0; i < last; ++i) {
    const double w = xs[i + 1] - xs[i];
    out.value += 0.5 * w * (fs[i] + fs[i + 1]);
    if (last >= 2) {
      double curvature = 0.0;
      if (i >= 1) curvature = std::max(curvature, second_difference(i));
      if (i + 1 < last) curvature = std::max(curvature, second_difference(i + 1));
      out.error_estimate += w * w * w / 12.0 * curvature;
    }
  }
  return out;
}

std::string to_string(DriftForm form) {
  switch (form) {
    case DriftForm::AdditiveLemma: return "additive";
    case DriftForm::VariableLW14: return "variable_lw14";
    case DriftForm::VariableGeneralized: return "variable_generalized";
  }
  return "unknown";
}

DriftBoundResult additive_drift_bound(double m, double k_prime, double c) {
  if (!(c > 0.0)) throw Error(Errc::NoDrift, "per-step drift must be positive");
  if (!(k_prime >= 0.0) || !(m >= k_prime)) {
    throw Error(Errc::DomainError, "need m >= k' >= 0");
  }
  return {(m - k_prime) / c, DriftForm::AdditiveLemma, 0.0};
}

DriftBoundResult variable_drift_bound_lw14(const DriftFunction& h, double x_lo, double x0) {
  if (x0 < x_lo) throw Error(Errc::DomainError, "start below x_min");
  const auto integral = h.integrate_reciprocal(x_lo, x0);
  const double head = x_lo / h(x_lo);
  return {head + integral.value + integral.error_estimate, DriftForm::VariableLW14,
          integral.error_estimate};
}

DriftBoundResult variable_drift_bound_lw14(const DriftFunction& h, double x0) {
  return variable_drift_bound_lw14(h, h.x_min(), x0);
}

DriftBoundResult variable_drift_bound_generalized(const DriftFunction& h, double m,
                                                  double k_prime) {
  if (k_prime < 0.0 || (k_prime > 0.0 && k_prime < 1.0)) {
    throw Error(Errc::DomainError, "k' must lie in {0} u [1, inf)");
  }
  if (m < k_prime) throw Error(Errc::DomainError, "need k' <= m");
  if (m == k_prime) return {0.0, DriftForm::VariableGeneralized, 0.0};
  if (k_prime == 0.0) {
    // g(0) = 0 and g(m) = 1/h(1) + int_1^m 1/h.
    const auto integral = h.integrate_reciprocal(1.0, std::max(1.0, m));
    return {1.0 / h(1.0) + integral.value + integral.error_estimate,
            DriftForm::VariableGeneralized, integral.error_estimate};
  }
  const auto integral = h.integrate_reciprocal(k_prime, m);
  return {integral.value + integral.error_estimate, DriftForm::VariableGeneralized,
          integral.error_estimate};
}

std::string to_string(DriftValidationStatus status) {
  switch (status) {
    case DriftValidationStatus::Passed: return "passed";
    case DriftValidationStatus::HypothesisFailed: return "hypothesis_failed";
    case DriftValidationStatus::BoundExceeded: return "bound_exceeded";
  }
  return "unknown";
}

DriftValidationReport validate_bound(const ChainStep& chain, double x0, double k,
                                     const DriftFunction& h, std::uint64_t trials,
                                     const RngStream& rng, const DriftValidationOptions& options) {
  if (trials < 1) throw Error(Errc::InvalidArgument, "need at least one trial");
  if (!(x0 > k)) throw Error(Errc::DomainError, "start must lie above the threshold");
  const double x_lo = k > 0.0 ? k : h.x_min();

  DriftValidationReport report;
  report.trials = trials;

  std::vector<double> points = options.check_points;
  if (points.empty()) {
    const double from = std::max(h.x_min(), options.integer_states ? std::floor(k) + 1.0 : k);
    const double to = std::min(h.x_max(), x0);
    constexpr int kDefaultPoints = 8;
    for (int i = 0; i < kDefaultPoints && from <= to; ++i) {
      double x = from * std::pow(to / std::max(from, 1e-300), i / double(kDefaultPoints - 1));
      if (from <= 0.0) x = from + (to - from) * i / double(kDefaultPoints - 1);
      if (options.integer_states) x = std::round(x);
      if (points.empty() || x != points.back()) points.push_back(x);
    }
  }

  // Hypothesis: E[X_{t+1} - X_t | X_t = x] <= -h(x) for x above the threshold.
  const RngStream drift_rng = rng.for_purpose(rng.id().purpose + 1);
  report.checks.resize(points.size());
  parallel_for(points.size(), options.workers, [&](std::uint64_t i) {
    RngStream s = drift_rng.for_trial(i);
    const double x = points[i];
    double mean = 0.0;
    double m2 = 0.0;
    for (std::uint64_t j = 0; j < options.drift_samples; ++j) {
      const double d = chain(x, s) - x;
      const double delta = d - mean;
      mean += delta / static_cast<double>(j + 1);
      m2 += delta * (d - mean);
    }
    const auto ns = static_cast<double>(options.drift_samples);
    DriftCheck check;
    check.x = x;
    check.mean_drift = mean;
    check.stderr_drift = options.drift_samples > 1 ? std::sqrt(m2 / (ns - 1.0) / ns) : 0.0;
    check.required = -h(x);
    check.pass = check.mean_drift <= check.required + 3.0 * check.stderr_drift;
    report.checks[i] = check;
  });
  report.bound = variable_drift_bound_lw14(h, x_lo, x0);
  if (!std::all_of(report.checks.begin(), report.checks.end(),
                   [](const DriftCheck& c) { return c.pass; })) {
    report.status = DriftValidationStatus::HypothesisFailed;
    return report;
  }

  std::vector<std::optional<std::uint64_t>> times(trials);
  parallel_for(trials, options.workers, [&](std::uint64_t i) {
    RngStream s = rng.for_trial(i);
    double x = x0;
    for (std::uint64_t t = 0; t < options.max_steps; ++t) {
      if (x <= k) {
        times[i] = t;
        return;
      }
      x = chain(x, s);
    }
    if (x <= k) times[i] = options.max_steps;
  });
  const auto sample = summarize_times(std::move(times));
  report.mean_time = sample.mean;
  report.stderr_time = sample.stderr_mean;
  report.censored = sample.censored;
  const bool within = report.censored == 0 &&
                      report.mean_time <= report.bound.bound + 3.0 * report.stderr_time;
  report.status = within ? DriftValidationStatus::Passed : DriftValidationStatus::BoundExceeded;
  return report;
}

}  // namespace pullcons
