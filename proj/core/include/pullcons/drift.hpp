#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pullcons/sampler.hpp"

namespace pullcons {

/// A positive, non-decreasing drift function h on [x_min, x_max], either
/// h(x) = a * x^b or a tabulated grid (linearly interpolated).
class DriftFunction {
 public:
  static DriftFunction power_law(double a, double b, double x_min, double x_max);
  static DriftFunction constant(double c, double x_min, double x_max) {
    return power_law(c, 0.0, x_min, x_max);
  }
  /// Grid must be strictly increasing in x with positive non-decreasing h.
  static DriftFunction tabulated(std::vector<std::pair<double, double>> grid);
  /// Samples f on `points` nodes, uniformly or geometrically spaced.
  static DriftFunction tabulate(const std::function<double(double)>& f, double x_min,
                                double x_max, std::size_t points, bool geometric);
  /// "x,h" rows; a non-numeric first line is treated as a header.
  static DriftFunction read_csv(std::istream& in);
  static DriftFunction load_csv(const std::string& path);

  double operator()(double x) const;
  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  bool is_power_law() const noexcept { return grid_.empty(); }
  double coefficient() const noexcept { return a_; }
  double exponent() const noexcept { return b_; }

  struct Integral {
    double value = 0.0;
    double error_estimate = 0.0;
  };
  /// Integral of 1/h over [lo, hi] within the domain. Closed form for power
  /// laws; composite trapezoid with a divided-difference error estimate for
  /// tables.
  Integral integrate_reciprocal(double lo, double hi) const;

 private:
  DriftFunction() = default;
  void check_domain(double x, const char* what) const;

  double a_ = 0.0;
  double b_ = 0.0;
  double x_min_ = 0.0;
  double x_max_ = 0.0;
  std::vector<std::pair<double, double>> grid_;
};

enum class DriftForm { AdditiveLemma, VariableLW14, VariableGeneralized };

std::string to_string(DriftForm form);

struct DriftBoundResult {
  double bound = 0.0;  // includes integral_error_estimate
  DriftForm form_used = DriftForm::AdditiveLemma;
  double integral_error_estimate = 0.0;
};

/// E[T] <= (m - k') / c.
DriftBoundResult additive_drift_bound(double m, double k_prime, double c);

/// E[T | X_0] <= x_min / h(x_min) + int_{x_min}^{x0} dy / h(y).
DriftBoundResult variable_drift_bound_lw14(const DriftFunction& h, double x0);
/// The same bound with an explicit lower end, which must lie in the domain.
DriftBoundResult variable_drift_bound_lw14(const DriftFunction& h, double x_lo, double x0);

/// E[T] <= int_{k'}^{m} du / h(u) on the state space {0} u [1, inf). k' = 0
/// is evaluated as g(m) - g(0) = 1/h(1) + int_1^m du / h(u).
DriftBoundResult variable_drift_bound_generalized(const DriftFunction& h, double m,
                                                  double k_prime);

/// (state, rng) -> next state.
using ChainStep = std::function<double(double, RngStream&)>;

struct DriftValidationOptions {
  /// States at which the drift hypothesis is tested; a geometric grid of
  /// eight points between the threshold and x0 when empty.
  std::vector<double> check_points;
  bool integer_states = true;
  std::uint64_t drift_samples = 2000;
  std::uint64_t max_steps = 10'000'000;
  unsigned workers = 1;
};

struct DriftCheck {
  double x = 0.0;
  double mean_drift = 0.0;  // E[X_{t+1} - X_t | X_t = x] estimate
  double stderr_drift = 0.0;
  double required = 0.0;    // -h(x)
  bool pass = false;
};

enum class DriftValidationStatus { Passed, HypothesisFailed, BoundExceeded };

std::string to_string(DriftValidationStatus status);

struct DriftValidationReport {
  DriftValidationStatus status = DriftValidationStatus::Passed;
  std::vector<DriftCheck> checks;
  DriftBoundResult bound;
  double mean_time = 0.0;
  double stderr_time = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t censored = 0;
};

/// Tests the drift hypothesis at sampled states and, when it holds, that the
/// mean hitting time of {X <= k} from x0 stays below the LW14 bound (lower
/// end k, or h's x_min when k = 0) plus three standard errors.
DriftValidationReport validate_bound(const ChainStep& chain, double x0, double k,
                                     const DriftFunction& h, std::uint64_t trials,
                                     const RngStream& rng,
                                     const DriftValidationOptions& options = {});

}  // namespace pullcons
