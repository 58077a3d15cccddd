#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pullcons/error.hpp"

namespace pullcons {

using Count = std::int64_t;

/// Per-color supports of a population of n nodes, kept in canonical form:
/// sorted non-increasing with zero entries dropped. Color identity is not
/// preserved; every comparison the toolkit makes is permutation-invariant.
class Configuration {
 public:
  /// Sorts, drops zeros and sums. Throws InvalidConfiguration on negative
  /// entries or when nothing positive remains.
  static Configuration canonicalize(std::span<const Count> raw_counts);
  static Configuration canonicalize(std::initializer_list<Count> raw_counts) {
    return canonicalize(std::span<const Count>(raw_counts.begin(), raw_counts.size()));
  }

  /// Every node holds its own color.
  static Configuration n_color(Count n);
  static Configuration consensus(Count n);

  Count population() const noexcept { return n_; }
  std::span<const Count> counts() const noexcept { return counts_; }
  std::size_t number_of_colors() const noexcept { return counts_.size(); }
  Count max_support() const noexcept { return counts_.front(); }
  bool is_consensus() const noexcept { return counts_.size() == 1; }
  Count operator[](std::size_t i) const { return counts_[i]; }

  /// x = c / n, aligned with counts().
  std::vector<double> fractions() const;

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  Configuration(Count n, std::vector<Count> counts) : n_(n), counts_(std::move(counts)) {}

  Count n_ = 0;
  std::vector<Count> counts_;
};

/// Process-function output. Entries are aligned with the colors of the
/// configuration they were computed from and need not be sorted.
class ProbabilityVector {
 public:
  static constexpr double kMassTolerance = 1e-9;

  ProbabilityVector() = default;
  /// Validates entries in [0,1] and total mass within kMassTolerance of 1.
  explicit ProbabilityVector(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::vector<double> probs_;
};

struct StopCondition {
  std::size_t kappa = 1;
  std::uint64_t max_rounds = 1'000'000;

  void validate() const;
};

/// Slack granted to each prefix comparison between probability vectors.
inline constexpr double kPrefixSlack = 1e-12;

bool majorizes(const Configuration& a, const Configuration& b);
bool majorizes(const ProbabilityVector& a, const ProbabilityVector& b);
/// Raw real-vector form; mass is compared within `mass_tolerance` and every
/// prefix within `prefix_slack`. Unequal lengths are zero-padded.
bool majorizes(std::span<const double> a, std::span<const double> b,
               double mass_tolerance = ProbabilityVector::kMassTolerance,
               double prefix_slack = kPrefixSlack);

/// Sum of the j largest components; j past the end yields the total mass.
double prefix_functional(std::span<const double> x, std::size_t j);
double prefix_functional(const ProbabilityVector& x, std::size_t j);
Count prefix_functional(const Configuration& x, std::size_t j);
/// Same functional on an arbitrary (unsorted) count vector, e.g. a raw
/// multinomial draw.
Count prefix_functional(std::span<const Count> counts, std::size_t j);

}  // namespace pullcons
