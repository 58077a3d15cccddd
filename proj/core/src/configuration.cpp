#include "pullcons/configuration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace pullcons {

Configuration Configuration::canonicalize(std::span<const Count> raw_counts) {
  std::vector<Count> counts;
  counts.reserve(raw_counts.size());
  Count n = 0;
  for (Count c : raw_counts) {
    if (c < 0) throw Error(Errc::InvalidConfiguration, "negative support " + std::to_string(c));
    if (c > 0) {
      counts.push_back(c);
      n += c;
    }
  }
  if (counts.empty()) throw Error(Errc::InvalidConfiguration, "no color has positive support");
  std::sort(counts.begin(), counts.end(), std::greater<>());
  return Configuration(n, std::move(counts));
}

Configuration Configuration::n_color(Count n) {
  if (n < 1) throw Error(Errc::InvalidConfiguration, "population must be positive");
  return Configuration(n, std::vector<Count>(static_cast<std::size_t>(n), 1));
}

Configuration Configuration::consensus(Count n) {
  if (n < 1) throw Error(Errc::InvalidConfiguration, "population must be positive");
  return Configuration(n, {n});
}

std::vector<double> Configuration::fractions() const {
  std::vector<double> x(counts_.size());
  const double n = static_cast<double>(n_);
  std::transform(counts_.begin(), counts_.end(), x.begin(),
                 [n](Count c) { return static_cast<double>(c) / n; });
  return x;
}

ProbabilityVector::ProbabilityVector(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error(Errc::InvalidProbabilityVector, "empty vector");
  double mass = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(Errc::InvalidProbabilityVector, "entry outside [0,1]: " + std::to_string(p));
    }
    mass += p;
  }
  if (std::abs(mass - 1.0) > kMassTolerance) {
    throw Error(Errc::InvalidProbabilityVector, "mass " + std::to_string(mass) + " != 1");
  }
}

void StopCondition::validate() const {
  if (kappa < 1) throw Error(Errc::InvalidArgument, "kappa must be >= 1");
  if (max_rounds < 1) throw Error(Errc::InvalidArgument, "max_rounds must be >= 1");
}

namespace {

std::vector<double> sorted_down(std::span<const double> x) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

}  // namespace

bool majorizes(const Configuration& a, const Configuration& b) {
  if (a.population() != b.population()) {
    throw Error(Errc::MassMismatch, std::to_string(a.population()) + " vs " +
                                        std::to_string(b.population()));
  }
  // Canonical storage is already sorted; the shorter vector is zero-padded.
  Count pa = 0;
  Count pb = 0;
  for (std::size_t i = 0; i < b.number_of_colors(); ++i) {
    pa += i < a.number_of_colors() ? a[i] : 0;
    pb += b[i];
    if (pa < pb) return false;
  }
  return true;
}

bool majorizes(std::span<const double> a, std::span<const double> b, double mass_tolerance,
               double prefix_slack) {
  const auto sa = sorted_down(a);
  const auto sb = sorted_down(b);
  const double ma = std::accumulate(sa.begin(), sa.end(), 0.0);
  const double mb = std::accumulate(sb.begin(), sb.end(), 0.0);
  if (std::abs(ma - mb) > mass_tolerance) {
    throw Error(Errc::MassMismatch, std::to_string(ma) + " vs " + std::to_string(mb));
  }
  double pa = 0.0;
  double pb = 0.0;
  const std::size_t len = std::max(sa.size(), sb.size());
  for (std::size_t i = 0; i < len; ++i) {
    pa += i < sa.size() ? sa[i] : 0.0;
    pb += i < sb.size() ? sb[i] : 0.0;
    if (pa + prefix_slack < pb) return false;
  }
  return true;
}

bool majorizes(const ProbabilityVector& a, const ProbabilityVector& b) {
  return majorizes(a.probs(), b.probs());
}

double prefix_functional(std::span<const double> x, std::size_t j) {
  if (j < 1) throw Error(Errc::InvalidArgument, "prefix length must be >= 1");
  auto v = sorted_down(x);
  const std::size_t len = std::min(j, v.size());
  return std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(len), 0.0);
}

double prefix_functional(const ProbabilityVector& x, std::size_t j) {
  return prefix_functional(x.probs(), j);
}

Count prefix_functional(const Configuration& x, std::size_t j) {
  if (j < 1) throw Error(Errc::InvalidArgument, "prefix length must be >= 1");
  const auto c = x.counts();
  const std::size_t len = std::min(j, c.size());
  return std::accumulate(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(len), Count{0});
}

Count prefix_functional(std::span<const Count> counts, std::size_t j) {
  if (j < 1) throw Error(Errc::InvalidArgument, "prefix length must be >= 1");
  std::vector<Count> v(counts.begin(), counts.end());
  const std::size_t len = std::min(j, v.size());
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(len), v.end(),
                    std::greater<>());
  return std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(len), Count{0});
}

}  // namespace pullcons
