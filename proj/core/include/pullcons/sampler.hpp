#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pullcons/configuration.hpp"

namespace pullcons {

/// Names a substream: which experiment, which trial, and what the draws are
/// used for. Equal ids under an equal master seed give equal sequences.
struct StreamId {
  std::uint64_t experiment = 0;
  std::uint64_t trial = 0;
  std::uint64_t purpose = 0;

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

/// Owned, seeded random stream. The engine is std::mt19937_64 (fully specified
/// by the standard); every distribution on top of it is implemented here so
/// sequences are identical across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, StreamId id = {});

  std::uint64_t seed() const noexcept { return seed_; }
  const StreamId& id() const noexcept { return id_; }

  /// Substream for trial `trial`, keeping seed, experiment and purpose.
  RngStream for_trial(std::uint64_t trial) const;
  /// Substream for a different purpose within the same trial.
  RngStream for_purpose(std::uint64_t purpose) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform01();
  /// Uniform on {0, ..., bound - 1}; bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);

 private:
  std::uint64_t seed_;
  StreamId id_;
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer, used to derive substream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Expected-success cutoff separating inversion from transformed rejection.
inline constexpr double kBinomialInversionCutoff = 30.0;

/// Binomial(trials, p). Inversion below kBinomialInversionCutoff expected
/// successes (after folding p > 1/2), BTRS transformed rejection above.
Count sample_binomial(Count trials, double p, RngStream& rng);

namespace detail {
Count binomial_inversion(Count trials, double p, RngStream& rng);
/// Requires trials * min(p, 1-p) >= 10.
Count binomial_btrs(Count trials, double p, RngStream& rng);
}  // namespace detail

/// Mult(m, theta) by sequential conditional binomials. The result is aligned
/// with theta (not canonicalized) and always sums to m.
std::vector<Count> sample_multinomial(Count m, const ProbabilityVector& theta, RngStream& rng);
/// Unvalidated variant for weight vectors that need not sum to one; used by
/// steppers that have already validated their inputs.
std::vector<Count> sample_multinomial_weights(Count m, std::span<const double> weights,
                                              RngStream& rng);

/// Uniform node of [0, n), or of [0, n) \ {self} when exclude_self.
std::uint64_t sample_uniform_node(std::uint64_t n, bool exclude_self, std::uint64_t self_index,
                                  RngStream& rng);

}  // namespace pullcons
