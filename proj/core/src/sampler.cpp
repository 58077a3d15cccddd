#include "pullcons/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pullcons {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, const StreamId& id) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ id.experiment);
  h = mix64(h ^ (id.trial * 0xd6e8feb86659fd93ULL));
  h = mix64(h ^ (id.purpose * 0xa0761d6478bd642fULL));
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, StreamId id)
    : seed_(seed), id_(id), engine_(derive_seed(seed, id)) {}

RngStream RngStream::for_trial(std::uint64_t trial) const {
  StreamId id = id_;
  id.trial = trial;
  return RngStream(seed_, id);
}

RngStream RngStream::for_purpose(std::uint64_t purpose) const {
  StreamId id = id_;
  id.purpose = purpose;
  return RngStream(seed_, id);
}

double RngStream::uniform01() {
  // 53 random mantissa bits, shifted by half an ulp so 0 is never returned.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

__extension__ using Wide = unsigned __int128;

std::uint64_t RngStream::uniform_index(std::uint64_t bound) {
  // Lemire's multiply-and-reject; unbiased for every bound.
  Wide m = static_cast<Wide>(engine_()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<Wide>(engine_()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

namespace detail {

Count binomial_inversion(Count trials, double p, RngStream& rng) {
  const double q = 1.0 - p;
  const double n = static_cast<double>(trials);
  const double qn = std::exp(n * std::log1p(-p));
  const double mean = n * p;
  const double bound = std::min(n, mean + 10.0 * std::sqrt(mean * q + 1.0));
  const double ratio = p / q;

  Count x = 0;
  double px = qn;
  double u = rng.uniform01();
  while (u > px) {
    ++x;
    if (static_cast<double>(x) > bound) {
      // Rounding ate the tail mass; start over.
      x = 0;
      px = qn;
      u = rng.uniform01();
    } else {
      u -= px;
      px *= (n - static_cast<double>(x) + 1.0) * ratio / static_cast<double>(x);
    }
  }
  return x;
}

Count binomial_btrs(Count trials, double p, RngStream& rng) {
  // Hormann (1993), "The generation of binomial random variates".
  const double n = static_cast<double>(trials);
  const double q = 1.0 - p;
  const double spq = std::sqrt(n * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = n * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const double m = std::floor((n + 1.0) * p);
  const double h = std::lgamma(m + 1.0) + std::lgamma(n - m + 1.0);

  while (true) {
    const double u = rng.uniform01() - 0.5;
    double v = rng.uniform01();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + c);
    if (k < 0.0 || k > n) continue;
    if (us >= 0.07 && v <= v_r) return static_cast<Count>(k);
    v = std::log(v * alpha / (a / (us * us) + b));
    if (v <= h - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + (k - m) * lpq) {
      return static_cast<Count>(k);
    }
  }
}

}  // namespace detail

Count sample_binomial(Count trials, double p, RngStream& rng) {
  if (trials < 0) throw Error(Errc::InvalidArgument, "negative trial count");
  if (trials == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  if (p > 0.5) return trials - sample_binomial(trials, 1.0 - p, rng);
  if (static_cast<double>(trials) * p < kBinomialInversionCutoff) {
    return detail::binomial_inversion(trials, p, rng);
  }
  return detail::binomial_btrs(trials, p, rng);
}

std::vector<Count> sample_multinomial_weights(Count m, std::span<const double> weights,
                                              RngStream& rng) {
  const std::size_t k = weights.size();
  std::vector<Count> out(k, 0);
  if (m == 0 || k == 0) return out;

  // Suffix masses are computed once; subtracting as we go loses precision
  // over thousands of categories.
  std::vector<double> suffix(k + 1, 0.0);
  for (std::size_t i = k; i-- > 0;) suffix[i] = suffix[i + 1] + weights[i];

  std::size_t last = k;
  while (last > 0 && weights[last - 1] <= 0.0) --last;
  if (last == 0) throw Error(Errc::InvalidProbabilityVector, "no positive weight");
  --last;

  Count remaining = m;
  for (std::size_t i = 0; i < last && remaining > 0; ++i) {
    if (weights[i] <= 0.0) continue;
    const double p = std::min(1.0, weights[i] / suffix[i]);
    const Count draw = sample_binomial(remaining, p, rng);
    out[i] = draw;
    remaining -= draw;
  }
  out[last] += remaining;
  return out;
}

std::vector<Count> sample_multinomial(Count m, const ProbabilityVector& theta, RngStream& rng) {
  if (m < 0) throw Error(Errc::InvalidArgument, "negative trial count");
  return sample_multinomial_weights(m, theta.probs(), rng);
}

std::uint64_t sample_uniform_node(std::uint64_t n, bool exclude_self, std::uint64_t self_index,
                                  RngStream& rng) {
  if (exclude_self) {
    if (n < 2) throw Error(Errc::NoNeighbor, "no other node in a population of " + std::to_string(n));
    const std::uint64_t v = rng.uniform_index(n - 1);
    return v >= self_index ? v + 1 : v;
  }
  if (n < 1) throw Error(Errc::InvalidArgument, "empty population");
  return rng.uniform_index(n);
}

}  // namespace pullcons
