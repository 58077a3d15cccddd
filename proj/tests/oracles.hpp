#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace oracle {

using Counts = std::vector<std::int64_t>;

/// All vectors of k non-negative integers summing to m.
inline std::vector<Counts> compositions(std::int64_t m, std::size_t k) {
  std::vector<Counts> out;
  Counts cur(k, 0);
  std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t i, std::int64_t left) {
    if (i + 1 == k) {
      cur[i] = left;
      out.push_back(cur);
      return;
    }
    for (std::int64_t v = 0; v <= left; ++v) {
      cur[i] = v;
      rec(i + 1, left - v);
    }
  };
  if (k > 0) rec(0, m);
  return out;
}

inline double log_factorial(std::int64_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline double multinomial_pmf(const Counts& x, const std::vector<double>& theta) {
  std::int64_t m = 0;
  double lp = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m += x[i];
    if (x[i] > 0) {
      if (theta[i] <= 0.0) return 0.0;
      lp += static_cast<double>(x[i]) * std::log(theta[i]) - log_factorial(x[i]);
    }
  }
  return std::exp(lp + log_factorial(m));
}

/// Sorted non-increasing with zeros dropped.
inline Counts canonical(Counts c) {
  std::sort(c.begin(), c.end(), std::greater<>());
  while (!c.empty() && c.back() == 0) c.pop_back();
  return c;
}

/// Sum of the j largest entries.
inline double prefix_sum(std::vector<double> v, std::size_t j) {
  std::sort(v.begin(), v.end(), std::greater<>());
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(j, v.size()); ++i) s += v[i];
  return s;
}

/// Law of canonical(Mult(m, theta)).
inline std::map<Counts, double> canonical_multinomial_law(std::int64_t m,
                                                           const std::vector<double>& theta) {
  std::map<Counts, double> law;
  for (const auto& x : compositions(m, theta.size())) law[canonical(x)] += multinomial_pmf(x, theta);
  return law;
}

/// Number of integer partitions of n by the standard DP over part sizes.
inline std::int64_t partition_count(int n) {
  std::vector<std::int64_t> p(static_cast<std::size_t>(n) + 1, 0);
  p[0] = 1;
  for (int part = 1; part <= n; ++part) {
    for (int s = part; s <= n; ++s) p[s] += p[s - part];
  }
  return p[n];
}

/// All partitions of n, each sorted non-increasing.
inline std::vector<Counts> partitions(std::int64_t n) {
  std::vector<Counts> out;
  Counts cur;
  std::function<void(std::int64_t, std::int64_t)> rec = [&](std::int64_t left, std::int64_t cap) {
    if (left == 0) {
      out.push_back(cur);
      return;
    }
    for (std::int64_t v = std::min(left, cap); v >= 1; --v) {
      cur.push_back(v);
      rec(left - v, v);
      cur.pop_back();
    }
  };
  rec(n, n);
  return out;
}

/// a majorizes b for equal-mass sorted integer vectors.
inline bool majorizes_sorted(const Counts& a, const Counts& b) {
  std::int64_t sa = 0, sb = 0;
  const std::size_t len = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < len; ++i) {
    sa += i < a.size() ? a[i] : 0;
    sb += i < b.size() ? b[i] : 0;
    if (sa < sb) return false;
  }
  return sa == sb;
}

/// 3-Majority adoption law by enumerating every ordered triple of samples:
/// a repeated color wins, three distinct colors defer to the first sample.
inline std::vector<double> three_majority_by_triples(const std::vector<double>& x) {
  const std::size_t k = x.size();
  std::vector<double> alpha(k, 0.0);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      for (std::size_t c = 0; c < k; ++c) {
        const double w = x[a] * x[b] * x[c];
        std::size_t winner = a;
        if (b == c) winner = b;
        alpha[winner] += w;
      }
  return alpha;
}

/// Plurality with uniform tie-break by enumerating all k^h ordered samples.
inline std::vector<double> plurality_by_sequences(int h, const std::vector<double>& x) {
  const std::size_t k = x.size();
  std::vector<double> alpha(k, 0.0);
  std::vector<std::size_t> seq(static_cast<std::size_t>(h), 0);
  while (true) {
    std::vector<int> mult(k, 0);
    double w = 1.0;
    for (auto s : seq) {
      ++mult[s];
      w *= x[s];
    }
    const int top = *std::max_element(mult.begin(), mult.end());
    const auto ties = static_cast<double>(std::count(mult.begin(), mult.end(), top));
    for (std::size_t i = 0; i < k; ++i) {
      if (mult[i] == top) alpha[i] += w / ties;
    }
    std::size_t pos = 0;
    while (pos < seq.size() && ++seq[pos] == k) seq[pos++] = 0;
    if (pos == seq.size()) break;
  }
  return alpha;
}

/// Law of the canonical next configuration when every node independently
/// moves to color i with probability row[color of node][i]; nodes are listed
/// by color in `colors`.
inline std::map<Counts, double> independent_nodes_law(
    const std::vector<std::size_t>& colors, const std::vector<std::vector<double>>& row) {
  const std::size_t k = row.front().size();
  std::map<Counts, double> law;
  std::vector<std::size_t> pick(colors.size(), 0);
  while (true) {
    double w = 1.0;
    Counts next(k, 0);
    for (std::size_t u = 0; u < colors.size(); ++u) {
      w *= row[colors[u]][pick[u]];
      ++next[pick[u]];
    }
    if (w > 0.0) law[canonical(next)] += w;
    std::size_t pos = 0;
    while (pos < pick.size() && ++pick[pos] == k) pick[pos++] = 0;
    if (pos == pick.size()) break;
  }
  return law;
}

struct Gof {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Pearson chi-square goodness of fit. Cells with expected count below 5 are
/// pooled; observations outside the law's support force p = 0.
template <typename Key>
Gof chi_square(const std::map<Key, std::uint64_t>& observed, const std::map<Key, double>& law,
               std::uint64_t samples) {
  Gof g;
  double pooled_expected = 0.0;
  double pooled_observed = 0.0;
  std::size_t cells = 0;
  for (const auto& [key, count] : observed) {
    if (!law.count(key)) return {1e300, 0.0, 0.0};
    (void)count;
  }
  for (const auto& [key, p] : law) {
    const double e = p * static_cast<double>(samples);
    const auto it = observed.find(key);
    const double o = it == observed.end() ? 0.0 : static_cast<double>(it->second);
    if (e < 5.0) {
      pooled_expected += e;
      pooled_observed += o;
    } else {
      g.statistic += (o - e) * (o - e) / e;
      ++cells;
    }
  }
  if (pooled_expected > 0.0) {
    g.statistic += (pooled_observed - pooled_expected) * (pooled_observed - pooled_expected) /
                   pooled_expected;
    ++cells;
  }
  g.dof = cells > 1 ? static_cast<double>(cells - 1) : 1.0;
  const boost::math::chi_squared dist(g.dof);
  g.p_value = boost::math::cdf(boost::math::complement(dist, g.statistic));
  return g;
}

}  // namespace oracle
