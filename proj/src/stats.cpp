#include "commscape/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "commscape/rng.hpp"

namespace commscape {

namespace {

constexpr double kRankTol = 1e-9;

bool all_equal(const std::vector<double>& v) {
  for (const auto& x : v) {
    if (x != v.front()) return false;
  }
  return true;
}

double pearson_of_ranks(const std::vector<double>& rx,
                        const std::vector<double>& ry) {
  std::size_t n = rx.size();
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = rx[i] - mx;
    double dy = ry[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

// Sum of t^3 - t over tie groups, for rank-test variance corrections.
double tie_correction_sum(const std::vector<double>& values) {
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    double t = static_cast<double>(j - i);
    sum += t * t * t - t;
    i = j;
  }
  return sum;
}

// Continued fraction for the incomplete beta, modified Lentz iteration.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;

  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, double nu) {
  if (std::isinf(t)) return 0.0;
  double p = regularized_incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
  return std::clamp(p, 0.0, 1.0);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // 1-based positions i+1 .. j averaged over the tie group
    double rank = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

std::optional<TestResult> spearman(const std::vector<double>& x,
                                   const std::vector<double>& y) {
  std::size_t n = x.size();
  if (n < 3 || y.size() != n) return std::nullopt;
  if (all_equal(x) || all_equal(y)) return std::nullopt;

  std::vector<double> rx = average_ranks(x);
  std::vector<double> ry = average_ranks(y);
  double rho = pearson_of_ranks(rx, ry);

  TestResult result;
  result.statistic = rho;

  if (n <= 10) {
    // All n! orderings are equally likely under the null; with tied ranks
    // every distinct arrangement has the same multiplicity, so counting
    // distinct arrangements is exact.
    std::vector<double> perm = ry;
    std::sort(perm.begin(), perm.end());
    double threshold = std::fabs(rho) - kRankTol;
    std::int64_t total = 0;
    std::int64_t extreme = 0;
    do {
      ++total;
      if (std::fabs(pearson_of_ranks(rx, perm)) >= threshold) ++extreme;
    } while (std::next_permutation(perm.begin(), perm.end()));
    result.p_value = static_cast<double>(extreme) / static_cast<double>(total);
    result.exact = true;
    return result;
  }

  if (std::fabs(rho) >= 1.0 - 1e-15) {
    result.p_value = 0.0;
    return result;
  }
  double nu = static_cast<double>(n - 2);
  double t = rho * std::sqrt(nu / (1.0 - rho * rho));
  result.p_value = t_two_sided_p(t, nu);
  return result;
}

std::optional<TestResult> mann_whitney(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  std::size_t m = a.size();
  std::size_t n = b.size();
  if (m == 0 || n == 0) return std::nullopt;

  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  if (all_equal(pooled)) return std::nullopt;

  std::vector<double> ranks = average_ranks(pooled);
  double ra = 0.0;
  for (std::size_t i = 0; i < m; ++i) ra += ranks[i];
  double u = ra - static_cast<double>(m) * (m + 1) / 2.0;

  TestResult result;
  result.statistic = u;
  std::size_t total = m + n;

  if (total <= 20) {
    // Every assignment of m pooled positions to the first group is equally
    // likely; enumerate all C(m+n, m) of them.
    std::vector<std::size_t> comb(m);
    std::iota(comb.begin(), comb.end(), 0);
    auto advance = [&]() {
      std::size_t i = m;
      while (i > 0) {
        --i;
        if (comb[i] < i + total - m) {
          ++comb[i];
          for (std::size_t j = i + 1; j < m; ++j) comb[j] = comb[j - 1] + 1;
          return true;
        }
      }
      return false;
    };
    std::int64_t count = 0, le = 0, ge = 0;
    do {
      double rsum = 0.0;
      for (std::size_t idx : comb) rsum += ranks[idx];
      double u_perm = rsum - static_cast<double>(m) * (m + 1) / 2.0;
      ++count;
      if (u_perm <= u + kRankTol) ++le;
      if (u_perm >= u - kRankTol) ++ge;
    } while (advance());
    double p_le = static_cast<double>(le) / static_cast<double>(count);
    double p_ge = static_cast<double>(ge) / static_cast<double>(count);
    result.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge));
    result.exact = true;
    return result;
  }

  double dm = static_cast<double>(m), dn = static_cast<double>(n);
  double dt = static_cast<double>(total);
  double mean = dm * dn / 2.0;
  double ties = tie_correction_sum(pooled);
  double var = dm * dn / 12.0 * ((dt + 1.0) - ties / (dt * (dt - 1.0)));
  if (var <= 0.0) return std::nullopt;
  double diff = u - mean;
  double cc = diff > 0 ? -0.5 : (diff < 0 ? 0.5 : 0.0);
  double z = (diff + cc) / std::sqrt(var);
  result.p_value = std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
  return result;
}

std::optional<TestResult> wilcoxon_signed_rank(const std::vector<double>& a,
                                               const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) return std::nullopt;
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) return std::nullopt;

  std::size_t n = diffs.size();
  std::vector<double> abs_diffs(n);
  for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::fabs(diffs[i]);
  std::vector<double> ranks = average_ranks(abs_diffs);

  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0.0) w_plus += ranks[i];
  }

  TestResult result;
  result.statistic = w_plus;

  if (n <= 20) {
    // Doubled ranks are integers even with .5 tie averages; the subset-sum
    // generating function gives the exact null distribution of 2W+.
    std::vector<std::int64_t> r2(n);
    std::int64_t max_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = std::llround(2.0 * ranks[i]);
      max_sum += r2[i];
    }
    std::vector<double> ways(static_cast<std::size_t>(max_sum) + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::int64_t s = max_sum; s >= r2[i]; --s) {
        ways[static_cast<std::size_t>(s)] +=
            ways[static_cast<std::size_t>(s - r2[i])];
      }
    }
    std::int64_t target = std::llround(2.0 * w_plus);
    double total = std::pow(2.0, static_cast<double>(n));
    double le = 0.0, ge = 0.0;
    for (std::int64_t s = 0; s <= max_sum; ++s) {
      if (s <= target) le += ways[static_cast<std::size_t>(s)];
      if (s >= target) ge += ways[static_cast<std::size_t>(s)];
    }
    result.p_value = std::min(1.0, 2.0 * std::min(le / total, ge / total));
    result.exact = true;
    return result;
  }

  double dn = static_cast<double>(n);
  double mean = dn * (dn + 1.0) / 4.0;
  double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 -
               tie_correction_sum(abs_diffs) / 48.0;
  if (var <= 0.0) return std::nullopt;
  double diff = w_plus - mean;
  double cc = diff > 0 ? -0.5 : (diff < 0 ? 0.5 : 0.0);
  double z = (diff + cc) / std::sqrt(var);
  result.p_value = std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
  return result;
}

std::vector<double> bonferroni(const std::vector<double>& p_values) {
  std::vector<double> adjusted;
  adjusted.reserve(p_values.size());
  double m = static_cast<double>(p_values.size());
  for (double p : p_values) adjusted.push_back(std::min(1.0, p * m));
  return adjusted;
}

BootstrapCi cluster_bootstrap_ci(
    const std::vector<std::vector<double>>& clusters,
    const std::function<double(const std::vector<double>&)>& statistic,
    int n_boot, std::uint64_t seed) {
  std::vector<double> pooled;
  for (const auto& c : clusters) {
    pooled.insert(pooled.end(), c.begin(), c.end());
  }
  BootstrapCi ci;
  ci.point = statistic(pooled);

  std::size_t k = clusters.size();
  Rng rng(seed);
  std::vector<double> boots;
  boots.reserve(static_cast<std::size_t>(n_boot));
  std::vector<double> resampled;
  for (int b = 0; b < n_boot; ++b) {
    resampled.clear();
    for (std::size_t i = 0; i < k; ++i) {
      const auto& c = clusters[rng.below(k)];
      resampled.insert(resampled.end(), c.begin(), c.end());
    }
    boots.push_back(statistic(resampled));
  }
  std::sort(boots.begin(), boots.end());
  double last = static_cast<double>(boots.size() - 1);
  auto lo_idx = static_cast<std::size_t>(std::floor(0.025 * last));
  auto hi_idx = static_cast<std::size_t>(std::ceil(0.975 * last));
  ci.lo = boots[lo_idx];
  ci.hi = boots[hi_idx];
  return ci;
}

}  // namespace commscape
