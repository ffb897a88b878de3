#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace commscape {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool exact = false;  // exact enumeration vs large-sample approximation
};

// Average ranks for ties, 1-based.
std::vector<double> average_ranks(const std::vector<double>& values);

// Rank correlation with two-sided p. Exact permutation enumeration for
// n <= 10, t-approximation above. Constant input -> nullopt.
std::optional<TestResult> spearman(const std::vector<double>& x,
                                   const std::vector<double>& y);

// statistic = U of the first sample. Exact enumeration over group
// assignments when m+n <= 20, tie-corrected normal approximation above.
// Two-sided p = min(1, 2*min(P(U <= u), P(U >= u))). Degenerate pooled
// sample -> nullopt.
std::optional<TestResult> mann_whitney(const std::vector<double>& a,
                                       const std::vector<double>& b);

// statistic = W+ over nonzero differences a_i - b_i. Zeros dropped; all
// zero -> nullopt. Exact signed-subset distribution when nonzero n <= 20,
// tie-corrected normal approximation above.
std::optional<TestResult> wilcoxon_signed_rank(const std::vector<double>& a,
                                               const std::vector<double>& b);

// min(1, p * m) for m comparisons.
std::vector<double> bonferroni(const std::vector<double>& p_values);

struct BootstrapCi {
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Resamples whole clusters with replacement, recomputes the statistic on
// the concatenated points, and takes the percentile interval (outward
// rounding). Deterministic under seed.
BootstrapCi cluster_bootstrap_ci(
    const std::vector<std::vector<double>>& clusters,
    const std::function<double(const std::vector<double>&)>& statistic,
    int n_boot, std::uint64_t seed);

// Survival function of the standard normal.
double normal_sf(double z);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p for a t statistic with nu degrees of freedom.
double t_two_sided_p(double t, double nu);

}  // namespace commscape
