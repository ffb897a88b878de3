#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "commscape/corpus.hpp"
#include "commscape/slm.hpp"
#include "commscape/typology.hpp"

namespace commscape {

// Per-author activity counts over retained top-level comments, the basis
// for every engagement measure.
struct ActivityIndex {
  std::map<CommunityMonthKey, std::map<std::string, std::int64_t>> per_ct;
  std::map<MonthIndex, std::map<std::string, std::int64_t>> site_month;
  // per community, per author: first/last active month and total comments
  std::map<std::string,
           std::map<std::string, std::pair<MonthIndex, MonthIndex>>> span;
  std::map<std::string, std::map<std::string, std::int64_t>> total;
  MonthIndex horizon_first = 0;
  MonthIndex horizon_last = -1;

  static ActivityIndex build(const BucketedCorpus& corpus);
};

// Fraction of month-t contributors who also contribute in t+1. nullopt
// when the community has no authors in t or t+1 falls outside the horizon.
std::optional<double> monthly_retention(const ActivityIndex& idx,
                                        const std::string& community,
                                        MonthIndex t);

// Mean inclusive month span between first and last comment, over users
// active in the slice month, capped at the horizon span.
std::optional<double> mean_tenure(const ActivityIndex& idx,
                                  const std::string& community,
                                  MonthIndex slice_month);

struct Cohorts {
  std::vector<std::string> active;     // >= active_min comments in c_t
  std::vector<std::string> outsiders;  // single comment in c ever, in t,
                                       // >= active_min site-wide that month
};

Cohorts identify_cohorts(const ActivityIndex& idx,
                         const CommunityMonthKey& key,
                         std::int64_t active_min);

struct AcculturationProtocol {
  std::size_t eval_users = 5;         // active users scored per replicate
  std::size_t comments_per_user = 10;
  std::size_t outsider_spans = 50;
  std::size_t span_len = 10;
};

struct AcculturationResult {
  bool defined = false;
  std::string skip_reason;
  double gap = 0.0;  // mean over replicates
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::vector<double> per_replicate;
};

// Per replicate: cross-entropy of 50 spans from active users outside the
// model's training manifest vs 50 spans from outsider singleton comments,
// combined as their relative difference against the active-cohort value.
AcculturationResult acculturation_gap(
    const std::vector<TokenizedUtterance>& bucket,
    const CommunityMonthKey& key, const Cohorts& cohorts,
    const std::vector<SnapshotLM>& slms, const AcculturationProtocol& proto,
    std::uint64_t seed);

struct GapResult {
  double symmetric = 0.0;  // (mu_a - mu_o) / ((|mu_a| + |mu_o|) / 2)
  double eq_style = 0.0;   // (mu_a - mu_o) / |mu_o|, exported for audit
  double mu_active = 0.0;
  double mu_outsider = 0.0;
  std::int64_t active_points = 0;    // (user, month) points macroaveraged
  std::int64_t outsider_points = 0;
};

struct CommunityGaps {
  bool defined = false;
  std::string skip_reason;
  GapResult specificity;
  GapResult volatility;
};

// Mean comment specificity/volatility per user per month, macroaveraged
// within each cohort over all scored months of the community.
CommunityGaps content_affinity_gaps(const BucketedCorpus& corpus,
                                    const CorpusTables& tables,
                                    const ActivityIndex& idx,
                                    const std::string& community,
                                    const TypologyOptions& topts,
                                    std::int64_t active_min);

}  // namespace commscape
