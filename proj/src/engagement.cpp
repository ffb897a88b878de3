#include "commscape/engagement.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "commscape/rng.hpp"

namespace commscape {

ActivityIndex ActivityIndex::build(const BucketedCorpus& corpus) {
  ActivityIndex idx;
  bool first = true;
  for (const auto& [key, bucket] : corpus.buckets) {
    if (first || key.month < idx.horizon_first) idx.horizon_first = key.month;
    if (first || key.month > idx.horizon_last) idx.horizon_last = key.month;
    first = false;
    auto& ct = idx.per_ct[key];
    auto& site = idx.site_month[key.month];
    auto& spans = idx.span[key.community];
    auto& totals = idx.total[key.community];
    for (const auto& u : bucket) {
      ++ct[u.author];
      ++site[u.author];
      ++totals[u.author];
      auto [it, inserted] = spans.try_emplace(
          u.author, std::make_pair(key.month, key.month));
      if (!inserted) {
        it->second.first = std::min(it->second.first, key.month);
        it->second.second = std::max(it->second.second, key.month);
      }
    }
  }
  return idx;
}

std::optional<double> monthly_retention(const ActivityIndex& idx,
                                        const std::string& community,
                                        MonthIndex t) {
  if (t + 1 > idx.horizon_last) return std::nullopt;
  auto now = idx.per_ct.find({community, t});
  if (now == idx.per_ct.end() || now->second.empty()) return std::nullopt;
  auto next = idx.per_ct.find({community, t + 1});
  std::int64_t returned = 0;
  if (next != idx.per_ct.end()) {
    for (const auto& [author, n] : now->second) {
      if (next->second.count(author)) ++returned;
    }
  }
  return static_cast<double>(returned) /
         static_cast<double>(now->second.size());
}

std::optional<double> mean_tenure(const ActivityIndex& idx,
                                  const std::string& community,
                                  MonthIndex slice_month) {
  auto ct = idx.per_ct.find({community, slice_month});
  if (ct == idx.per_ct.end() || ct->second.empty()) return std::nullopt;
  const auto& spans = idx.span.at(community);
  std::int64_t cap = idx.horizon_last - idx.horizon_first + 1;
  double sum = 0.0;
  for (const auto& [author, n] : ct->second) {
    const auto& [first, last] = spans.at(author);
    std::int64_t tenure = std::min<std::int64_t>(last - first + 1, cap);
    sum += static_cast<double>(tenure);
  }
  return sum / static_cast<double>(ct->second.size());
}

Cohorts identify_cohorts(const ActivityIndex& idx,
                         const CommunityMonthKey& key,
                         std::int64_t active_min) {
  Cohorts cohorts;
  auto ct = idx.per_ct.find(key);
  if (ct == idx.per_ct.end()) return cohorts;

  for (const auto& [author, n] : ct->second) {
    if (n >= active_min) cohorts.active.push_back(author);
  }

  const auto& totals = idx.total.at(key.community);
  const auto& site = idx.site_month.at(key.month);
  for (const auto& [author, n] : ct->second) {
    if (n != 1) continue;
    if (totals.at(author) != 1) continue;  // exactly one comment in c ever
    auto s = site.find(author);
    if (s == site.end() || s->second < active_min) continue;
    cohorts.outsiders.push_back(author);
  }
  return cohorts;
}

namespace {

// Comments with enough tokens to cut a span from, per author, sorted by
// comment id for deterministic sampling.
std::map<std::string, std::vector<const TokenizedUtterance*>>
long_comments_by_author(const std::vector<TokenizedUtterance>& bucket,
                        std::size_t span_len) {
  std::map<std::string, std::vector<const TokenizedUtterance*>> out;
  for (const auto& u : bucket) {
    if (u.tokens.size() >= span_len) out[u.author].push_back(&u);
  }
  for (auto& [author, comments] : out) {
    std::sort(comments.begin(), comments.end(),
              [](const TokenizedUtterance* a, const TokenizedUtterance* b) {
                return a->comment_id < b->comment_id;
              });
  }
  return out;
}

std::vector<std::string> cut_window(const TokenizedUtterance* u,
                                    std::size_t span_len, Rng* rng) {
  std::size_t max_start = u->tokens.size() - span_len;
  std::size_t start =
      max_start == 0 ? 0 : static_cast<std::size_t>(rng->below(max_start + 1));
  return std::vector<std::string>(u->tokens.begin() + start,
                                  u->tokens.begin() + start + span_len);
}

}  // namespace

AcculturationResult acculturation_gap(
    const std::vector<TokenizedUtterance>& bucket,
    const CommunityMonthKey& key, const Cohorts& cohorts,
    const std::vector<SnapshotLM>& slms, const AcculturationProtocol& proto,
    std::uint64_t seed) {
  AcculturationResult result;
  if (slms.empty()) {
    result.skip_reason = "no trained models";
    return result;
  }
  if (cohorts.active.empty() || cohorts.outsiders.empty()) {
    result.skip_reason = "empty cohort";
    return result;
  }

  auto long_comments = long_comments_by_author(bucket, proto.span_len);

  // Outsiders have one comment each; keep those long enough to score.
  std::vector<const TokenizedUtterance*> outsider_comments;
  {
    std::set<std::string> outsider_set(cohorts.outsiders.begin(),
                                       cohorts.outsiders.end());
    for (const auto& [author, comments] : long_comments) {
      if (!outsider_set.count(author)) continue;
      for (const auto* u : comments) outsider_comments.push_back(u);
    }
  }
  if (outsider_comments.empty()) {
    result.skip_reason = "no outsider comment of span length";
    return result;
  }

  // Active users with at least one span-length comment, per replicate
  // restricted to users outside that model's training manifest.
  std::vector<std::string> scorable_active;
  for (const auto& author : cohorts.active) {
    if (long_comments.count(author)) scorable_active.push_back(author);
  }

  std::vector<std::vector<std::string>> eval_pools(slms.size());
  for (std::size_t m = 0; m < slms.size(); ++m) {
    std::set<std::string> trained(slms[m].manifest().users.begin(),
                                  slms[m].manifest().users.end());
    for (const auto& author : scorable_active) {
      if (!trained.count(author)) eval_pools[m].push_back(author);
    }
    if (eval_pools[m].size() < proto.eval_users) {
      result.skip_reason = "not enough active users outside the training "
                           "manifest";
      return result;
    }
  }

  for (std::size_t m = 0; m < slms.size(); ++m) {
    Rng rng(derive_seed(seed, {hash_bytes("acculturation"),
                               hash_bytes(key.community),
                               static_cast<std::uint64_t>(
                                   static_cast<std::int64_t>(key.month)),
                               m}));
    double active_sum = 0.0;
    std::int64_t active_n = 0;
    std::vector<std::size_t> picks =
        rng.sample_indices(eval_pools[m].size(), proto.eval_users);
    for (std::size_t idx : picks) {
      const auto& comments = long_comments.at(eval_pools[m][idx]);
      for (std::size_t c = 0; c < proto.comments_per_user; ++c) {
        const TokenizedUtterance* u = comments[rng.below(comments.size())];
        auto h = cross_entropy(cut_window(u, proto.span_len, &rng), slms[m]);
        active_sum += *h;
        ++active_n;
      }
    }

    double outsider_sum = 0.0;
    std::int64_t outsider_n = 0;
    for (std::size_t s = 0; s < proto.outsider_spans; ++s) {
      const TokenizedUtterance* u =
          outsider_comments[rng.below(outsider_comments.size())];
      auto h = cross_entropy(cut_window(u, proto.span_len, &rng), slms[m]);
      outsider_sum += *h;
      ++outsider_n;
    }

    double e_active = active_sum / static_cast<double>(active_n);
    double e_outsider = outsider_sum / static_cast<double>(outsider_n);
    result.per_replicate.push_back((e_outsider - e_active) / e_active);
  }

  result.defined = true;
  double sum = 0.0;
  for (double a : result.per_replicate) sum += a;
  result.gap = sum / static_cast<double>(result.per_replicate.size());

  std::vector<double> sorted = result.per_replicate;
  std::sort(sorted.begin(), sorted.end());
  double last = static_cast<double>(sorted.size() - 1);
  result.ci_lo = sorted[static_cast<std::size_t>(std::floor(0.025 * last))];
  result.ci_hi = sorted[static_cast<std::size_t>(std::ceil(0.975 * last))];
  return result;
}

namespace {

// Mean utterance score per (user, month), appended per cohort.
void collect_user_points(const std::vector<TokenizedUtterance>& bucket,
                         const WordScores& scores,
                         const std::vector<std::string>& cohort,
                         TokenWeighting weighting,
                         std::vector<double>* spec_points,
                         std::vector<double>* vol_points) {
  std::set<std::string> members(cohort.begin(), cohort.end());
  std::map<std::string, std::pair<UtteranceScore, std::int64_t>> per_user;
  for (const auto& u : bucket) {
    if (!members.count(u.author)) continue;
    auto s = utterance_scores(u, scores, weighting);
    if (!s) continue;
    auto& [acc, n] = per_user[u.author];
    acc.specificity += s->specificity;
    acc.volatility += s->volatility;
    ++n;
  }
  for (const auto& [author, entry] : per_user) {
    const auto& [acc, n] = entry;
    spec_points->push_back(acc.specificity / static_cast<double>(n));
    vol_points->push_back(acc.volatility / static_cast<double>(n));
  }
}

GapResult make_gap(const std::vector<double>& active,
                   const std::vector<double>& outsider) {
  GapResult gap;
  gap.active_points = static_cast<std::int64_t>(active.size());
  gap.outsider_points = static_cast<std::int64_t>(outsider.size());
  double sa = 0.0, so = 0.0;
  for (double v : active) sa += v;
  for (double v : outsider) so += v;
  gap.mu_active = sa / static_cast<double>(active.size());
  gap.mu_outsider = so / static_cast<double>(outsider.size());
  double num = gap.mu_active - gap.mu_outsider;
  double denom = (std::fabs(gap.mu_active) + std::fabs(gap.mu_outsider)) / 2.0;
  gap.symmetric = denom == 0.0 ? 0.0 : num / denom;
  gap.eq_style =
      gap.mu_outsider == 0.0 ? 0.0 : num / std::fabs(gap.mu_outsider);
  return gap;
}

}  // namespace

CommunityGaps content_affinity_gaps(const BucketedCorpus& corpus,
                                    const CorpusTables& tables,
                                    const ActivityIndex& idx,
                                    const std::string& community,
                                    const TypologyOptions& topts,
                                    std::int64_t active_min) {
  CommunityGaps gaps;
  std::vector<double> active_spec, active_vol, outsider_spec, outsider_vol;

  for (const auto& [key, vocab] : tables.scoring) {
    if (key.community != community) continue;
    Cohorts cohorts = identify_cohorts(idx, key, active_min);
    if (cohorts.active.empty() && cohorts.outsiders.empty()) continue;
    WordScores scores = score_words(tables, key, topts.background);
    const auto& bucket = corpus.buckets.at(key);
    collect_user_points(bucket, scores, cohorts.active, topts.weighting,
                        &active_spec, &active_vol);
    collect_user_points(bucket, scores, cohorts.outsiders, topts.weighting,
                        &outsider_spec, &outsider_vol);
  }

  if (active_spec.empty() || outsider_spec.empty()) {
    gaps.skip_reason = "a cohort has no scored comments";
    return gaps;
  }
  gaps.defined = true;
  gaps.specificity = make_gap(active_spec, outsider_spec);
  gaps.volatility = make_gap(active_vol, outsider_vol);
  return gaps;
}

}  // namespace commscape
