#include "commscape/typology.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "commscape/errors.hpp"

namespace commscape {

namespace {

double log2_ratio(double p_num, double p_den) {
  return std::log2(p_num) - std::log2(p_den);
}

}  // namespace

std::optional<double> word_specificity(const CorpusTables& tables,
                                       const CommunityMonthKey& key,
                                       const std::string& word,
                                       BackgroundMode mode) {
  auto vocab = tables.scoring.find(key);
  if (vocab == tables.scoring.end() || !vocab->second.words.count(word)) {
    return std::nullopt;
  }
  const FrequencyTable& month = tables.month.at(key);
  const FrequencyTable& bg = tables.background(key.month, mode);
  return log2_ratio(month.probability(word), bg.probability(word));
}

std::optional<double> word_volatility(const CorpusTables& tables,
                                      const CommunityMonthKey& key,
                                      const std::string& word) {
  auto vocab = tables.scoring.find(key);
  if (vocab == tables.scoring.end() || !vocab->second.words.count(word)) {
    return std::nullopt;
  }
  const FrequencyTable& month = tables.month.at(key);
  const FrequencyTable& history = tables.backgrounds.history.at(key.community);
  return log2_ratio(month.probability(word), history.probability(word));
}

WordScores score_words(const CorpusTables& tables,
                       const CommunityMonthKey& key, BackgroundMode mode) {
  auto vocab = tables.scoring.find(key);
  if (vocab == tables.scoring.end()) {
    throw DataError("no scoring vocab for " + key.community + " " +
                    month_label(key.month));
  }
  const FrequencyTable& month = tables.month.at(key);
  const FrequencyTable& bg = tables.background(key.month, mode);
  const FrequencyTable& history = tables.backgrounds.history.at(key.community);

  WordScores scores;
  scores.community_month = key;
  for (const auto& w : vocab->second.words) {
    double p_month = month.probability(w);
    scores.specificity[w] = log2_ratio(p_month, bg.probability(w));
    scores.volatility[w] = log2_ratio(p_month, history.probability(w));
  }
  return scores;
}

std::optional<UtteranceScore> utterance_scores(const TokenizedUtterance& u,
                                               const WordScores& scores,
                                               TokenWeighting weighting) {
  UtteranceScore acc;
  double spec_sum = 0.0;
  double vol_sum = 0.0;
  std::set<std::string> used;  // unique weighting only
  for (auto idx : u.scoring_idx) {
    const std::string& w = u.tokens[idx];
    auto it = scores.specificity.find(w);
    if (it == scores.specificity.end()) continue;
    if (weighting == TokenWeighting::unique && !used.insert(w).second) {
      continue;
    }
    spec_sum += it->second;
    vol_sum += scores.volatility.at(w);
    ++acc.scored_tokens;
  }
  if (acc.scored_tokens == 0) return std::nullopt;
  acc.specificity = spec_sum / static_cast<double>(acc.scored_tokens);
  acc.volatility = vol_sum / static_cast<double>(acc.scored_tokens);
  return acc;
}

std::optional<MonthMeasures> community_measures(
    const std::vector<TokenizedUtterance>& bucket, const WordScores& scores,
    std::int64_t min_scored, TokenWeighting weighting) {
  MonthMeasures m;
  double spec_sum = 0.0;
  double vol_sum = 0.0;
  for (const auto& u : bucket) {
    auto s = utterance_scores(u, scores, weighting);
    if (!s) {
      ++m.skipped_utterances;
      continue;
    }
    spec_sum += s->specificity;
    vol_sum += s->volatility;
    ++m.scored_utterances;
  }
  if (m.scored_utterances < min_scored) return std::nullopt;
  m.distinctiveness = spec_sum / static_cast<double>(m.scored_utterances);
  m.dynamicity = vol_sum / static_cast<double>(m.scored_utterances);
  return m;
}

std::map<std::string, CommunityProfile> build_profiles(
    const BucketedCorpus& corpus, const CorpusTables& tables,
    const TypologyOptions& opts) {
  std::map<std::string, CommunityProfile> profiles;
  for (const auto& key : tables.eligible_months) {
    if (!tables.eligible_comms.count(key.community)) continue;
    WordScores scores = score_words(tables, key, opts.background);
    auto measures = community_measures(corpus.buckets.at(key), scores,
                                       opts.min_scored, opts.weighting);
    CommunityProfile& profile = profiles[key.community];
    profile.community = key.community;
    if (measures) {
      profile.per_month[key.month] = *measures;
    } else {
      ++profile.excluded_months;
    }
  }

  for (auto it = profiles.begin(); it != profiles.end();) {
    CommunityProfile& p = it->second;
    if (p.per_month.empty()) {
      it = profiles.erase(it);
      continue;
    }
    double spec_sum = 0.0;
    double vol_sum = 0.0;
    for (const auto& [month, m] : p.per_month) {
      spec_sum += m.distinctiveness;
      vol_sum += m.dynamicity;
    }
    double n = static_cast<double>(p.per_month.size());
    p.distinctiveness = spec_sum / n;
    p.dynamicity = vol_sum / n;
    ++it;
  }
  return profiles;
}

namespace {

// Bottom label at or below the k-th smallest, top label at or above the
// k-th largest, k = floor(n/4). Coinciding boundaries disable the axis.
void label_axis(std::map<std::string, CommunityProfile>* profiles,
                double CommunityProfile::*axis, const char* low_label,
                const char* high_label,
                std::string CommunityProfile::*out) {
  std::vector<double> values;
  values.reserve(profiles->size());
  for (const auto& [name, p] : *profiles) values.push_back(p.*axis);
  std::size_t k = values.size() / 4;
  if (k == 0) return;
  std::sort(values.begin(), values.end());
  double q1 = values[k - 1];
  double q3 = values[values.size() - k];
  if (!(q1 < q3)) return;
  for (auto& [name, p] : *profiles) {
    if (p.*axis <= q1) p.*out = low_label;
    else if (p.*axis >= q3) p.*out = high_label;
  }
}

}  // namespace

void quadrant_label(std::map<std::string, CommunityProfile>* profiles) {
  for (auto& [name, p] : *profiles) {
    p.distinct_label.clear();
    p.dynamic_label.clear();
  }
  label_axis(profiles, &CommunityProfile::distinctiveness, "generic",
             "distinctive", &CommunityProfile::distinct_label);
  label_axis(profiles, &CommunityProfile::dynamicity, "consistent", "dynamic",
             &CommunityProfile::dynamic_label);
}

void export_word_scores_csv(const std::vector<WordScores>& all,
                            const std::string& path,
                            const CsvMetadata& metadata) {
  CsvWriter csv(path, metadata,
                {"community", "month", "word", "specificity", "volatility"});
  for (const auto& scores : all) {
    for (const auto& [w, spec] : scores.specificity) {
      csv.field(scores.community_month.community)
          .field(month_label(scores.community_month.month))
          .field(w)
          .field(spec)
          .field(scores.volatility.at(w));
      csv.end_row();
    }
  }
}

void export_profiles_csv(const std::map<std::string, CommunityProfile>& p,
                         const std::string& path,
                         const CsvMetadata& metadata) {
  CsvWriter csv(path, metadata,
                {"community", "months_included", "months_excluded",
                 "distinctiveness", "dynamicity", "distinct_label",
                 "dynamic_label"});
  for (const auto& [name, profile] : p) {
    csv.field(name)
        .field(static_cast<std::int64_t>(profile.per_month.size()))
        .field(profile.excluded_months)
        .field(profile.distinctiveness)
        .field(profile.dynamicity)
        .field(profile.distinct_label)
        .field(profile.dynamic_label);
    csv.end_row();
  }
}

}  // namespace commscape
