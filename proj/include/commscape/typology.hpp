#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "commscape/corpus.hpp"
#include "commscape/counts.hpp"
#include "commscape/csv.hpp"

namespace commscape {

// Specificity: log2 ratio of the word's in-month probability to the
// collection background. Volatility: same against the community's own
// history. Both defined only for words in the month's scoring vocab;
// absence is a distinct not-scored signal, not zero.
std::optional<double> word_specificity(const CorpusTables& tables,
                                       const CommunityMonthKey& key,
                                       const std::string& word,
                                       BackgroundMode mode);
std::optional<double> word_volatility(const CorpusTables& tables,
                                      const CommunityMonthKey& key,
                                      const std::string& word);

// All scores for one community-month's scoring vocab.
struct WordScores {
  CommunityMonthKey community_month;
  std::map<std::string, double> specificity;
  std::map<std::string, double> volatility;
};

WordScores score_words(const CorpusTables& tables,
                       const CommunityMonthKey& key, BackgroundMode mode);

enum class TokenWeighting { per_occurrence, unique };

struct UtteranceScore {
  double specificity = 0.0;
  double volatility = 0.0;
  std::int64_t scored_tokens = 0;
};

// Mean word score over the utterance's scorable tokens; nullopt when no
// token is in the scoring vocab.
std::optional<UtteranceScore> utterance_scores(const TokenizedUtterance& u,
                                               const WordScores& scores,
                                               TokenWeighting weighting);

struct MonthMeasures {
  double distinctiveness = 0.0;  // mean utterance specificity
  double dynamicity = 0.0;       // mean utterance volatility
  std::int64_t scored_utterances = 0;
  std::int64_t skipped_utterances = 0;
};

// Unweighted mean over scored utterances; nullopt when fewer than
// min_scored utterances could be scored.
std::optional<MonthMeasures> community_measures(
    const std::vector<TokenizedUtterance>& bucket, const WordScores& scores,
    std::int64_t min_scored, TokenWeighting weighting);

struct CommunityProfile {
  std::string community;
  std::map<MonthIndex, MonthMeasures> per_month;  // included months only
  std::int64_t excluded_months = 0;  // eligible but under min_scored
  double distinctiveness = 0.0;      // unweighted mean over included months
  double dynamicity = 0.0;
  std::string distinct_label;  // "", "generic", "distinctive"
  std::string dynamic_label;   // "", "consistent", "dynamic"
};

struct TypologyOptions {
  BackgroundMode background = BackgroundMode::month_matched;
  TokenWeighting weighting = TokenWeighting::per_occurrence;
  std::int64_t min_scored = 50;
};

// Profiles for every eligible community with at least one included month,
// keyed by community.
std::map<std::string, CommunityProfile> build_profiles(
    const BucketedCorpus& corpus, const CorpusTables& tables,
    const TypologyOptions& opts);

// Labels the top and bottom quartiles on each axis; the middle half gets
// no label. Degenerate axes (quartile boundaries coincide) stay unlabeled.
void quadrant_label(std::map<std::string, CommunityProfile>* profiles);

void export_word_scores_csv(const std::vector<WordScores>& all,
                            const std::string& path,
                            const CsvMetadata& metadata);
void export_profiles_csv(const std::map<std::string, CommunityProfile>& p,
                         const std::string& path, const CsvMetadata& metadata);

}  // namespace commscape
