#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "commscape/comment.hpp"
#include "commscape/corpus.hpp"
#include "commscape/csv.hpp"

namespace commscape {

// Word counts with one count per distinct contributing user per
// community-month. Probabilities are count/total.
struct FrequencyTable {
  std::string scope;
  std::map<std::string, std::int64_t> counts;
  std::int64_t total = 0;

  std::int64_t count(const std::string& w) const {
    auto it = counts.find(w);
    return it == counts.end() ? 0 : it->second;
  }

  double probability(const std::string& w) const {
    if (total == 0) return 0.0;
    return static_cast<double>(count(w)) / static_cast<double>(total);
  }

  std::size_t vocab_size() const { return counts.size(); }

  void add(const std::string& w, std::int64_t n) {
    counts[w] += n;
    total += n;
  }

  void merge(const FrequencyTable& other) {
    for (const auto& [w, n] : other.counts) add(w, n);
  }
};

// Words at or above the given frequency percentile within one c_t.
struct ScoringVocab {
  CommunityMonthKey community_month;
  std::int64_t threshold_count = 0;
  std::set<std::string> words;
};

// Dedup unit is (user, word): a user contributes each word at most once
// per community-month. Words come from scoring tokens only.
FrequencyTable build_frequency_table(
    const std::vector<TokenizedUtterance>& bucket);

enum class BackgroundMode { month_matched, pooled };

struct Backgrounds {
  std::map<std::string, FrequencyTable> history;          // per community
  std::map<MonthIndex, FrequencyTable> collection_month;  // per month
  FrequencyTable collection_pooled;
};

// History and collection tables are sums of the deduplicated month tables.
Backgrounds aggregate_background(
    const std::map<CommunityMonthKey, FrequencyTable>& month_tables);

struct EligibilityThresholds {
  std::int64_t vocab_min = 500;
  int months_min = 4;
  int percentile = 95;
};

std::set<CommunityMonthKey> eligible_community_months(
    const std::map<CommunityMonthKey, FrequencyTable>& month_tables,
    std::int64_t vocab_min);

// Eligible communities have >= months_min eligible months. Foreign-flagged
// communities never reach this point (their tables are not built).
std::set<std::string> eligible_communities(
    const std::set<CommunityMonthKey>& eligible_months, int months_min);

// Nearest-rank percentile on the count distribution over distinct words,
// boundary ties included: threshold is the count at ascending rank
// floor(q*n/100)+1 (clamped to n), and every word with count >= threshold
// is selected.
ScoringVocab top_percentile_vocab(const FrequencyTable& table,
                                  const CommunityMonthKey& key, int q);

struct CorpusTables {
  std::map<CommunityMonthKey, FrequencyTable> month;
  Backgrounds backgrounds;
  std::set<CommunityMonthKey> eligible_months;
  std::set<std::string> eligible_comms;
  std::map<CommunityMonthKey, ScoringVocab> scoring;  // eligible months only

  const FrequencyTable& background(MonthIndex t, BackgroundMode mode) const;
};

// Builds every table downstream measures need. Foreign-flagged communities
// are excluded from all tables, backgrounds included.
CorpusTables build_tables(const BucketedCorpus& corpus,
                          const EligibilityThresholds& thr);

void export_frequency_table_csv(const FrequencyTable& table,
                                const std::string& path,
                                const CsvMetadata& metadata);

}  // namespace commscape
