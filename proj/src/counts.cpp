#include "commscape/counts.hpp"

#include <algorithm>
#include <utility>

#include "commscape/errors.hpp"

namespace commscape {

FrequencyTable build_frequency_table(
    const std::vector<TokenizedUtterance>& bucket) {
  // (user, word) pairs, counted once each.
  std::set<std::pair<std::string, std::string>> seen;
  FrequencyTable table;
  for (const auto& u : bucket) {
    for (auto idx : u.scoring_idx) {
      const std::string& w = u.tokens[idx];
      if (seen.emplace(u.author, w).second) table.add(w, 1);
    }
  }
  return table;
}

Backgrounds aggregate_background(
    const std::map<CommunityMonthKey, FrequencyTable>& month_tables) {
  Backgrounds bg;
  for (const auto& [key, table] : month_tables) {
    bg.history[key.community].merge(table);
    bg.collection_month[key.month].merge(table);
    bg.collection_pooled.merge(table);
  }
  for (auto& [community, table] : bg.history) {
    table.scope = "history:" + community;
  }
  for (auto& [month, table] : bg.collection_month) {
    table.scope = "collection:" + month_label(month);
  }
  bg.collection_pooled.scope = "collection:pooled";
  return bg;
}

std::set<CommunityMonthKey> eligible_community_months(
    const std::map<CommunityMonthKey, FrequencyTable>& month_tables,
    std::int64_t vocab_min) {
  std::set<CommunityMonthKey> eligible;
  for (const auto& [key, table] : month_tables) {
    if (static_cast<std::int64_t>(table.vocab_size()) >= vocab_min) {
      eligible.insert(key);
    }
  }
  return eligible;
}

std::set<std::string> eligible_communities(
    const std::set<CommunityMonthKey>& eligible_months, int months_min) {
  std::map<std::string, int> month_counts;
  for (const auto& key : eligible_months) ++month_counts[key.community];
  std::set<std::string> eligible;
  for (const auto& [community, n] : month_counts) {
    if (n >= months_min) eligible.insert(community);
  }
  return eligible;
}

ScoringVocab top_percentile_vocab(const FrequencyTable& table,
                                  const CommunityMonthKey& key, int q) {
  ScoringVocab vocab;
  vocab.community_month = key;
  if (table.counts.empty()) return vocab;

  std::vector<std::int64_t> sorted;
  sorted.reserve(table.counts.size());
  for (const auto& [w, n] : table.counts) sorted.push_back(n);
  std::sort(sorted.begin(), sorted.end());

  std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(
      (static_cast<std::uint64_t>(q) * n) / 100);  // 0-based after floor
  if (rank >= n) rank = n - 1;
  vocab.threshold_count = sorted[rank];

  for (const auto& [w, count] : table.counts) {
    if (count >= vocab.threshold_count) vocab.words.insert(w);
  }
  return vocab;
}

const FrequencyTable& CorpusTables::background(MonthIndex t,
                                               BackgroundMode mode) const {
  if (mode == BackgroundMode::pooled) return backgrounds.collection_pooled;
  auto it = backgrounds.collection_month.find(t);
  if (it == backgrounds.collection_month.end()) {
    throw DataError("no collection table for month " + month_label(t));
  }
  return it->second;
}

CorpusTables build_tables(const BucketedCorpus& corpus,
                          const EligibilityThresholds& thr) {
  CorpusTables tables;
  for (const auto& [key, bucket] : corpus.buckets) {
    if (corpus.foreign(key.community)) continue;
    FrequencyTable table = build_frequency_table(bucket);
    table.scope = "month:" + key.community + ":" + month_label(key.month);
    tables.month.emplace(key, std::move(table));
  }
  tables.backgrounds = aggregate_background(tables.month);
  tables.eligible_months =
      eligible_community_months(tables.month, thr.vocab_min);
  tables.eligible_comms =
      eligible_communities(tables.eligible_months, thr.months_min);
  for (const auto& key : tables.eligible_months) {
    tables.scoring.emplace(
        key, top_percentile_vocab(tables.month.at(key), key, thr.percentile));
  }
  return tables;
}

void export_frequency_table_csv(const FrequencyTable& table,
                                const std::string& path,
                                const CsvMetadata& metadata) {
  CsvWriter csv(path, metadata, {"word", "count", "probability"});
  for (const auto& [w, n] : table.counts) {
    csv.field(w).field(n).field(table.probability(w));
    csv.end_row();
  }
}

}  // namespace commscape
