#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "commscape/comment.hpp"
#include "commscape/csv.hpp"

namespace commscape {

// Per-filter drop accounting. Conservation holds at both levels:
//   lines_read = parsed + malformed + deleted_author + empty_body
//   parsed     = bucketed + non_top_level + empty_after_tokenize
struct DropReport {
  std::int64_t lines_read = 0;
  std::int64_t malformed = 0;
  std::int64_t deleted_author = 0;
  std::int64_t empty_body = 0;
  std::int64_t parsed = 0;
  std::int64_t non_top_level = 0;
  std::int64_t empty_after_tokenize = 0;
  std::int64_t bucketed = 0;
};

struct ForeignFlag {
  std::int64_t sample_tokens = 0;
  double score = 0.0;     // fraction of sampled tokens found in the stoplist
  bool scored = false;    // sample reached the minimum size
  bool heuristic = false; // advisory flag from the score alone
  bool overridden = false;
  bool foreign = false;   // final decision
};

struct BucketedCorpus {
  // Ordered map: iteration order is the canonical deterministic order for
  // every downstream computation and serialization.
  std::map<CommunityMonthKey, std::vector<TokenizedUtterance>> buckets;
  std::map<std::string, ForeignFlag> flags;
  DropReport drops;

  bool foreign(const std::string& community) const {
    auto it = flags.find(community);
    return it != flags.end() && it->second.foreign;
  }

  std::vector<std::string> communities() const;
  std::int64_t utterance_count() const;
};

// Versioned binary artifact with a shared string table.
void save_corpus(const BucketedCorpus& corpus, const std::string& path);
BucketedCorpus load_corpus(const std::string& path);

void write_drop_report_csv(const DropReport& drops, const std::string& path,
                           const CsvMetadata& metadata);
void write_foreign_flags_csv(const BucketedCorpus& corpus,
                             const std::string& path,
                             const CsvMetadata& metadata);

}  // namespace commscape
