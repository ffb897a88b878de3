#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "commscape/comment.hpp"
#include "commscape/corpus.hpp"
#include "commscape/jsonl.hpp"
#include "commscape/nouns.hpp"

namespace commscape {

// Keeps exactly the records that are initial responses to a post.
std::vector<CommentRecord> filter_top_level(
    const std::vector<CommentRecord>& records);

// Tokenizes, applies the token-class filter, and buckets by UTC calendar
// month. Utterances with no tokens left are dropped and counted in *drops
// (which may be null).
std::map<CommunityMonthKey, std::vector<TokenizedUtterance>> bucket_by_month(
    const std::vector<CommentRecord>& records, const NounFilter& nouns,
    DropReport* drops);

// Stoplist-overlap language screen. score = fraction of sample tokens found
// in the stoplist; a community with a sufficient sample and score below the
// threshold gets an advisory flag. Samples below min_tokens are not scored.
ForeignFlag score_foreign(const std::vector<const TokenizedUtterance*>& sample,
                          const std::unordered_set<std::string>& stoplist,
                          double threshold, std::int64_t min_tokens);

struct IngestOptions {
  NounFilter nouns = NounFilter::accept_all();
  std::unordered_set<std::string> stoplist;
  // community -> true forces foreign, false forces keep. Applied last.
  std::map<std::string, bool> foreign_overrides;
  double foreign_threshold = 0.05;
  std::int64_t foreign_min_tokens = 1000;
};

// Scores every community on all of its bucketed tokens and finalizes flags
// with the override list.
void apply_foreign_flags(BucketedCorpus* corpus, const IngestOptions& opts);

// Full pipeline over already-parsed records.
BucketedCorpus ingest_records(const std::vector<CommentRecord>& records,
                              const ParseStats& parse_stats,
                              const IngestOptions& opts);

// Full pipeline from a JSON-lines file.
BucketedCorpus run_ingest(const std::string& jsonl_path,
                          const IngestOptions& opts);

// One word per line; '#' lines and blanks ignored.
std::unordered_set<std::string> load_word_set(const std::string& path);

// Override list: one community per line drops it as foreign; a leading '!'
// forces keep instead. '#' lines and blanks ignored.
std::map<std::string, bool> load_foreign_overrides(const std::string& path);

}  // namespace commscape
