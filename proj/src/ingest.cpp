#include "commscape/ingest.hpp"

#include <fstream>

#include "commscape/errors.hpp"
#include "commscape/tokenize.hpp"

namespace commscape {

std::vector<CommentRecord> filter_top_level(
    const std::vector<CommentRecord>& records) {
  std::vector<CommentRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.top_level()) out.push_back(r);
  }
  return out;
}

std::map<CommunityMonthKey, std::vector<TokenizedUtterance>> bucket_by_month(
    const std::vector<CommentRecord>& records, const NounFilter& nouns,
    DropReport* drops) {
  std::map<CommunityMonthKey, std::vector<TokenizedUtterance>> buckets;
  for (const auto& r : records) {
    TokenizedUtterance u;
    u.comment_id = r.comment_id;
    u.author = r.author;
    u.community_month = {r.community, month_index_from_epoch(r.timestamp)};
    u.tokens = tokenize(r.body);
    if (u.tokens.empty()) {
      if (drops) ++drops->empty_after_tokenize;
      continue;
    }
    u.scoring_idx = nouns.filter(u.tokens);
    buckets[u.community_month].push_back(std::move(u));
    if (drops) ++drops->bucketed;
  }
  return buckets;
}

ForeignFlag score_foreign(const std::vector<const TokenizedUtterance*>& sample,
                          const std::unordered_set<std::string>& stoplist,
                          double threshold, std::int64_t min_tokens) {
  ForeignFlag flag;
  std::int64_t hits = 0;
  for (const auto* u : sample) {
    for (const auto& t : u->tokens) {
      ++flag.sample_tokens;
      if (stoplist.count(t)) ++hits;
    }
  }
  if (flag.sample_tokens < min_tokens) return flag;  // too small to judge
  flag.scored = true;
  flag.score = static_cast<double>(hits) /
               static_cast<double>(flag.sample_tokens);
  flag.heuristic = flag.score < threshold;
  flag.foreign = flag.heuristic;
  return flag;
}

void apply_foreign_flags(BucketedCorpus* corpus, const IngestOptions& opts) {
  std::map<std::string, std::vector<const TokenizedUtterance*>> by_community;
  for (const auto& [key, utterances] : corpus->buckets) {
    auto& sample = by_community[key.community];
    for (const auto& u : utterances) sample.push_back(&u);
  }
  for (const auto& [community, sample] : by_community) {
    ForeignFlag flag;
    if (!opts.stoplist.empty()) {
      // No stoplist means no screen: an empty list would score every
      // community at 0 and flag the whole corpus.
      flag = score_foreign(sample, opts.stoplist, opts.foreign_threshold,
                           opts.foreign_min_tokens);
    }
    auto ov = opts.foreign_overrides.find(community);
    if (ov != opts.foreign_overrides.end()) {
      flag.overridden = true;
      flag.foreign = ov->second;
    }
    corpus->flags[community] = flag;
  }
}

BucketedCorpus ingest_records(const std::vector<CommentRecord>& records,
                              const ParseStats& parse_stats,
                              const IngestOptions& opts) {
  BucketedCorpus corpus;
  corpus.drops.lines_read = parse_stats.lines_read;
  corpus.drops.malformed = parse_stats.malformed;
  corpus.drops.deleted_author = parse_stats.dropped_deleted;
  corpus.drops.empty_body = parse_stats.dropped_empty_body;
  corpus.drops.parsed = parse_stats.parsed;

  std::vector<CommentRecord> top = filter_top_level(records);
  corpus.drops.non_top_level =
      static_cast<std::int64_t>(records.size() - top.size());
  corpus.buckets = bucket_by_month(top, opts.nouns, &corpus.drops);
  apply_foreign_flags(&corpus, opts);
  return corpus;
}

BucketedCorpus run_ingest(const std::string& jsonl_path,
                          const IngestOptions& opts) {
  ParseStats stats;
  std::vector<CommentRecord> records = parse_comment_file(jsonl_path, &stats);
  return ingest_records(records, stats, opts);
}

std::unordered_set<std::string> load_word_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("word list not readable: " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    words.insert(line);
  }
  return words;
}

std::map<std::string, bool> load_foreign_overrides(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("override list not readable: " + path);
  std::map<std::string, bool> overrides;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '!') {
      overrides[line.substr(1)] = false;
    } else {
      overrides[line] = true;
    }
  }
  return overrides;
}

}  // namespace commscape
