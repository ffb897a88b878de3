#include "commscape/corpus.hpp"

#include <fstream>
#include <unordered_map>

#include "commscape/binio.hpp"
#include "commscape/errors.hpp"

namespace commscape {

namespace {

constexpr char kMagic[4] = {'C', 'M', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

// Interns strings in first-encounter order; the corpus is walked in its
// canonical map order, so the table is deterministic.
class StringTable {
 public:
  std::uint64_t id(const std::string& s) {
    auto [it, inserted] = ids_.try_emplace(s, strings_.size());
    if (inserted) strings_.push_back(s);
    return it->second;
  }

  const std::vector<std::string>& strings() const { return strings_; }

 private:
  std::unordered_map<std::string, std::uint64_t> ids_;
  std::vector<std::string> strings_;
};

}  // namespace

std::vector<std::string> BucketedCorpus::communities() const {
  std::vector<std::string> out;
  for (const auto& [key, utterances] : buckets) {
    if (out.empty() || out.back() != key.community) {
      out.push_back(key.community);
    }
  }
  return out;
}

std::int64_t BucketedCorpus::utterance_count() const {
  std::int64_t n = 0;
  for (const auto& [key, utterances] : buckets) {
    n += static_cast<std::int64_t>(utterances.size());
  }
  return n;
}

void save_corpus(const BucketedCorpus& corpus, const std::string& path) {
  // Two passes: collect the string table, then write table before payload
  // so the reader can resolve ids in one sweep.
  StringTable table;
  for (const auto& [key, utterances] : corpus.buckets) {
    table.id(key.community);
    for (const auto& u : utterances) {
      table.id(u.comment_id);
      table.id(u.author);
      for (const auto& t : u.tokens) table.id(t);
    }
  }
  for (const auto& [community, flag] : corpus.flags) table.id(community);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path);
  ByteWriter w(out);
  out.write(kMagic, 4);
  w.u32(kVersion);

  w.u64(table.strings().size());
  for (const auto& s : table.strings()) w.str(s);

  w.u64(corpus.buckets.size());
  for (const auto& [key, utterances] : corpus.buckets) {
    w.u64(table.id(key.community));
    w.i32(key.month);
    w.u64(utterances.size());
    for (const auto& u : utterances) {
      w.u64(table.id(u.comment_id));
      w.u64(table.id(u.author));
      w.u64(u.tokens.size());
      for (const auto& t : u.tokens) w.u64(table.id(t));
      w.u64(u.scoring_idx.size());
      for (auto i : u.scoring_idx) w.u32(i);
    }
  }

  w.u64(corpus.flags.size());
  for (const auto& [community, flag] : corpus.flags) {
    w.u64(table.id(community));
    w.i64(flag.sample_tokens);
    w.f64(flag.score);
    w.u8(flag.scored ? 1 : 0);
    w.u8(flag.heuristic ? 1 : 0);
    w.u8(flag.overridden ? 1 : 0);
    w.u8(flag.foreign ? 1 : 0);
  }

  const DropReport& d = corpus.drops;
  w.i64(d.lines_read);
  w.i64(d.malformed);
  w.i64(d.deleted_author);
  w.i64(d.empty_body);
  w.i64(d.parsed);
  w.i64(d.non_top_level);
  w.i64(d.empty_after_tokenize);
  w.i64(d.bucketed);

  if (!w.ok()) throw IoError("write failed: " + path);
}

BucketedCorpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus artifact: " + path);
  ByteReader r(in);

  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string_view(magic, 4) !=
                              std::string_view(kMagic, 4)) {
    throw DataError("not a corpus artifact: " + path);
  }
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("unsupported corpus artifact version " +
                    std::to_string(version) + ": " + path);
  }

  std::uint64_t n_strings = r.u64();
  std::vector<std::string> strings;
  strings.reserve(n_strings);
  for (std::uint64_t i = 0; i < n_strings; ++i) strings.push_back(r.str());
  auto lookup = [&](std::uint64_t id) -> const std::string& {
    if (id >= strings.size()) throw DataError("corrupt string id: " + path);
    return strings[id];
  };

  BucketedCorpus corpus;
  std::uint64_t n_buckets = r.u64();
  for (std::uint64_t b = 0; b < n_buckets; ++b) {
    CommunityMonthKey key;
    key.community = lookup(r.u64());
    key.month = r.i32();
    std::uint64_t n_utts = r.u64();
    std::vector<TokenizedUtterance> utterances;
    utterances.reserve(n_utts);
    for (std::uint64_t i = 0; i < n_utts; ++i) {
      TokenizedUtterance u;
      u.comment_id = lookup(r.u64());
      u.author = lookup(r.u64());
      u.community_month = key;
      std::uint64_t n_tokens = r.u64();
      u.tokens.reserve(n_tokens);
      for (std::uint64_t t = 0; t < n_tokens; ++t) {
        u.tokens.push_back(lookup(r.u64()));
      }
      std::uint64_t n_scoring = r.u64();
      u.scoring_idx.reserve(n_scoring);
      for (std::uint64_t s = 0; s < n_scoring; ++s) {
        u.scoring_idx.push_back(r.u32());
      }
      utterances.push_back(std::move(u));
    }
    corpus.buckets.emplace(std::move(key), std::move(utterances));
  }

  std::uint64_t n_flags = r.u64();
  for (std::uint64_t i = 0; i < n_flags; ++i) {
    std::string community = lookup(r.u64());
    ForeignFlag flag;
    flag.sample_tokens = r.i64();
    flag.score = r.f64();
    flag.scored = r.u8() != 0;
    flag.heuristic = r.u8() != 0;
    flag.overridden = r.u8() != 0;
    flag.foreign = r.u8() != 0;
    corpus.flags.emplace(std::move(community), flag);
  }

  DropReport& d = corpus.drops;
  d.lines_read = r.i64();
  d.malformed = r.i64();
  d.deleted_author = r.i64();
  d.empty_body = r.i64();
  d.parsed = r.i64();
  d.non_top_level = r.i64();
  d.empty_after_tokenize = r.i64();
  d.bucketed = r.i64();
  return corpus;
}

void write_drop_report_csv(const DropReport& drops, const std::string& path,
                           const CsvMetadata& metadata) {
  CsvWriter csv(path, metadata, {"filter", "count"});
  auto row = [&](const char* name, std::int64_t count) {
    csv.field(name).field(count);
    csv.end_row();
  };
  row("lines_read", drops.lines_read);
  row("malformed", drops.malformed);
  row("deleted_author", drops.deleted_author);
  row("empty_body", drops.empty_body);
  row("parsed", drops.parsed);
  row("non_top_level", drops.non_top_level);
  row("empty_after_tokenize", drops.empty_after_tokenize);
  row("bucketed", drops.bucketed);
}

void write_foreign_flags_csv(const BucketedCorpus& corpus,
                             const std::string& path,
                             const CsvMetadata& metadata) {
  CsvWriter csv(path, metadata,
                {"community", "sample_tokens", "score", "scored", "heuristic",
                 "overridden", "foreign"});
  for (const auto& [community, flag] : corpus.flags) {
    csv.field(community)
        .field(flag.sample_tokens)
        .field(flag.score)
        .field(std::int64_t{flag.scored})
        .field(std::int64_t{flag.heuristic})
        .field(std::int64_t{flag.overridden})
        .field(std::int64_t{flag.foreign});
    csv.end_row();
  }
}

}  // namespace commscape
