#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "commscape/comment.hpp"

namespace commscape {

// Fixed-length window cut from one comment.
struct Span {
  std::string author;
  std::string comment_id;
  std::uint32_t start = 0;  // token offset within the source comment
  std::vector<std::string> tokens;
};

struct GoodTuringResult {
  std::map<std::int64_t, double> r_star;  // adjusted counts, observed r <= k
  double unseen_mass = 0.0;               // N_1 / total observations
  bool fallback = false;                  // N_1 == 0: add-eps fallback
};

// Simple Good-Turing: Turing estimates (r+1)N_{r+1}/N_r while they differ
// significantly (1.96 sd) from the log-log linear fit of the smoothed
// spectrum, then the fitted estimates from the first insignificant r on.
GoodTuringResult good_turing_adjust(
    const std::map<std::int64_t, std::int64_t>& counts_of_counts,
    std::int64_t k = 5);

// Katz-backoff bigram model with Good-Turing discounting. Every row sums
// to 1 within 1e-6 and every probability is positive: each context keeps
// at least 1e-5 of its mass for unseen continuations.
class SnapshotLM {
 public:
  struct SpanRef {
    std::string author;
    std::string comment_id;
    std::uint32_t start = 0;
  };

  struct Manifest {
    CommunityMonthKey community_month;
    std::uint64_t seed = 0;
    std::vector<std::string> users;  // sampling order, with multiplicity
    std::vector<SpanRef> spans;
  };

  struct Row {
    std::map<std::uint32_t, double> probs;  // seen continuations
    double alpha = 1.0;                     // backoff weight
  };

  // vocab = top vocab_cap unigrams by frequency, ties lexicographic; all
  // other tokens map to the unknown symbol. Throws DataError on an empty
  // span list.
  static SnapshotLM train(const std::vector<Span>& spans,
                          std::size_t vocab_cap, std::int64_t gt_ceiling = 5);

  // Assembles a model directly; used by deserialization and by tests that
  // need models with prescribed probabilities.
  static SnapshotLM from_parts(std::vector<std::string> sorted_vocab,
                               std::vector<double> unigram_probs,
                               std::map<std::uint32_t, Row> rows);

  std::uint32_t word_id(const std::string& w) const;
  std::uint32_t unk_id() const {
    return static_cast<std::uint32_t>(vocab_.size());
  }
  // Symbol count including the unknown symbol.
  std::size_t vocab_size() const { return vocab_.size() + 1; }
  const std::vector<std::string>& vocab_words() const { return vocab_; }

  double unigram_prob(std::uint32_t id) const { return unigram_[id]; }
  double conditional(std::uint32_t w1, std::uint32_t w2) const;
  double alpha(std::uint32_t w1) const;
  bool has_context(std::uint32_t w1) const { return rows_.count(w1) > 0; }
  const std::map<std::uint32_t, Row>& rows() const { return rows_; }

  bool gt_fallback() const { return gt_fallback_; }
  Manifest& manifest() { return manifest_; }
  const Manifest& manifest() const { return manifest_; }

  void save(const std::string& path) const;
  void save(std::ostream& out) const;  // self-delimiting, concatenable
  static SnapshotLM load(const std::string& path);
  static SnapshotLM load(std::istream& in);

 private:
  SnapshotLM() = default;

  std::vector<std::string> vocab_;          // lexicographically sorted
  std::map<std::string, std::uint32_t> index_;
  std::vector<double> unigram_;             // size vocab_size()
  std::map<std::uint32_t, Row> rows_;
  bool gt_fallback_ = false;
  Manifest manifest_;
};

// Bits per bigram: H = -(1/|bigrams|) sum log2 P(b_i). Per-bigram
// probabilities are floored at 1/(vocab_size()+1) for scoring, which caps
// H at log2(vocab_size()+1). nullopt when fewer than 2 tokens.
std::optional<double> cross_entropy(const std::vector<std::string>& tokens,
                                    const SnapshotLM& model);

struct SlmProtocol {
  std::int64_t active_min = 5;      // comments per c_t to count as active
  std::size_t n_users = 200;
  std::size_t spans_per_user = 5;
  std::size_t span_len = 10;
  std::size_t n_models = 100;
  std::size_t vocab_cap = 50000;
  std::int64_t gt_ceiling = 5;
};

struct SpanSample {
  std::vector<Span> spans;
  std::vector<std::string> users;  // sampling order, with multiplicity
  std::size_t pool_size = 0;       // qualifying users available
  bool shortfall = false;          // pool smaller than requested
};

// Users with >= active_min comments in the bucket and >= spans_per_user
// comments of >= span_len tokens qualify. Samples without replacement;
// takes everyone (with a shortfall mark) when the pool is small. nullopt
// when no user qualifies.
std::optional<SpanSample> sample_spans(
    const std::vector<TokenizedUtterance>& bucket, const SlmProtocol& proto,
    std::uint64_t seed);

// One SLM per bootstrap resample (with replacement) of the qualifying-user
// pool; replicate seeds derive from the master seed. Empty when no user
// qualifies.
std::vector<SnapshotLM> bootstrap_slms(
    const std::vector<TokenizedUtterance>& bucket,
    const CommunityMonthKey& key, const SlmProtocol& proto,
    std::uint64_t seed);

}  // namespace commscape
