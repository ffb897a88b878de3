#include "commscape/slm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "commscape/binio.hpp"
#include "commscape/errors.hpp"
#include "commscape/rng.hpp"

namespace commscape {

namespace {

constexpr double kEps = 1e-5;          // reserved unseen mass / add-eps
constexpr char kMagic[4] = {'C', 'S', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

GoodTuringResult good_turing_adjust(
    const std::map<std::int64_t, std::int64_t>& counts_of_counts,
    std::int64_t k) {
  GoodTuringResult out;

  std::vector<std::pair<std::int64_t, std::int64_t>> obs;
  std::int64_t total = 0;
  for (const auto& [r, nr] : counts_of_counts) {
    if (nr <= 0) continue;
    obs.emplace_back(r, nr);
    total += r * nr;
  }
  auto n_at = [&](std::int64_t r) -> std::int64_t {
    auto it = counts_of_counts.find(r);
    return it == counts_of_counts.end() ? 0 : std::max<std::int64_t>(
                                                  it->second, 0);
  };

  if (obs.empty() || n_at(1) == 0) {
    out.fallback = true;
    return out;
  }
  out.unseen_mass =
      static_cast<double>(n_at(1)) / static_cast<double>(total);

  // Averaging transform: Z_r spreads N_r over the gap to its neighbors so
  // sparse high counts fit a line.
  std::size_t m = obs.size();
  std::vector<double> logr(m), logz(m);
  for (std::size_t i = 0; i < m; ++i) {
    double r = static_cast<double>(obs[i].first);
    double q = i == 0 ? 0.0 : static_cast<double>(obs[i - 1].first);
    double t = i + 1 < m ? static_cast<double>(obs[i + 1].first) : 2.0 * r - q;
    double z = static_cast<double>(obs[i].second) / (0.5 * (t - q));
    logr[i] = std::log(r);
    logz[i] = std::log(z);
  }

  double b = -1.0;  // single-point spectra get the identity fit
  if (m >= 2) {
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      mean_x += logr[i];
      mean_y += logz[i];
    }
    mean_x /= static_cast<double>(m);
    mean_y /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      sxx += (logr[i] - mean_x) * (logr[i] - mean_x);
      sxy += (logr[i] - mean_x) * (logz[i] - mean_y);
    }
    b = sxy / sxx;
  }

  auto lgt = [&](std::int64_t r) {
    double dr = static_cast<double>(r);
    return dr * std::pow(1.0 + 1.0 / dr, b + 1.0);
  };

  bool use_lgt = false;
  for (const auto& [r, nr] : obs) {
    if (r > k) break;
    double estimate = 0.0;
    if (!use_lgt) {
      std::int64_t nr1 = n_at(r + 1);
      if (nr1 == 0) {
        use_lgt = true;
      } else {
        double dnr = static_cast<double>(nr);
        double dnr1 = static_cast<double>(nr1);
        double turing = static_cast<double>(r + 1) * dnr1 / dnr;
        double sd = std::sqrt(static_cast<double>((r + 1) * (r + 1)) *
                              (dnr1 / (dnr * dnr)) * (1.0 + dnr1 / dnr));
        if (std::fabs(turing - lgt(r)) <= 1.96 * sd) {
          use_lgt = true;
        } else {
          estimate = turing;
        }
      }
    }
    if (use_lgt) estimate = lgt(r);
    out.r_star[r] = estimate;
  }
  return out;
}

SnapshotLM SnapshotLM::train(const std::vector<Span>& spans,
                             std::size_t vocab_cap, std::int64_t gt_ceiling) {
  if (spans.empty()) throw DataError("cannot train a model on zero spans");

  // Vocabulary: top vocab_cap unigrams, ties lexicographic.
  std::map<std::string, std::int64_t> word_counts;
  for (const auto& span : spans) {
    for (const auto& t : span.tokens) ++word_counts[t];
  }
  std::vector<std::pair<std::int64_t, const std::string*>> by_freq;
  by_freq.reserve(word_counts.size());
  for (const auto& [w, c] : word_counts) by_freq.emplace_back(c, &w);
  std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });
  if (by_freq.size() > vocab_cap) by_freq.resize(vocab_cap);

  SnapshotLM model;
  model.vocab_.reserve(by_freq.size());
  for (const auto& [c, w] : by_freq) model.vocab_.push_back(*w);
  std::sort(model.vocab_.begin(), model.vocab_.end());
  for (std::uint32_t i = 0; i < model.vocab_.size(); ++i) {
    model.index_[model.vocab_[i]] = i;
  }
  const std::uint32_t unk = model.unk_id();
  const std::size_t n_ids = model.vocab_size();

  // Unigram and bigram counts over id-mapped spans.
  std::vector<std::int64_t> uc(n_ids, 0);
  std::int64_t total_tokens = 0;
  std::map<std::uint32_t, std::map<std::uint32_t, std::int64_t>> bc;
  for (const auto& span : spans) {
    std::uint32_t prev = 0;
    bool have_prev = false;
    for (const auto& t : span.tokens) {
      std::uint32_t id = model.word_id(t);
      ++uc[id];
      ++total_tokens;
      if (have_prev) ++bc[prev][id];
      prev = id;
      have_prev = true;
    }
  }

  // Unigram distribution. With no unknown occurrences the MLE gets an
  // epsilon of mass shifted to the unknown symbol; pure MLE otherwise.
  // Both forms depend only on relative frequencies.
  model.unigram_.assign(n_ids, 0.0);
  double dt = static_cast<double>(total_tokens);
  if (uc[unk] > 0) {
    for (std::size_t i = 0; i < n_ids; ++i) {
      model.unigram_[i] = static_cast<double>(uc[i]) / dt;
    }
  } else {
    for (std::size_t i = 0; i + 1 < n_ids; ++i) {
      model.unigram_[i] = static_cast<double>(uc[i]) / dt / (1.0 + kEps);
    }
    model.unigram_[unk] = kEps / (1.0 + kEps);
  }

  // Good-Turing discounts from the bigram count spectrum.
  std::map<std::int64_t, std::int64_t> spectrum;
  for (const auto& [w1, row] : bc) {
    for (const auto& [w2, c] : row) ++spectrum[c];
  }
  GoodTuringResult gt = good_turing_adjust(spectrum, gt_ceiling);
  model.gt_fallback_ = gt.fallback;

  double rnorm = 0.0;
  if (!gt.fallback) {
    auto nk1 = spectrum.find(gt_ceiling + 1);
    double n_k1 = nk1 == spectrum.end() ? 0.0
                                        : static_cast<double>(nk1->second);
    rnorm = static_cast<double>(gt_ceiling + 1) * n_k1 /
            static_cast<double>(spectrum.at(1));
  }
  auto discount = [&](std::int64_t r) {
    if (gt.fallback) return 1.0 - kEps;
    if (r > gt_ceiling) return 1.0;
    double d = (gt.r_star.at(r) / static_cast<double>(r) - rnorm) /
               (1.0 - rnorm);
    if (!(d > 0.0) || !(d < 1.0)) d = 1.0 - kEps;  // catches NaN too
    return d;
  };

  for (const auto& [w1, counts] : bc) {
    std::int64_t ctot = 0;
    for (const auto& [w2, c] : counts) ctot += c;
    double dctot = static_cast<double>(ctot);

    Row row;
    double seen_mass = 0.0;
    double seen_uni = 0.0;
    for (const auto& [w2, c] : counts) {
      double p = discount(c) * static_cast<double>(c) / dctot;
      row.probs[w2] = p;
      seen_mass += p;
      seen_uni += model.unigram_[w2];
    }

    double unseen_uni = 1.0 - seen_uni;
    if (unseen_uni <= 1e-12) {
      // Every symbol is a seen continuation; no mass left to back off to.
      for (auto& [w2, p] : row.probs) p /= seen_mass;
      row.alpha = 1.0;
    } else {
      double leftover = 1.0 - seen_mass;
      if (leftover < kEps) {
        // Reserve a minimum of unseen mass so backoff probabilities stay
        // positive regardless of the discount outcome.
        double scale = (1.0 - kEps) / seen_mass;
        for (auto& [w2, p] : row.probs) p *= scale;
        seen_mass = 1.0 - kEps;
        leftover = kEps;
      }
      double alpha = leftover / unseen_uni;
      if (alpha > 1.0) {
        alpha = 1.0;
        double scale = seen_uni / seen_mass;
        for (auto& [w2, p] : row.probs) p *= scale;
      }
      row.alpha = alpha;
    }
    model.rows_.emplace(w1, std::move(row));
  }
  return model;
}

SnapshotLM SnapshotLM::from_parts(std::vector<std::string> sorted_vocab,
                                  std::vector<double> unigram_probs,
                                  std::map<std::uint32_t, Row> rows) {
  SnapshotLM model;
  model.vocab_ = std::move(sorted_vocab);
  for (std::uint32_t i = 0; i < model.vocab_.size(); ++i) {
    model.index_[model.vocab_[i]] = i;
  }
  model.unigram_ = std::move(unigram_probs);
  model.rows_ = std::move(rows);
  return model;
}

std::uint32_t SnapshotLM::word_id(const std::string& w) const {
  auto it = index_.find(w);
  return it == index_.end() ? unk_id() : it->second;
}

double SnapshotLM::conditional(std::uint32_t w1, std::uint32_t w2) const {
  auto row = rows_.find(w1);
  if (row == rows_.end()) return unigram_[w2];
  auto seen = row->second.probs.find(w2);
  if (seen != row->second.probs.end()) return seen->second;
  return row->second.alpha * unigram_[w2];
}

double SnapshotLM::alpha(std::uint32_t w1) const {
  auto row = rows_.find(w1);
  return row == rows_.end() ? 1.0 : row->second.alpha;
}

std::optional<double> cross_entropy(const std::vector<std::string>& tokens,
                                    const SnapshotLM& model) {
  if (tokens.size() < 2) return std::nullopt;
  double floor = 1.0 / static_cast<double>(model.vocab_size() + 1);
  double sum = 0.0;
  std::uint32_t prev = model.word_id(tokens[0]);
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    std::uint32_t id = model.word_id(tokens[i]);
    double p = model.conditional(prev, id);
    sum += std::log2(std::max(p, floor));
    prev = id;
  }
  return -sum / static_cast<double>(tokens.size() - 1);
}

void SnapshotLM::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path);
  save(out);
  if (!out) throw IoError("write failed: " + path);
}

void SnapshotLM::save(std::ostream& out) const {
  ByteWriter w(out);
  out.write(kMagic, 4);
  w.u32(kVersion);
  w.str(manifest_.community_month.community);
  w.i32(manifest_.community_month.month);
  w.u64(manifest_.seed);
  w.u8(gt_fallback_ ? 1 : 0);

  w.u64(vocab_.size());
  for (const auto& word : vocab_) w.str(word);
  w.u64(unigram_.size());
  for (double p : unigram_) w.f64(p);

  w.u64(rows_.size());
  for (const auto& [w1, row] : rows_) {
    w.u32(w1);
    w.f64(row.alpha);
    w.u64(row.probs.size());
    for (const auto& [w2, p] : row.probs) {
      w.u32(w2);
      w.f64(p);
    }
  }

  w.u64(manifest_.users.size());
  for (const auto& u : manifest_.users) w.str(u);
  w.u64(manifest_.spans.size());
  for (const auto& s : manifest_.spans) {
    w.str(s.author);
    w.str(s.comment_id);
    w.u32(s.start);
  }
  if (!w.ok()) throw IoError("model serialization failed");
}

SnapshotLM SnapshotLM::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model artifact: " + path);
  return load(in);
}

SnapshotLM SnapshotLM::load(std::istream& in) {
  ByteReader r(in);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 ||
      std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw DataError("not a model artifact");
  }
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("unsupported model artifact version " +
                    std::to_string(version));
  }

  SnapshotLM model;
  model.manifest_.community_month.community = r.str();
  model.manifest_.community_month.month = r.i32();
  model.manifest_.seed = r.u64();
  model.gt_fallback_ = r.u8() != 0;

  std::uint64_t n_vocab = r.u64();
  model.vocab_.reserve(n_vocab);
  for (std::uint64_t i = 0; i < n_vocab; ++i) model.vocab_.push_back(r.str());
  for (std::uint32_t i = 0; i < model.vocab_.size(); ++i) {
    model.index_[model.vocab_[i]] = i;
  }
  std::uint64_t n_uni = r.u64();
  model.unigram_.reserve(n_uni);
  for (std::uint64_t i = 0; i < n_uni; ++i) model.unigram_.push_back(r.f64());

  std::uint64_t n_rows = r.u64();
  for (std::uint64_t i = 0; i < n_rows; ++i) {
    std::uint32_t w1 = r.u32();
    Row row;
    row.alpha = r.f64();
    std::uint64_t n_seen = r.u64();
    for (std::uint64_t j = 0; j < n_seen; ++j) {
      std::uint32_t w2 = r.u32();
      row.probs[w2] = r.f64();
    }
    model.rows_.emplace(w1, std::move(row));
  }

  std::uint64_t n_users = r.u64();
  model.manifest_.users.reserve(n_users);
  for (std::uint64_t i = 0; i < n_users; ++i) {
    model.manifest_.users.push_back(r.str());
  }
  std::uint64_t n_spans = r.u64();
  model.manifest_.spans.reserve(n_spans);
  for (std::uint64_t i = 0; i < n_spans; ++i) {
    SpanRef ref;
    ref.author = r.str();
    ref.comment_id = r.str();
    ref.start = r.u32();
    model.manifest_.spans.push_back(std::move(ref));
  }
  return model;
}

namespace {

// Qualifying users and their span-eligible comments, in deterministic
// (lexicographic) order.
struct SpanPool {
  std::vector<std::string> users;
  // per user: comments with >= span_len tokens, sorted by comment_id
  std::map<std::string, std::vector<const TokenizedUtterance*>> comments;
};

SpanPool build_span_pool(const std::vector<TokenizedUtterance>& bucket,
                         const SlmProtocol& proto) {
  std::map<std::string, std::int64_t> comment_counts;
  std::map<std::string, std::vector<const TokenizedUtterance*>> long_comments;
  for (const auto& u : bucket) {
    ++comment_counts[u.author];
    if (u.tokens.size() >= proto.span_len) {
      long_comments[u.author].push_back(&u);
    }
  }
  SpanPool pool;
  for (auto& [author, comments] : long_comments) {
    if (comment_counts[author] < proto.active_min) continue;
    if (comments.size() < proto.spans_per_user) continue;
    std::sort(comments.begin(), comments.end(),
              [](const TokenizedUtterance* a, const TokenizedUtterance* b) {
                return a->comment_id < b->comment_id;
              });
    pool.users.push_back(author);
    pool.comments.emplace(author, std::move(comments));
  }
  return pool;
}

// spans_per_user distinct comments, one uniformly placed window each.
void sample_user_spans(const SpanPool& pool, const std::string& user,
                       const SlmProtocol& proto, Rng* rng,
                       std::vector<Span>* out) {
  const auto& comments = pool.comments.at(user);
  std::vector<std::size_t> picks =
      rng->sample_indices(comments.size(), proto.spans_per_user);
  for (std::size_t idx : picks) {
    const TokenizedUtterance* u = comments[idx];
    std::size_t max_start = u->tokens.size() - proto.span_len;
    std::uint32_t start =
        max_start == 0 ? 0 : static_cast<std::uint32_t>(
                                 rng->below(max_start + 1));
    Span span;
    span.author = user;
    span.comment_id = u->comment_id;
    span.start = start;
    span.tokens.assign(u->tokens.begin() + start,
                       u->tokens.begin() + start + proto.span_len);
    out->push_back(std::move(span));
  }
}

}  // namespace

std::optional<SpanSample> sample_spans(
    const std::vector<TokenizedUtterance>& bucket, const SlmProtocol& proto,
    std::uint64_t seed) {
  SpanPool pool = build_span_pool(bucket, proto);
  if (pool.users.empty()) return std::nullopt;

  SpanSample sample;
  sample.pool_size = pool.users.size();
  Rng rng(seed);
  std::size_t take = std::min(proto.n_users, pool.users.size());
  sample.shortfall = take < proto.n_users;
  std::vector<std::size_t> picks = rng.sample_indices(pool.users.size(), take);
  for (std::size_t idx : picks) {
    const std::string& user = pool.users[idx];
    sample.users.push_back(user);
    sample_user_spans(pool, user, proto, &rng, &sample.spans);
  }
  return sample;
}

std::vector<SnapshotLM> bootstrap_slms(
    const std::vector<TokenizedUtterance>& bucket,
    const CommunityMonthKey& key, const SlmProtocol& proto,
    std::uint64_t seed) {
  SpanPool pool = build_span_pool(bucket, proto);
  std::vector<SnapshotLM> models;
  if (pool.users.empty()) return models;

  std::size_t draws = std::min(proto.n_users, pool.users.size());
  for (std::size_t rep = 0; rep < proto.n_models; ++rep) {
    std::uint64_t rep_seed =
        derive_seed(seed, {hash_bytes("slm-replicate"),
                           hash_bytes(key.community),
                           static_cast<std::uint64_t>(
                               static_cast<std::int64_t>(key.month)),
                           rep});
    Rng rng(rep_seed);
    std::vector<Span> spans;
    std::vector<std::string> users;
    for (std::size_t d = 0; d < draws; ++d) {
      const std::string& user = pool.users[rng.below(pool.users.size())];
      users.push_back(user);
      sample_user_spans(pool, user, proto, &rng, &spans);
    }
    SnapshotLM model = SnapshotLM::train(spans, proto.vocab_cap,
                                         proto.gt_ceiling);
    model.manifest().community_month = key;
    model.manifest().seed = rep_seed;
    model.manifest().users = std::move(users);
    for (const auto& span : spans) {
      model.manifest().spans.push_back({span.author, span.comment_id,
                                        span.start});
    }
    models.push_back(std::move(model));
  }
  return models;
}

}  // namespace commscape
