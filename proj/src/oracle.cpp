#include "commscape/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "commscape/errors.hpp"
#include "commscape/month.hpp"
#include "commscape/tokenize.hpp"

namespace commscape {

namespace {

struct OracleUtterance {
  std::string author;
  std::vector<std::string> tokens;
};

using MonthBuckets = std::map<MonthIndex, std::vector<OracleUtterance>>;

// counts[w] = number of distinct authors who used w at least once.
std::map<std::string, std::int64_t> author_dedup_counts(
    const std::vector<OracleUtterance>& utterances) {
  std::map<std::string, std::set<std::string>> users_of_word;
  for (const auto& u : utterances) {
    for (const auto& w : u.tokens) {
      users_of_word[w].insert(u.author);
    }
  }
  std::map<std::string, std::int64_t> counts;
  for (const auto& [word, users] : users_of_word) {
    counts[word] = static_cast<std::int64_t>(users.size());
  }
  return counts;
}

std::int64_t total_of(const std::map<std::string, std::int64_t>& counts) {
  std::int64_t total = 0;
  for (const auto& [w, n] : counts) total += n;
  return total;
}

void add_into(std::map<std::string, std::int64_t>* dst,
              const std::map<std::string, std::int64_t>& src) {
  for (const auto& [w, n] : src) (*dst)[w] += n;
}

std::set<std::string> percentile_vocab(
    const std::map<std::string, std::int64_t>& counts, int percentile) {
  std::set<std::string> vocab;
  if (counts.empty()) return vocab;
  std::vector<std::int64_t> sorted;
  sorted.reserve(counts.size());
  for (const auto& [w, n] : counts) sorted.push_back(n);
  std::sort(sorted.begin(), sorted.end());
  std::size_t rank = static_cast<std::size_t>(percentile) * sorted.size() / 100;
  if (rank >= sorted.size()) rank = sorted.size() - 1;
  std::int64_t threshold = sorted[rank];
  for (const auto& [w, n] : counts) {
    if (n >= threshold) vocab.insert(w);
  }
  return vocab;
}

}  // namespace

OracleMeasures brute_force_measures(const std::vector<CommentRecord>& records,
                                    const OracleOptions& opts) {
  // Bucket top-level comments by community and calendar month.
  std::map<std::string, MonthBuckets> comms;
  std::set<MonthIndex> all_months;
  std::set<std::string> all_words;
  for (const auto& rec : records) {
    bool top_level = rec.parent_id.empty() || rec.parent_id == rec.thread_id;
    if (!top_level) continue;
    std::vector<std::string> tokens = tokenize(rec.body);
    if (tokens.empty()) continue;
    MonthIndex t = month_index_from_epoch(rec.timestamp);
    all_months.insert(t);
    for (const auto& w : tokens) all_words.insert(w);
    comms[rec.community][t].push_back({rec.author, std::move(tokens)});
  }
  if (comms.size() > opts.max_communities) {
    throw DataError("oracle refuses corpora with more than " +
                    std::to_string(opts.max_communities) + " communities");
  }
  if (all_months.size() > opts.max_months) {
    throw DataError("oracle refuses corpora spanning more than " +
                    std::to_string(opts.max_months) + " months");
  }
  if (all_words.size() > opts.max_vocab) {
    throw DataError("oracle refuses corpora with more than " +
                    std::to_string(opts.max_vocab) + " distinct words");
  }

  // Author-deduplicated counts per community-month.
  std::map<CommunityMonthKey, std::map<std::string, std::int64_t>> month_counts;
  for (const auto& [name, months] : comms) {
    for (const auto& [t, utterances] : months) {
      month_counts[{name, t}] = author_dedup_counts(utterances);
    }
  }

  // Eligibility: vocabulary floor per month, month floor per community.
  std::set<CommunityMonthKey> eligible_months;
  std::set<std::string> eligible_comms;
  for (const auto& [key, counts] : month_counts) {
    if (static_cast<std::int64_t>(counts.size()) >= opts.vocab_min) {
      eligible_months.insert(key);
    }
  }
  for (const auto& [name, months] : comms) {
    int n = 0;
    for (const auto& [t, u] : months) {
      if (eligible_months.count({name, t})) ++n;
    }
    if (n >= opts.months_min) eligible_comms.insert(name);
  }

  // Background tables from the same deduplicated counts.
  std::map<std::string, std::map<std::string, std::int64_t>> history;
  std::map<MonthIndex, std::map<std::string, std::int64_t>> collection_month;
  std::map<std::string, std::int64_t> collection_pooled;
  for (const auto& [key, counts] : month_counts) {
    add_into(&history[key.community], counts);
    add_into(&collection_month[key.month], counts);
    add_into(&collection_pooled, counts);
  }

  OracleMeasures out;

  std::map<std::string, std::vector<std::pair<double, double>>> comm_points;
  for (const auto& [key, counts] : month_counts) {
    if (!eligible_comms.count(key.community)) continue;
    if (!eligible_months.count(key)) continue;

    std::set<std::string> scoring = percentile_vocab(counts, opts.percentile);
    const auto& hist = history.at(key.community);
    const auto& coll = opts.pooled_background ? collection_pooled
                                              : collection_month.at(key.month);
    std::int64_t n_month = total_of(counts);
    std::int64_t n_hist = total_of(hist);
    std::int64_t n_coll = total_of(coll);

    std::map<std::string, double>& spec = out.specificity[key];
    std::map<std::string, double>& vol = out.volatility[key];
    for (const auto& w : scoring) {
      double p_month = static_cast<double>(counts.at(w)) /
                       static_cast<double>(n_month);
      auto coll_it = coll.find(w);
      double p_coll = coll_it == coll.end()
                          ? 0.0
                          : static_cast<double>(coll_it->second) /
                                static_cast<double>(n_coll);
      double p_hist = static_cast<double>(hist.at(w)) /
                      static_cast<double>(n_hist);
      spec[w] = std::log2(p_month) - std::log2(p_coll);
      vol[w] = std::log2(p_month) - std::log2(p_hist);
    }

    // Per-occurrence mean over scoring-vocabulary tokens of each utterance.
    std::vector<std::pair<double, double>> utt_scores;
    for (const auto& u : comms.at(key.community).at(key.month)) {
      double s_sum = 0.0, v_sum = 0.0;
      std::int64_t n = 0;
      for (const auto& w : u.tokens) {
        auto it = spec.find(w);
        if (it == spec.end()) continue;
        s_sum += it->second;
        v_sum += vol.at(w);
        ++n;
      }
      if (n > 0) {
        utt_scores.push_back({s_sum / static_cast<double>(n),
                              v_sum / static_cast<double>(n)});
      }
    }
    if (static_cast<std::int64_t>(utt_scores.size()) < opts.min_scored) {
      continue;
    }
    double s_mean = 0.0, v_mean = 0.0;
    for (const auto& [s, v] : utt_scores) {
      s_mean += s;
      v_mean += v;
    }
    s_mean /= static_cast<double>(utt_scores.size());
    v_mean /= static_cast<double>(utt_scores.size());
    out.month_measures[key] = {s_mean, v_mean};
    comm_points[key.community].push_back({s_mean, v_mean});
  }

  for (const auto& [name, points] : comm_points) {
    double s = 0.0, v = 0.0;
    for (const auto& [ps, pv] : points) {
      s += ps;
      v += pv;
    }
    out.community_measures[name] = {s / static_cast<double>(points.size()),
                                    v / static_cast<double>(points.size())};
  }

  // Retention over all communities, from the same top-level buckets.
  MonthIndex horizon_last = all_months.empty() ? 0 : *all_months.rbegin();
  for (const auto& [name, months] : comms) {
    for (const auto& [t, utterances] : months) {
      if (t + 1 > horizon_last) continue;
      std::set<std::string> now;
      for (const auto& u : utterances) now.insert(u.author);
      if (now.empty()) continue;
      std::set<std::string> next;
      auto it = months.find(t + 1);
      if (it != months.end()) {
        for (const auto& u : it->second) next.insert(u.author);
      }
      std::int64_t both = 0;
      for (const auto& a : now) both += next.count(a) ? 1 : 0;
      out.retention[{name, t}] =
          static_cast<double>(both) / static_cast<double>(now.size());
    }
  }
  return out;
}

}  // namespace commscape
