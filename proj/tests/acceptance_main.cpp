// Acceptance harness: one line per criterion, pass or FAIL, exit 0 only
// when every criterion holds. Each criterion rebuilds its own inputs from
// seeded generators so a run is reproducible end to end.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commscape/config.hpp"
#include "commscape/counts.hpp"
#include "commscape/engagement.hpp"
#include "commscape/errors.hpp"
#include "commscape/forest.hpp"
#include "commscape/ingest.hpp"
#include "commscape/jsonl.hpp"
#include "commscape/month.hpp"
#include "commscape/oracle.hpp"
#include "commscape/rng.hpp"
#include "commscape/slm.hpp"
#include "commscape/stats.hpp"
#include "commscape/synth.hpp"
#include "commscape/typology.hpp"
#include "test_util.hpp"

using namespace commscape;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

struct PipelineOut {
  BucketedCorpus corpus;
  CorpusTables tables;
  std::map<std::string, CommunityProfile> profiles;
};

PipelineOut run_pipeline(const std::string& jsonl,
                         const EligibilityThresholds& thr,
                         const TypologyOptions& topts) {
  ParseStats stats;
  auto records = parse_comment_buffer(jsonl, &stats);
  PipelineOut out;
  IngestOptions iopts;  // empty stoplist: language screen disabled
  out.corpus = ingest_records(records, stats, iopts);
  out.tables = build_tables(out.corpus, thr);
  out.profiles = build_profiles(out.corpus, out.tables, topts);
  return out;
}

// ---------------------------------------------------------------------------
// 1. Oracle equivalence on 20 seeded corpora.

Outcome criterion_oracle_equivalence() {
  double max_dev = 0.0;
  double slowest = 0.0;
  int compared_values = 0;

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto start = Clock::now();
    Rng shape(derive_seed(seed, {hash_bytes("accept-oracle-shape")}));
    int n_comms = 2 + static_cast<int>(shape.below(4));  // 2..5 planted
    SynthSpec spec = default_synth_spec(n_comms, seed);
    spec.n_months = 4 + static_cast<int>(shape.below(4));  // 4..7
    spec.users_per_community = 10 + static_cast<int>(shape.below(11));
    spec.comments_per_user = 3 + static_cast<int>(shape.below(3));
    spec.comment_len = 12 + static_cast<int>(shape.below(9));
    spec.background_vocab = 150 + static_cast<int>(shape.below(100));
    spec.niche_vocab = 8;
    spec.fad_vocab = 6;
    spec.outsiders_per_month = static_cast<int>(shape.below(3));

    ParseStats stats;
    auto records = parse_comment_buffer(generate_corpus(spec), &stats);

    OracleOptions oopts;
    oopts.vocab_min = 50;
    oopts.months_min = 3;
    oopts.percentile = 90;
    oopts.min_scored = 15;
    auto oracle = brute_force_measures(records, oopts);
    if (oracle.community_measures.empty()) {
      return {false, fmt("seed %llu produced no eligible community",
                         (unsigned long long)seed)};
    }

    EligibilityThresholds thr;
    thr.vocab_min = 50;
    thr.months_min = 3;
    thr.percentile = 90;
    TypologyOptions topts;
    topts.min_scored = 15;
    auto p = run_pipeline(generate_corpus(spec), thr, topts);

    auto check = [&](double got, double want, const char* what,
                     const CommunityMonthKey* key) -> std::optional<Outcome> {
      double dev = std::fabs(got - want);
      max_dev = std::max(max_dev, dev);
      ++compared_values;
      if (dev > 1e-9) {
        std::string where =
            key ? key->community + "@" + month_label(key->month) : "";
        return Outcome{false, fmt("seed %llu %s %s differs by %.3e",
                                  (unsigned long long)seed, what,
                                  where.c_str(), dev)};
      }
      return std::nullopt;
    };

    for (const auto& [key, words] : oracle.specificity) {
      auto scores = score_words(p.tables, key, BackgroundMode::month_matched);
      if (scores.specificity.size() != words.size()) {
        return {false, fmt("seed %llu scoring vocab size mismatch at %s@%s",
                           (unsigned long long)seed, key.community.c_str(),
                           month_label(key.month).c_str())};
      }
      for (const auto& [w, s] : words) {
        auto it = scores.specificity.find(w);
        if (it == scores.specificity.end()) {
          return {false, fmt("seed %llu word missing from pipeline scores",
                             (unsigned long long)seed)};
        }
        if (auto bad = check(it->second, s, "specificity", &key)) return *bad;
        if (auto bad = check(scores.volatility.at(w),
                             oracle.volatility.at(key).at(w), "volatility",
                             &key)) {
          return *bad;
        }
      }
    }

    if (p.profiles.size() != oracle.community_measures.size()) {
      return {false, fmt("seed %llu community count %zu vs oracle %zu",
                         (unsigned long long)seed, p.profiles.size(),
                         oracle.community_measures.size())};
    }
    for (const auto& [name, want] : oracle.community_measures) {
      auto it = p.profiles.find(name);
      if (it == p.profiles.end()) {
        return {false, fmt("seed %llu community %s missing from pipeline",
                           (unsigned long long)seed, name.c_str())};
      }
      if (auto bad = check(it->second.distinctiveness, want.first,
                           "community distinctiveness", nullptr)) {
        return *bad;
      }
      if (auto bad = check(it->second.dynamicity, want.second,
                           "community dynamicity", nullptr)) {
        return *bad;
      }
    }
    for (const auto& [key, want] : oracle.month_measures) {
      const auto& per_month = p.profiles.at(key.community).per_month;
      auto it = per_month.find(key.month);
      if (it == per_month.end()) {
        return {false, fmt("seed %llu month missing from profile",
                           (unsigned long long)seed)};
      }
      if (auto bad = check(it->second.distinctiveness, want.first,
                           "month distinctiveness", &key)) {
        return *bad;
      }
      if (auto bad = check(it->second.dynamicity, want.second,
                           "month dynamicity", &key)) {
        return *bad;
      }
    }

    auto idx = ActivityIndex::build(p.corpus);
    for (const auto& [key, want] : oracle.retention) {
      auto r = monthly_retention(idx, key.community, key.month);
      if (!r) {
        return {false, fmt("seed %llu retention undefined at %s@%s",
                           (unsigned long long)seed, key.community.c_str(),
                           month_label(key.month).c_str())};
      }
      if (auto bad = check(*r, want, "retention", &key)) return *bad;
    }

    double took = seconds_since(start);
    slowest = std::max(slowest, took);
    if (took > 60.0) {
      return {false, fmt("seed %llu took %.1fs (budget 60s)",
                         (unsigned long long)seed, took)};
    }
  }
  return {true, fmt("20 corpora, %d values, max deviation %.2e, slowest "
                    "corpus %.2fs",
                    compared_values, max_dev, slowest)};
}

// ---------------------------------------------------------------------------
// 2. Identity cases: background and history ratios collapse to exact zeros.

Outcome criterion_identity_cases() {
  // One community, fixed roster, every month repeats the same comments.
  std::ostringstream corpus;
  const char* words[] = {"apple",  "berry",  "carrot", "daisy",  "ember",
                         "fennel", "ginger", "honey",  "indigo", "juniper",
                         "kale",   "lemon",  "mango",  "nutmeg", "olive",
                         "pepper", "quince", "radish", "sage",   "thyme",
                         "umber",  "violet", "walnut", "xenon",  "yarrow",
                         "zinnia", "basil",  "clove",  "dill",   "elder",
                         "fig",    "grape",  "hazel",  "iris",   "jade",
                         "kiwi",   "lotus",  "maple",  "nettle", "oak"};
  const int n_words = 40;
  MonthIndex first = month_index_from_label("2013-01");
  std::int64_t serial = 0;
  for (int t = 0; t < 5; ++t) {
    std::int64_t base = month_start_epoch(first + t);
    for (int u = 0; u < 30; ++u) {
      for (int k = 0; k < 3; ++k) {
        std::string body;
        for (int i = 0; i < 8; ++i) {
          if (i) body += ' ';
          body += words[(u * 5 + k * 11 + i * 3) % n_words];
        }
        char line[512];
        std::snprintf(line, sizeof(line),
                      "{\"id\":\"c%lld\",\"author\":\"u%d\","
                      "\"subreddit\":\"solo\",\"created_utc\":%lld,"
                      "\"parent_id\":\"t3_r\",\"link_id\":\"t3_r\","
                      "\"body\":\"%s\"}\n",
                      (long long)serial++, u, (long long)(base + 100 + k),
                      body.c_str());
        corpus << line;
      }
    }
  }

  EligibilityThresholds thr;
  thr.vocab_min = 20;
  thr.months_min = 4;
  thr.percentile = 50;
  TypologyOptions topts;
  topts.min_scored = 10;
  topts.background = BackgroundMode::pooled;
  auto p = run_pipeline(corpus.str(), thr, topts);

  if (p.profiles.size() != 1 || p.profiles.count("solo") == 0) {
    return {false, "expected exactly one profiled community"};
  }
  int scored_words = 0;
  for (const auto& key : p.tables.eligible_months) {
    auto scores = score_words(p.tables, key, BackgroundMode::pooled);
    if (scores.specificity.empty()) {
      return {false, "empty scoring vocabulary in an eligible month"};
    }
    for (const auto& [w, s] : scores.specificity) {
      ++scored_words;
      if (s != 0.0) {
        return {false, fmt("pooled specificity of %s at %s is %.17g, not 0",
                           w.c_str(), month_label(key.month).c_str(), s)};
      }
      double v = scores.volatility.at(w);
      if (std::fabs(v) > 1e-9) {
        return {false, fmt("volatility of uniform word %s is %.17g",
                           w.c_str(), v)};
      }
    }
  }
  const auto& prof = p.profiles.at("solo");
  if (prof.distinctiveness != 0.0 || prof.dynamicity != 0.0) {
    return {false, fmt("profile measures (%.3e, %.3e) are not exact zeros",
                       prof.distinctiveness, prof.dynamicity)};
  }
  if (static_cast<int>(prof.per_month.size()) != 5) {
    return {false, fmt("expected 5 included months, got %zu",
                       prof.per_month.size())};
  }
  return {true, fmt("%d word scores exactly 0 across %zu months",
                    scored_words, prof.per_month.size())};
}

// ---------------------------------------------------------------------------
// 3. LM soundness on 100 random training sets plus the golden fixture.

Outcome criterion_lm_soundness() {
  Rng rng(30303);
  int rows_checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t vocab = 3 + rng.below(38);
    std::size_t n_spans = 2 + rng.below(50);
    std::vector<Span> spans;
    for (std::size_t s = 0; s < n_spans; ++s) {
      Span span;
      span.author = "u" + std::to_string(rng.below(12));
      span.comment_id = "c" + std::to_string(s);
      std::size_t len = 6 + rng.below(9);
      std::uint64_t prev = rng.below(vocab);
      for (std::size_t i = 0; i < len; ++i) {
        // Repetition bias creates real bigram structure.
        std::uint64_t w = rng.unit() < 0.4 ? prev : rng.below(vocab);
        span.tokens.push_back("w" + std::to_string(w));
        prev = w;
      }
      spans.push_back(std::move(span));
    }
    std::size_t cap = 1 + rng.below(vocab + 5);
    SnapshotLM model = SnapshotLM::train(spans, cap, 5);

    double uni_sum = 0.0;
    for (std::uint32_t id = 0; id < model.vocab_size(); ++id) {
      double u = model.unigram_prob(id);
      if (!(u > 0.0) || !std::isfinite(u)) {
        return {false, fmt("trial %d: unigram prob %g not positive", trial, u)};
      }
      uni_sum += u;
    }
    if (std::fabs(uni_sum - 1.0) > 1e-6) {
      return {false, fmt("trial %d: unigram mass %.12f", trial, uni_sum)};
    }

    for (const auto& [w1, row] : model.rows()) {
      double total = 0.0;
      for (std::uint32_t w2 = 0; w2 < model.vocab_size(); ++w2) {
        total += model.conditional(w1, w2);
      }
      if (std::fabs(total - 1.0) > 1e-6) {
        return {false,
                fmt("trial %d: row %u sums to %.12f", trial, w1, total)};
      }
      double a = model.alpha(w1);
      if (!(a > 0.0) || a > 1.0) {
        return {false, fmt("trial %d: alpha %.12f out of (0,1]", trial, a)};
      }
      ++rows_checked;
    }

    double bound =
        std::log2(static_cast<double>(model.vocab_size()) + 1.0) + 1e-6;
    for (int probe = 0; probe < 5; ++probe) {
      std::vector<std::string> text;
      for (int i = 0; i < 8; ++i) {
        text.push_back("w" + std::to_string(rng.below(vocab + 3)));
      }
      auto h = cross_entropy(text, model);
      if (!h) return {false, fmt("trial %d: probe not scorable", trial)};
      if (*h < 0.0 || *h > bound) {
        return {false, fmt("trial %d: entropy %.6f outside [0, %.6f]", trial,
                           *h, bound)};
      }
    }
  }

  // Golden fixture, exact equality.
  std::ifstream in(testutil::data_path("gt_golden.txt"));
  if (!in.good()) return {false, "gt_golden.txt not readable"};
  std::string line;
  int n_cases = 0;
  std::map<std::int64_t, std::int64_t> spectrum;
  std::int64_t k = 5;
  double unseen = 0.0;
  std::map<std::int64_t, double> expected;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "case") {
      spectrum.clear();
      expected.clear();
    } else if (word == "spectrum") {
      std::string pair;
      while (ls >> pair) {
        auto colon = pair.find(':');
        spectrum[std::stoll(pair.substr(0, colon))] =
            std::stoll(pair.substr(colon + 1));
      }
    } else if (word == "k") {
      ls >> k;
    } else if (word == "unseen") {
      ls >> unseen;
    } else if (word == "rstar") {
      std::int64_t r;
      double v;
      ls >> r >> v;
      expected[r] = v;
    } else if (word == "end") {
      ++n_cases;
      auto gt = good_turing_adjust(spectrum, k);
      if (gt.fallback) {
        return {false, fmt("golden case %d hit the fallback", n_cases)};
      }
      if (gt.unseen_mass != unseen) {
        return {false, fmt("golden case %d unseen mass %.17g != %.17g",
                           n_cases, gt.unseen_mass, unseen)};
      }
      if (gt.r_star.size() != expected.size()) {
        return {false, fmt("golden case %d row count mismatch", n_cases)};
      }
      for (const auto& [r, v] : expected) {
        if (!gt.r_star.count(r) || gt.r_star.at(r) != v) {
          return {false,
                  fmt("golden case %d r=%lld mismatch", n_cases, (long long)r)};
        }
      }
    }
  }
  if (n_cases != 4) return {false, fmt("expected 4 golden cases, saw %d",
                                       n_cases)};
  return {true, fmt("100 training sets, %d rows checked; 4 golden cases "
                    "matched exactly",
                    rows_checked)};
}

// ---------------------------------------------------------------------------
// 4. Acculturation gap: null within 0.02, planted signal above zero.

struct GapRun {
  AcculturationResult result;
  std::string error;
};

GapRun run_acculturation(double outsider_affinity, std::uint64_t seed) {
  GapRun out;
  SynthSpec spec;
  SynthCommunity c;
  c.name = "c0";
  c.niche_weight = 0.3;
  c.fad_weight = 0.05;
  c.return_prob = 0.7;
  c.outsider_niche_affinity = outsider_affinity;
  spec.communities = {c};
  spec.n_months = 4;
  spec.users_per_community = 60;
  spec.comments_per_user = 12;
  spec.comment_len = 30;
  spec.background_vocab = 250;
  spec.niche_vocab = 25;
  spec.fad_vocab = 15;
  spec.outsiders_per_month = 60;
  spec.seed = seed;

  ParseStats stats;
  auto records = parse_comment_buffer(generate_corpus(spec), &stats);
  IngestOptions iopts;
  auto corpus = ingest_records(records, stats, iopts);

  CommunityMonthKey key{"c0", month_index_from_label("2013-02")};
  auto bucket_it = corpus.buckets.find(key);
  if (bucket_it == corpus.buckets.end()) {
    out.error = "target month missing";
    return out;
  }
  auto idx = ActivityIndex::build(corpus);
  auto cohorts = identify_cohorts(idx, key, 5);
  if (cohorts.active.size() < 50 || cohorts.outsiders.size() < 50) {
    out.error = fmt("cohorts too small: %zu active, %zu outsiders",
                    cohorts.active.size(), cohorts.outsiders.size());
    return out;
  }

  SlmProtocol proto;
  proto.n_users = 40;  // below the pool size: evaluation users stay held out
  proto.spans_per_user = 5;
  proto.span_len = 10;
  proto.n_models = 100;
  auto slms = bootstrap_slms(bucket_it->second, key, proto,
                             derive_seed(seed, {hash_bytes("accept-slm")}));
  if (slms.size() != 100) {
    out.error = fmt("expected 100 models, got %zu", slms.size());
    return out;
  }

  AcculturationProtocol aproto;  // 5 users x 10 comments vs 50 spans
  out.result = acculturation_gap(bucket_it->second, key, cohorts, slms, aproto,
                                 derive_seed(seed, {hash_bytes("accept-gap")}));
  if (!out.result.defined) out.error = out.result.skip_reason;
  return out;
}

Outcome criterion_acculturation() {
  auto start = Clock::now();
  auto null_run = run_acculturation(1.0, 4242);
  if (!null_run.error.empty()) {
    return {false, "null corpus: " + null_run.error};
  }
  if (std::fabs(null_run.result.gap) >= 0.02) {
    return {false, fmt("null gap %.5f not under 0.02", null_run.result.gap)};
  }

  auto signal_run = run_acculturation(0.0, 4243);
  if (!signal_run.error.empty()) {
    return {false, "signal corpus: " + signal_run.error};
  }
  if (!(signal_run.result.gap > 0.0)) {
    return {false, fmt("planted gap %.5f not positive", signal_run.result.gap)};
  }
  if (!(signal_run.result.ci_lo > 0.0)) {
    return {false, fmt("planted gap CI [%.5f, %.5f] does not exclude 0",
                       signal_run.result.ci_lo, signal_run.result.ci_hi)};
  }
  double took = seconds_since(start);
  if (took > 300.0) {
    return {false, fmt("took %.1fs (budget 300s)", took)};
  }
  return {true, fmt("null gap %.4f, planted gap %.4f with CI [%.4f, %.4f], "
                    "%.1fs",
                    null_run.result.gap, signal_run.result.gap,
                    signal_run.result.ci_lo, signal_run.result.ci_hi, took)};
}

// ---------------------------------------------------------------------------
// 5. Planted-structure recovery over 100 seeds.

Outcome criterion_planted_recovery() {
  EligibilityThresholds thr;
  thr.vocab_min = 80;
  thr.months_min = 4;
  thr.percentile = 75;
  TypologyOptions topts;
  topts.min_scored = 20;

  auto family = [&](bool vary_niche, std::uint64_t seed0, int n_seeds,
                    std::vector<double>* knob, std::vector<double>* measured,
                    std::string* err) {
    for (int s = 0; s < n_seeds; ++s) {
      SynthSpec spec;
      for (int i = 0; i < 6; ++i) {
        SynthCommunity c;
        c.name = "p" + std::to_string(i);
        double ramp = static_cast<double>(i) / 5.0;
        c.niche_weight = vary_niche ? 0.05 + 0.40 * ramp : 0.15;
        c.fad_weight = vary_niche ? 0.10 : 0.05 + 0.35 * ramp;
        c.return_prob = 0.6;
        spec.communities.push_back(c);
      }
      spec.n_months = 6;
      spec.users_per_community = 25;
      spec.comments_per_user = 4;
      spec.comment_len = 20;
      spec.background_vocab = 300;
      spec.niche_vocab = 25;
      spec.fad_vocab = 20;
      spec.seed = seed0 + static_cast<std::uint64_t>(s);

      auto p = run_pipeline(generate_corpus(spec), thr, topts);
      for (const auto& comm : spec.communities) {
        auto it = p.profiles.find(comm.name);
        if (it == p.profiles.end()) {
          *err = fmt("seed %llu: community %s not profiled",
                     (unsigned long long)spec.seed, comm.name.c_str());
          return false;
        }
        knob->push_back(vary_niche ? comm.niche_weight : comm.fad_weight);
        measured->push_back(vary_niche ? it->second.distinctiveness
                                       : it->second.dynamicity);
      }
    }
    return true;
  };

  std::string err;
  std::vector<double> niche_knob, niche_measured;
  if (!family(true, 9000, 50, &niche_knob, &niche_measured, &err)) {
    return {false, err};
  }
  std::vector<double> fad_knob, fad_measured;
  if (!family(false, 9500, 50, &fad_knob, &fad_measured, &err)) {
    return {false, err};
  }

  auto rho_niche = spearman(niche_knob, niche_measured);
  auto rho_fad = spearman(fad_knob, fad_measured);
  if (!rho_niche || !rho_fad) {
    return {false, "correlation undefined on pooled pairs"};
  }
  if (rho_niche->statistic < 0.9) {
    return {false, fmt("niche recovery rho %.4f below 0.9 (%zu pairs)",
                       rho_niche->statistic, niche_knob.size())};
  }
  if (rho_fad->statistic < 0.9) {
    return {false, fmt("fad recovery rho %.4f below 0.9 (%zu pairs)",
                       rho_fad->statistic, fad_knob.size())};
  }
  return {true, fmt("rho(niche, measured)=%.4f, rho(fad, measured)=%.4f over "
                    "100 seeds (%zu pairs each)",
                    rho_niche->statistic, rho_fad->statistic,
                    niche_knob.size())};
}

// ---------------------------------------------------------------------------
// 6. Directional engagement at 50 communities.

Outcome criterion_directional_engagement() {
  SynthSpec spec;
  for (int i = 0; i < 50; ++i) {
    SynthCommunity c;
    char name[16];
    std::snprintf(name, sizeof(name), "e%02d", i);
    c.name = name;
    double ramp = static_cast<double>(i) / 49.0;
    c.niche_weight = 0.15;
    c.fad_weight = 0.05 + 0.35 * ramp;
    c.return_prob = 0.30 + 0.50 * ramp;  // returns rise with the fad knob
    spec.communities.push_back(c);
  }
  spec.n_months = 6;
  spec.users_per_community = 15;
  spec.comments_per_user = 4;
  spec.comment_len = 18;
  spec.background_vocab = 300;
  spec.niche_vocab = 20;
  spec.fad_vocab = 20;
  spec.seed = 606;

  EligibilityThresholds thr;
  thr.vocab_min = 80;
  thr.months_min = 4;
  thr.percentile = 75;
  TypologyOptions topts;
  topts.min_scored = 20;
  auto p = run_pipeline(generate_corpus(spec), thr, topts);

  auto idx = ActivityIndex::build(p.corpus);
  std::vector<double> dynamicity, retention;
  for (const auto& comm : spec.communities) {
    auto it = p.profiles.find(comm.name);
    if (it == p.profiles.end()) {
      return {false, fmt("community %s not profiled", comm.name.c_str())};
    }
    double sum = 0.0;
    int n = 0;
    for (const auto& [month, mm] : it->second.per_month) {
      auto r = monthly_retention(idx, comm.name, month);
      if (r) {
        sum += *r;
        ++n;
      }
    }
    if (n == 0) {
      return {false, fmt("no retention months for %s", comm.name.c_str())};
    }
    dynamicity.push_back(it->second.dynamicity);
    retention.push_back(sum / n);
  }

  auto rho = spearman(dynamicity, retention);
  if (!rho) return {false, "correlation undefined"};
  if (!(rho->statistic > 0.0)) {
    return {false, fmt("rho %.4f not positive", rho->statistic)};
  }
  if (!(rho->p_value < 0.01)) {
    return {false, fmt("rho %.4f with p %.4g not significant at 0.01",
                       rho->statistic, rho->p_value)};
  }
  return {true, fmt("rho(dynamicity, retention)=%.4f, p=%.3g over 50 "
                    "communities",
                    rho->statistic, rho->p_value)};
}

// ---------------------------------------------------------------------------
// 7. Prediction harness: skill, no false skill, and feature synergy.

Outcome criterion_prediction() {
  ForestOptions opts;
  opts.n_trees = 100;

  // Identity-driven target: loco folds must recover it.
  std::vector<FeatureRow> identity_rows;
  {
    Rng rng(7100);
    for (int i = 0; i < 100; ++i) {
      FeatureRow r;
      r.community = "i" + std::to_string(i);
      r.distinctiveness = rng.unit();
      r.dynamicity = rng.unit();
      r.log_users = rng.unit() * 4.0;
      r.log_activity = rng.unit();
      r.target = 0.25 + 0.35 * r.distinctiveness + 0.25 * r.dynamicity;
      identity_rows.push_back(r);
    }
  }
  auto cv_identity = loco_cv(identity_rows, FeatureSet::identity, opts, 71);
  if (cv_identity.r2 < 0.9) {
    return {false, fmt("identity R2 %.4f below 0.9", cv_identity.r2)};
  }

  // Pure noise: no skill may be reported.
  std::vector<FeatureRow> noise_rows;
  {
    Rng rng(7200);
    for (int i = 0; i < 200; ++i) {
      FeatureRow r;
      r.community = "n" + std::to_string(i);
      r.distinctiveness = rng.unit();
      r.dynamicity = rng.unit();
      r.log_users = rng.unit() * 4.0;
      r.log_activity = rng.unit();
      r.target = rng.unit();
      noise_rows.push_back(r);
    }
  }
  auto cv_noise = loco_cv(noise_rows, FeatureSet::combined, opts, 72);
  if (std::fabs(cv_noise.r2) >= 0.15) {
    return {false, fmt("noise |R2| %.4f not under 0.15", cv_noise.r2)};
  }

  // Two independent signals: the combined model must beat both singles.
  std::vector<FeatureRow> dual_rows;
  {
    Rng rng(7300);
    for (int i = 0; i < 100; ++i) {
      FeatureRow r;
      r.community = "d" + std::to_string(i);
      r.distinctiveness = rng.unit();
      r.dynamicity = rng.unit();
      r.log_users = rng.unit() * 4.0;
      r.log_activity = rng.unit();
      r.target = 0.2 + 0.30 * r.distinctiveness + 0.25 * (r.log_users / 4.0) +
                 0.02 * rng.unit();
      dual_rows.push_back(r);
    }
  }
  auto cv_id = loco_cv(dual_rows, FeatureSet::identity, opts, 73);
  auto cv_act = loco_cv(dual_rows, FeatureSet::activity, opts, 73);
  auto cv_both = loco_cv(dual_rows, FeatureSet::combined, opts, 73);
  if (!(cv_both.mse < cv_id.mse) || !(cv_both.mse < cv_act.mse)) {
    return {false, fmt("combined MSE %.5f not below singles (%.5f, %.5f)",
                       cv_both.mse, cv_id.mse, cv_act.mse)};
  }
  auto w_id = wilcoxon_signed_rank(cv_id.squared_errors,
                                   cv_both.squared_errors);
  auto w_act = wilcoxon_signed_rank(cv_act.squared_errors,
                                    cv_both.squared_errors);
  if (!w_id || !w_act) return {false, "paired test undefined"};
  if (!(w_id->p_value < 0.05) || !(w_act->p_value < 0.05)) {
    return {false, fmt("improvement not significant: p=%.4g vs identity, "
                       "p=%.4g vs activity",
                       w_id->p_value, w_act->p_value)};
  }
  return {true, fmt("identity R2=%.3f, noise R2=%.3f, combined MSE %.5f < "
                    "(%.5f, %.5f), p=(%.2g, %.2g)",
                    cv_identity.r2, cv_noise.r2, cv_both.mse, cv_id.mse,
                    cv_act.mse, w_id->p_value, w_act->p_value)};
}

// ---------------------------------------------------------------------------
// 8. Statistical kernels vs exact enumeration on fixtures up to n = 10.

std::vector<double> enum_ranks(const std::vector<double>& v) {
  std::size_t n = v.size();
  std::vector<double> ranks(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (v[j] < v[i]) ++below;
      if (v[j] == v[i]) ++equal;
    }
    ranks[i] = below + (equal + 1.0) / 2.0;
  }
  return ranks;
}

double enum_pearson(const std::vector<double>& x,
                    const std::vector<double>& y) {
  std::size_t n = x.size();
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double enum_spearman_p(const std::vector<double>& x,
                       const std::vector<double>& y) {
  auto rx = enum_ranks(x);
  auto ry = enum_ranks(y);
  double observed = std::fabs(enum_pearson(rx, ry));
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::int64_t total = 0, extreme = 0;
  std::vector<double> permuted(y.size());
  do {
    for (std::size_t i = 0; i < order.size(); ++i) permuted[i] = ry[order[i]];
    ++total;
    if (std::fabs(enum_pearson(rx, permuted)) >= observed - 1e-9) ++extreme;
  } while (std::next_permutation(order.begin(), order.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

double enum_mann_whitney_p(const std::vector<double>& a,
                           const std::vector<double>& b) {
  std::size_t m = a.size(), n = b.size();
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  auto ranks = enum_ranks(pooled);
  double ra = 0.0;
  for (std::size_t i = 0; i < m; ++i) ra += ranks[i];
  double u_obs = ra - static_cast<double>(m) * (m + 1) / 2.0;
  std::vector<int> mask(m, 1);
  mask.resize(m + n, 0);
  std::sort(mask.begin(), mask.end());
  std::int64_t count = 0, le = 0, ge = 0;
  do {
    double rsum = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) rsum += ranks[i];
    }
    double u = rsum - static_cast<double>(m) * (m + 1) / 2.0;
    ++count;
    if (u <= u_obs + 1e-9) ++le;
    if (u >= u_obs - 1e-9) ++ge;
  } while (std::next_permutation(mask.begin(), mask.end()));
  double p_le = static_cast<double>(le) / static_cast<double>(count);
  double p_ge = static_cast<double>(ge) / static_cast<double>(count);
  return std::min(1.0, 2.0 * std::min(p_le, p_ge));
}

double enum_wilcoxon_p(const std::vector<double>& diffs) {
  std::size_t n = diffs.size();
  std::vector<double> mags(n);
  for (std::size_t i = 0; i < n; ++i) mags[i] = std::fabs(diffs[i]);
  auto ranks = enum_ranks(mags);
  double w_obs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0.0) w_obs += ranks[i];
  }
  std::int64_t total = std::int64_t{1} << n;
  std::int64_t le = 0, ge = 0;
  for (std::int64_t mask = 0; mask < total; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::int64_t{1} << i)) w += ranks[i];
    }
    if (w <= w_obs + 1e-9) ++le;
    if (w >= w_obs - 1e-9) ++ge;
  }
  double p_le = static_cast<double>(le) / static_cast<double>(total);
  double p_ge = static_cast<double>(ge) / static_cast<double>(total);
  return std::min(1.0, 2.0 * std::min(p_le, p_ge));
}

Outcome criterion_stat_kernels() {
  int checked = 0;

  struct SpearmanFixture {
    std::vector<double> x, y;
  };
  std::vector<SpearmanFixture> sp{
      {{1, 2, 3, 4, 5, 6, 7}, {2, 1, 4, 3, 7, 5, 6}},
      {{1, 1, 2, 3, 4, 5}, {4, 2, 2, 5, 1, 6}},
      {{1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
       {3, 1, 4, 1, 5, 9, 2, 6, 5, 3}},  // ties in y at n = 10
  };
  for (const auto& f : sp) {
    auto got = spearman(f.x, f.y);
    if (!got || !got->exact) return {false, "spearman fixture not exact"};
    double want = enum_spearman_p(f.x, f.y);
    if (std::fabs(got->p_value - want) > 1e-12) {
      return {false, fmt("spearman n=%zu p %.17g != enumerated %.17g",
                         f.x.size(), got->p_value, want)};
    }
    ++checked;
  }

  struct MwFixture {
    std::vector<double> a, b;
  };
  std::vector<MwFixture> mw{
      {{1, 2, 3}, {4, 5, 6}},
      {{1, 2, 2, 3, 5}, {2, 3, 4, 4, 6}},
      {{1, 2, 2, 3, 5, 7, 7, 9, 11, 13}, {2, 3, 4, 4, 6, 7, 8, 10, 11, 12}},
  };
  for (const auto& f : mw) {
    auto got = mann_whitney(f.a, f.b);
    if (!got || !got->exact) return {false, "rank-sum fixture not exact"};
    double want = enum_mann_whitney_p(f.a, f.b);
    if (std::fabs(got->p_value - want) > 1e-12) {
      return {false, fmt("rank-sum %zux%zu p %.17g != enumerated %.17g",
                         f.a.size(), f.b.size(), got->p_value, want)};
    }
    ++checked;
  }

  std::vector<std::vector<double>> wil{
      {1.5, -0.5, 2.5, 3.5, -4.5},
      {0.4, -1.2, 2.2, 2.2, -0.7, 3.1, 0.4, -2.9},
      {0.4, -1.2, 2.2, 2.2, -0.7, 3.1, 0.4, -2.9, 1.6, 0.9},
  };
  for (const auto& diffs : wil) {
    std::vector<double> a = diffs, b(diffs.size(), 0.0);
    auto got = wilcoxon_signed_rank(a, b);
    if (!got || !got->exact) return {false, "signed-rank fixture not exact"};
    double want = enum_wilcoxon_p(diffs);
    if (std::fabs(got->p_value - want) > 1e-12) {
      return {false, fmt("signed-rank n=%zu p %.17g != enumerated %.17g",
                         diffs.size(), got->p_value, want)};
    }
    ++checked;
  }
  return {true, fmt("%d fixtures matched enumeration within 1e-12", checked)};
}

// ---------------------------------------------------------------------------
// 9. End-to-end determinism through the command-line tool.

Outcome criterion_determinism() {
  const char* bin = std::getenv("COMMSCAPE_BIN");
#ifdef COMMSCAPE_BIN_PATH
  if (!bin) bin = COMMSCAPE_BIN_PATH;
#endif
  if (!bin) return {false, "COMMSCAPE_BIN not set"};

  testutil::TempDir dir("accept-determinism");
  SynthSpec spec = default_synth_spec(4, 777);
  spec.n_months = 5;
  spec.users_per_community = 15;
  spec.comments_per_user = 5;
  spec.comment_len = 25;
  spec.background_vocab = 200;
  spec.outsiders_per_month = 3;
  std::string input = dir.file("corpus.jsonl");
  {
    std::ofstream out(input, std::ios::binary);
    out << generate_corpus(spec);
  }
  std::string root = dir.file("out");
  std::string log = dir.file("stage.log");

  std::string flags = " --input " + input;
  std::string common =
      " --output-root " + root +
      " --seed 99 --vocab-min 60 --months-min 3 --min-scored 15"
      " --slm-users 12 --slm-spans-per-user 4 --slm-models 6"
      " --accult-eval-users 3 --accult-comments-per-user 4"
      " --accult-outsider-spans 20 --bootstrap-samples 200"
      " --forest-trees 40 --force";

  const char* stages[] = {"ingest", "measure",  "slm",
                          "engagement", "predict", "report"};
  auto run_all = [&]() -> std::string {
    for (const char* stage : stages) {
      std::string cmd = std::string(bin) + " " + stage + common +
                        (std::string(stage) == "ingest" ? flags : "") +
                        " >> " + log + " 2>&1";
      int rc = std::system(cmd.c_str());
      if (rc != 0) return fmt("stage %s exited with %d", stage, rc);
    }
    return "";
  };

  auto snapshot = [&]() {
    std::map<std::string, std::string> files;
    for (const auto& entry :
         std::filesystem::recursive_directory_iterator(root)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      if (ext != ".csv" && ext != ".txt") continue;
      std::ifstream in(entry.path(), std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      files[entry.path().lexically_relative(root).string()] = buf.str();
    }
    return files;
  };

  std::string err = run_all();
  if (!err.empty()) return {false, "first run: " + err};
  auto first = snapshot();
  if (first.size() < 10) {
    return {false, fmt("only %zu output files produced", first.size())};
  }

  err = run_all();
  if (!err.empty()) return {false, "second run: " + err};
  auto second = snapshot();

  if (first.size() != second.size()) {
    return {false, fmt("file count changed between runs: %zu vs %zu",
                       first.size(), second.size())};
  }
  for (const auto& [name, bytes] : first) {
    auto it = second.find(name);
    if (it == second.end()) {
      return {false, "file missing on rerun: " + name};
    }
    if (it->second != bytes) {
      return {false, "bytes differ between runs: " + name};
    }
  }
  return {true, fmt("%zu output files byte-identical across forced reruns",
                    first.size())};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> criteria = {
      {"oracle equivalence", criterion_oracle_equivalence},
      {"identity cases", criterion_identity_cases},
      {"language-model soundness", criterion_lm_soundness},
      {"acculturation null and signal", criterion_acculturation},
      {"planted-structure recovery", criterion_planted_recovery},
      {"directional engagement", criterion_directional_engagement},
      {"prediction harness", criterion_prediction},
      {"statistical kernels", criterion_stat_kernels},
      {"end-to-end determinism", criterion_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    double took = seconds_since(start);
    std::printf("%s %zu %s: %s [%.1fs]\n", outcome.pass ? "pass" : "FAIL",
                i + 1, criteria[i].name, outcome.detail.c_str(), took);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures) {
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return 1;
  }
  std::printf("all %zu criteria hold\n", criteria.size());
  return 0;
}
