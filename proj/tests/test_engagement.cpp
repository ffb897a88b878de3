#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "commscape/counts.hpp"
#include "commscape/engagement.hpp"
#include "commscape/month.hpp"
#include "commscape/slm.hpp"

using namespace commscape;

namespace {

int g_serial = 0;

void add_comment(BucketedCorpus* corpus, const std::string& community,
                 const std::string& month, const std::string& author,
                 const std::vector<std::string>& tokens) {
  CommunityMonthKey key{community, month_index_from_label(month)};
  TokenizedUtterance u;
  u.comment_id = "id" + std::to_string(g_serial++);
  u.author = author;
  u.community_month = key;
  u.tokens = tokens;
  for (std::uint32_t i = 0; i < u.tokens.size(); ++i) u.scoring_idx.push_back(i);
  corpus->buckets[key].push_back(u);
}

MonthIndex month(const std::string& label) {
  return month_index_from_label(label);
}

}  // namespace

TEST_CASE("monthly retention is the returning-author fraction") {
  BucketedCorpus corpus;
  for (const char* a : {"a", "b", "c", "d"}) {
    add_comment(&corpus, "c", "2013-01", a, {"word"});
  }
  for (const char* a : {"a", "b", "e"}) {
    add_comment(&corpus, "c", "2013-02", a, {"word"});
  }
  auto idx = ActivityIndex::build(corpus);

  auto r = monthly_retention(idx, "c", month("2013-01"));
  REQUIRE(r.has_value());
  CHECK(*r == 0.5);

  SUBCASE("full return is 1.0") {
    BucketedCorpus full;
    add_comment(&full, "c", "2013-01", "a", {"w"});
    add_comment(&full, "c", "2013-01", "b", {"w"});
    add_comment(&full, "c", "2013-02", "a", {"w"});
    add_comment(&full, "c", "2013-02", "b", {"w"});
    auto i2 = ActivityIndex::build(full);
    CHECK(*monthly_retention(i2, "c", month("2013-01")) == 1.0);
  }

  SUBCASE("the last month in the horizon has no retention") {
    CHECK_FALSE(monthly_retention(idx, "c", month("2013-02")).has_value());
  }

  SUBCASE("a community absent in month t gives no value") {
    CHECK_FALSE(monthly_retention(idx, "c", month("2012-12")).has_value());
    CHECK_FALSE(monthly_retention(idx, "ghost", month("2013-01")).has_value());
  }

  SUBCASE("comment multiplicity does not move retention") {
    BucketedCorpus dup = corpus;
    for (int i = 0; i < 7; ++i) {
      add_comment(&dup, "c", "2013-01", "a", {"spam", "words"});
    }
    auto i2 = ActivityIndex::build(dup);
    CHECK(*monthly_retention(i2, "c", month("2013-01")) == 0.5);
  }

  SUBCASE("an empty next month inside the horizon is zero retention") {
    BucketedCorpus gap;
    add_comment(&gap, "c", "2013-01", "a", {"w"});
    add_comment(&gap, "other", "2013-02", "z", {"w"});  // extends the horizon
    auto i2 = ActivityIndex::build(gap);
    CHECK(*monthly_retention(i2, "c", month("2013-01")) == 0.0);
  }
}

TEST_CASE("tenure spans first to last month inclusive") {
  BucketedCorpus corpus;
  add_comment(&corpus, "c", "2013-03", "longtimer", {"w"});
  add_comment(&corpus, "c", "2013-07", "longtimer", {"w"});
  add_comment(&corpus, "c", "2013-03", "oneshot", {"w"});
  auto idx = ActivityIndex::build(corpus);

  SUBCASE("hand values and the slice mean") {
    // Slice 2013-03 holds both users: tenures 5 and 1, mean 3.
    auto t = mean_tenure(idx, "c", month("2013-03"));
    REQUIRE(t.has_value());
    CHECK(*t == 3.0);
  }

  SUBCASE("a slice month without users gives no value") {
    CHECK_FALSE(mean_tenure(idx, "c", month("2013-05")).has_value());
  }

  SUBCASE("only slice-month users enter the mean") {
    auto t = mean_tenure(idx, "c", month("2013-07"));
    REQUIRE(t.has_value());
    CHECK(*t == 5.0);  // longtimer only
  }

  SUBCASE("appending a later comment never shrinks tenure") {
    auto before = mean_tenure(idx, "c", month("2013-03"));
    BucketedCorpus extended = corpus;
    add_comment(&extended, "c", "2013-09", "oneshot", {"w"});
    auto i2 = ActivityIndex::build(extended);
    auto after = mean_tenure(i2, "c", month("2013-03"));
    REQUIRE(before.has_value());
    REQUIRE(after.has_value());
    CHECK(*after >= *before);
    CHECK(*after == 6.0);  // tenures 5 and 7
  }
}

TEST_CASE("cohort identification") {
  BucketedCorpus corpus;
  // 12 planted active users: 5 comments each in the target month.
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 5; ++j) {
      add_comment(&corpus, "c", "2013-02", "active" + std::to_string(i), {"w"});
    }
  }
  // 7 planted outsiders: one comment in c ever, busy elsewhere that month.
  for (int i = 0; i < 7; ++i) {
    std::string name = "out" + std::to_string(i);
    add_comment(&corpus, "c", "2013-02", name, {"w"});
    for (int j = 0; j < 5; ++j) {
      add_comment(&corpus, "elsewhere", "2013-02", name, {"w"});
    }
  }
  // Near misses.
  for (int j = 0; j < 4; ++j) {
    add_comment(&corpus, "c", "2013-02", "fourtimer", {"w"});
  }
  add_comment(&corpus, "c", "2013-02", "idler", {"w"});
  for (int j = 0; j < 3; ++j) {
    add_comment(&corpus, "elsewhere", "2013-02", "idler", {"w"});
  }
  add_comment(&corpus, "c", "2013-01", "earlier", {"w"});
  add_comment(&corpus, "c", "2013-02", "earlier", {"w"});
  for (int j = 0; j < 5; ++j) {
    add_comment(&corpus, "elsewhere", "2013-02", "earlier", {"w"});
  }

  auto idx = ActivityIndex::build(corpus);
  auto cohorts = identify_cohorts(idx, {"c", month("2013-02")}, 5);

  CHECK(cohorts.active.size() == 12);
  CHECK(cohorts.outsiders.size() == 7);
  for (const auto& a : cohorts.active) CHECK(a.substr(0, 6) == "active");
  for (const auto& o : cohorts.outsiders) CHECK(o.substr(0, 3) == "out");

  // fourtimer: 4 < 5 comments. idler: only 4 site-wide comments that month.
  // earlier: two comments in c over its history.
  std::set<std::string> all(cohorts.active.begin(), cohorts.active.end());
  for (const auto& o : cohorts.outsiders) {
    CHECK(all.count(o) == 0);  // disjoint cohorts
  }
}

TEST_CASE("acculturation gap on a hand-built bucket") {
  BucketedCorpus corpus;
  // 12 active users with 10 long comments each; outsiders with one comment
  // in c and five elsewhere. All text from one vocabulary.
  const char* vocab[] = {"alpha", "beta", "gamma", "delta", "epsilon",
                         "zeta",  "eta",  "theta", "iota",  "kappa"};
  int tick = 0;
  auto tokens_for = [&](int len) {
    std::vector<std::string> t;
    for (int i = 0; i < len; ++i) t.push_back(vocab[(tick * 7 + i * 3) % 10]);
    ++tick;
    return t;
  };
  for (int u = 0; u < 12; ++u) {
    for (int j = 0; j < 10; ++j) {
      add_comment(&corpus, "c", "2013-01", "act" + std::to_string(u),
                  tokens_for(12));
    }
  }
  for (int o = 0; o < 60; ++o) {
    std::string name = "out" + std::to_string(o);
    add_comment(&corpus, "c", "2013-01", name, tokens_for(12));
    for (int j = 0; j < 5; ++j) {
      add_comment(&corpus, "hub", "2013-01", name, tokens_for(12));
    }
  }

  CommunityMonthKey key{"c", month("2013-01")};
  auto idx = ActivityIndex::build(corpus);
  auto cohorts = identify_cohorts(idx, key, 5);
  REQUIRE(cohorts.active.size() == 12);
  REQUIRE(cohorts.outsiders.size() == 60);

  SlmProtocol proto;
  proto.n_users = 8;  // leaves out-of-manifest actives for evaluation
  proto.spans_per_user = 5;
  proto.span_len = 10;
  proto.n_models = 10;
  auto slms = bootstrap_slms(corpus.buckets.at(key), key, proto, 3);
  REQUIRE(slms.size() == 10);

  AcculturationProtocol aproto;
  aproto.eval_users = 3;
  aproto.comments_per_user = 5;
  aproto.outsider_spans = 15;
  aproto.span_len = 10;

  auto result =
      acculturation_gap(corpus.buckets.at(key), key, cohorts, slms, aproto, 11);
  REQUIRE(result.defined);
  CHECK(result.per_replicate.size() == 10);
  CHECK(result.ci_lo <= result.gap);
  CHECK(result.gap <= result.ci_hi);
  // Same generator for both cohorts: the gap is a small relative difference.
  CHECK(std::fabs(result.gap) < 0.2);

  auto again =
      acculturation_gap(corpus.buckets.at(key), key, cohorts, slms, aproto, 11);
  CHECK(again.gap == result.gap);
  CHECK(again.ci_lo == result.ci_lo);
  CHECK(again.per_replicate == result.per_replicate);

  SUBCASE("an empty cohort skips the measure") {
    Cohorts none = cohorts;
    none.outsiders.clear();
    auto skipped = acculturation_gap(corpus.buckets.at(key), key, none, slms,
                                     aproto, 11);
    CHECK_FALSE(skipped.defined);
    CHECK_FALSE(skipped.skip_reason.empty());
  }

  SUBCASE("no models skips the measure") {
    auto skipped = acculturation_gap(corpus.buckets.at(key), key, cohorts, {},
                                     aproto, 11);
    CHECK_FALSE(skipped.defined);
  }
}

TEST_CASE("content affinity gaps") {
  TypologyOptions topts;
  topts.min_scored = 1;
  EligibilityThresholds thr;
  thr.vocab_min = 1;
  thr.months_min = 1;
  thr.percentile = 0;

  SUBCASE("identical cohort language gives exactly zero") {
    BucketedCorpus corpus;
    for (int u = 0; u < 3; ++u) {
      for (int j = 0; j < 5; ++j) {
        add_comment(&corpus, "c", "2013-01", "act" + std::to_string(u),
                    {"shared", "thing"});
      }
    }
    for (int o = 0; o < 4; ++o) {
      std::string name = "out" + std::to_string(o);
      add_comment(&corpus, "c", "2013-01", name, {"shared", "thing"});
      for (int j = 0; j < 5; ++j) {
        add_comment(&corpus, "bg", "2013-01", name, {"plain", "words"});
      }
    }
    for (int b = 0; b < 5; ++b) {
      add_comment(&corpus, "bg", "2013-01", "bguser" + std::to_string(b),
                  {"plain", "words", "everywhere"});
    }
    auto tables = build_tables(corpus, thr);
    auto idx = ActivityIndex::build(corpus);
    auto gaps = content_affinity_gaps(corpus, tables, idx, "c", topts, 5);
    REQUIRE(gaps.defined);
    CHECK(gaps.specificity.mu_active == gaps.specificity.mu_outsider);
    CHECK(gaps.specificity.symmetric == 0.0);
    CHECK(gaps.specificity.eq_style == 0.0);
    CHECK(gaps.specificity.active_points == 3);
    CHECK(gaps.specificity.outsider_points == 4);
  }

  SUBCASE("actives leaning on community-specific words push the gap positive") {
    BucketedCorpus corpus;
    for (int u = 0; u < 3; ++u) {
      for (int j = 0; j < 5; ++j) {
        add_comment(&corpus, "c", "2013-01", "act" + std::to_string(u),
                    {"niche", "shared"});
      }
    }
    for (int o = 0; o < 3; ++o) {
      std::string name = "out" + std::to_string(o);
      add_comment(&corpus, "c", "2013-01", name, {"shared", "shared"});
      for (int j = 0; j < 5; ++j) {
        add_comment(&corpus, "bg", "2013-01", name, {"shared", "plain"});
      }
    }
    for (int b = 0; b < 6; ++b) {
      add_comment(&corpus, "bg", "2013-01", "bguser" + std::to_string(b),
                  {"shared", "plain", "other"});
    }
    auto tables = build_tables(corpus, thr);
    auto idx = ActivityIndex::build(corpus);
    auto gaps = content_affinity_gaps(corpus, tables, idx, "c", topts, 5);
    REQUIRE(gaps.defined);
    CHECK(gaps.specificity.mu_active > gaps.specificity.mu_outsider);
    CHECK(gaps.specificity.symmetric > 0.0);
    CHECK(std::isfinite(gaps.volatility.symmetric));
  }

  SUBCASE("missing cohorts leave the gaps undefined") {
    BucketedCorpus corpus;
    add_comment(&corpus, "c", "2013-01", "solo", {"word"});
    auto tables = build_tables(corpus, thr);
    auto idx = ActivityIndex::build(corpus);
    auto gaps = content_affinity_gaps(corpus, tables, idx, "c", topts, 5);
    CHECK_FALSE(gaps.defined);
    CHECK_FALSE(gaps.skip_reason.empty());
  }
}
