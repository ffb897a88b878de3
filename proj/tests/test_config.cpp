#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "commscape/config.hpp"
#include "commscape/errors.hpp"

using namespace commscape;

TEST_CASE("canonical form is deterministic and hash-sensitive") {
  RunConfig a;
  RunConfig b;
  CHECK(a.canonical() == b.canonical());
  CHECK(a.config_hash() == b.config_hash());

  b.vocab_min = 499;
  CHECK(a.config_hash() != b.config_hash());

  b = a;
  b.seed = 2;
  CHECK(a.config_hash() != b.config_hash());

  b = a;
  b.input = "other.jsonl";
  CHECK(a.config_hash() != b.config_hash());
}

TEST_CASE("metadata carries the stage and every knob") {
  RunConfig cfg;
  cfg.output_root = "/tmp/x";
  auto meta = cfg.metadata("measure");
  bool saw_stage = false, saw_tool = false, saw_seed = false;
  for (const auto& [k, v] : meta) {
    if (k == "stage" && v == "measure") saw_stage = true;
    if (k == "tool" && v == kToolName) saw_tool = true;
    if (k == "seed") saw_seed = true;
  }
  CHECK(saw_stage);
  CHECK(saw_tool);
  CHECK(saw_seed);
}

TEST_CASE("validate catches bad enums and ranges") {
  RunConfig cfg;
  cfg.output_root = "/tmp/x";
  CHECK_NOTHROW(cfg.validate());

  RunConfig bad = cfg;
  bad.noun_mode = "verbs";
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.background = "yearly";
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.weighting = "tfidf";
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.granularity = "per_user";
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.percentile = 101;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.vocab_min = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.slm_span_len = 1;  // a span must hold at least one bigram
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.foreign_threshold = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.tenure_slice = "201301";
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.tenure_slice = "2013-06";
  CHECK_NOTHROW(bad.validate());
}

TEST_CASE("typed accessors mirror the string knobs") {
  RunConfig cfg;
  cfg.background = "pooled";
  cfg.weighting = "unique";
  cfg.min_scored = 7;
  CHECK(cfg.background_mode() == BackgroundMode::pooled);
  CHECK(cfg.token_weighting() == TokenWeighting::unique);
  CHECK(cfg.typology_options().min_scored == 7);

  cfg.slm_users = 33;
  cfg.slm_models = 11;
  auto proto = cfg.slm_protocol();
  CHECK(proto.n_users == 33);
  CHECK(proto.n_models == 11);

  cfg.accult_eval_users = 3;
  CHECK(cfg.acculturation_protocol().eval_users == 3);
  CHECK(cfg.acculturation_protocol().span_len ==
        static_cast<std::size_t>(cfg.slm_span_len));
}

TEST_CASE("config files parse key=value lines with comments and padding") {
  testutil::TempDir dir("config-file");
  std::string path = dir.file("run.cfg");
  {
    std::ofstream out(path);
    out << "# run settings\n"
        << "\n"
        << "  vocab_min = 60  \n"
        << "stoplist=words/en=latest.txt\n"
        << "seed=97\n";
  }
  auto entries = load_config_file(path);
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].first == "vocab_min");
  CHECK(entries[0].second == "60");
  CHECK(entries[1].first == "stoplist");
  CHECK(entries[1].second == "words/en=latest.txt");
  CHECK(entries[2].second == "97");

  CHECK_THROWS_AS(load_config_file(dir.file("absent.cfg")), ConfigError);

  std::string bad = dir.file("bad.cfg");
  {
    std::ofstream out(bad);
    out << "just words\n";
  }
  CHECK_THROWS_AS(load_config_file(bad), ConfigError);
}

TEST_CASE("every canonical key round-trips through the config loader") {
  RunConfig a;
  a.input = "x.jsonl";
  a.output_root = "/tmp/out";
  a.stoplist = "sw.txt";
  a.language_overrides = "ov.txt";
  a.noun_mode = "lexicon";
  a.noun_resource = "nouns.txt";
  a.background = "pooled";
  a.weighting = "unique";
  a.granularity = "community_month";
  a.tenure_slice = "2013-05";
  a.vocab_min = 61;
  a.months_min = 5;
  a.percentile = 91;
  a.min_scored = 51;
  a.active_min = 6;
  a.foreign_threshold = 0.125;
  a.foreign_min_tokens = 1001;
  a.slm_users = 201;
  a.slm_spans_per_user = 6;
  a.slm_span_len = 11;
  a.slm_models = 101;
  a.slm_vocab_cap = 50001;
  a.slm_gt_ceiling = 6;
  a.accult_eval_users = 7;
  a.accult_comments_per_user = 12;
  a.accult_outsider_spans = 51;
  a.bootstrap_samples = 999;
  a.forest_trees = 99;
  a.seed = 123456789012345ULL;

  testutil::TempDir dir("config-roundtrip");
  std::string path = dir.file("canon.cfg");
  {
    std::ofstream out(path);
    out << a.canonical();
  }
  RunConfig b;
  for (const auto& [key, value] : load_config_file(path)) {
    apply_config_value(&b, key, value);
  }
  CHECK(b.canonical() == a.canonical());
}

TEST_CASE("config values are typed and unknown keys are refused") {
  RunConfig cfg;
  apply_config_value(&cfg, "vocab_min", "42");
  CHECK(cfg.vocab_min == 42);
  apply_config_value(&cfg, "foreign_threshold", "0.25");
  CHECK(cfg.foreign_threshold == doctest::Approx(0.25));
  apply_config_value(&cfg, "seed", "18446744073709551615");
  CHECK(cfg.seed == 18446744073709551615ULL);

  CHECK_THROWS_AS(apply_config_value(&cfg, "vocab_min", "sixty"),
                  ConfigError);
  CHECK_THROWS_AS(apply_config_value(&cfg, "vocab_min", "60x"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(&cfg, "seed", "-1"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(&cfg, "foreign_threshold", ""),
                  ConfigError);
  CHECK_THROWS_AS(apply_config_value(&cfg, "no_such_knob", "1"), ConfigError);
}
