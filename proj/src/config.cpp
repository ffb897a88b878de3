#include "commscape/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "commscape/errors.hpp"
#include "commscape/month.hpp"
#include "commscape/rng.hpp"

namespace commscape {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

std::vector<std::pair<std::string, std::string>> key_values(
    const RunConfig& c) {
  auto i64 = [](std::int64_t v) { return std::to_string(v); };
  std::vector<std::pair<std::string, std::string>> kv;
  kv.push_back({"accult_comments_per_user", i64(c.accult_comments_per_user)});
  kv.push_back({"accult_eval_users", i64(c.accult_eval_users)});
  kv.push_back({"accult_outsider_spans", i64(c.accult_outsider_spans)});
  kv.push_back({"active_min", i64(c.active_min)});
  kv.push_back({"background", c.background});
  kv.push_back({"bootstrap_samples", i64(c.bootstrap_samples)});
  kv.push_back({"foreign_min_tokens", i64(c.foreign_min_tokens)});
  kv.push_back({"foreign_threshold", format_double(c.foreign_threshold)});
  kv.push_back({"forest_trees", i64(c.forest_trees)});
  kv.push_back({"granularity", c.granularity});
  kv.push_back({"input", c.input});
  kv.push_back({"language_overrides", c.language_overrides});
  kv.push_back({"min_scored", i64(c.min_scored)});
  kv.push_back({"months_min", i64(c.months_min)});
  kv.push_back({"noun_mode", c.noun_mode});
  kv.push_back({"noun_resource", c.noun_resource});
  kv.push_back({"output_root", c.output_root});
  kv.push_back({"percentile", i64(c.percentile)});
  kv.push_back({"seed", std::to_string(c.seed)});
  kv.push_back({"slm_gt_ceiling", i64(c.slm_gt_ceiling)});
  kv.push_back({"slm_models", i64(c.slm_models)});
  kv.push_back({"slm_span_len", i64(c.slm_span_len)});
  kv.push_back({"slm_spans_per_user", i64(c.slm_spans_per_user)});
  kv.push_back({"slm_users", i64(c.slm_users)});
  kv.push_back({"slm_vocab_cap", i64(c.slm_vocab_cap)});
  kv.push_back({"stoplist", c.stoplist});
  kv.push_back({"tenure_slice", c.tenure_slice});
  kv.push_back({"vocab_min", i64(c.vocab_min)});
  kv.push_back({"weighting", c.weighting});
  return kv;
}

}  // namespace

void RunConfig::validate() const {
  require(noun_mode == "all" || noun_mode == "lexicon" ||
              noun_mode == "sidecar",
          "noun_mode must be all, lexicon, or sidecar");
  require(noun_mode == "all" || !noun_resource.empty(),
          "noun_mode " + noun_mode + " needs noun_resource");
  require(background == "month_matched" || background == "pooled",
          "background must be month_matched or pooled");
  require(weighting == "per_occurrence" || weighting == "unique",
          "weighting must be per_occurrence or unique");
  require(granularity == "community_mean" || granularity == "community_month",
          "granularity must be community_mean or community_month");
  require(vocab_min >= 1, "vocab_min must be positive");
  require(months_min >= 1, "months_min must be positive");
  require(percentile >= 1 && percentile <= 100,
          "percentile must be in 1..100");
  require(min_scored >= 1, "min_scored must be positive");
  require(active_min >= 1, "active_min must be positive");
  require(foreign_threshold >= 0.0 && foreign_threshold <= 1.0,
          "foreign_threshold must be in [0,1]");
  require(foreign_min_tokens >= 1, "foreign_min_tokens must be positive");
  require(slm_users >= 1 && slm_spans_per_user >= 1 && slm_span_len >= 2 &&
              slm_models >= 1 && slm_vocab_cap >= 1 && slm_gt_ceiling >= 1,
          "sampling protocol values must be positive (span length >= 2)");
  require(accult_eval_users >= 1 && accult_comments_per_user >= 1 &&
              accult_outsider_spans >= 1,
          "cohort evaluation values must be positive");
  require(bootstrap_samples >= 1, "bootstrap_samples must be positive");
  require(forest_trees >= 1, "forest_trees must be positive");
  if (!tenure_slice.empty()) {
    month_index_from_label(tenure_slice);  // throws on bad format
  }
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : key_values(*this)) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t RunConfig::config_hash() const {
  return hash_bytes(canonical());
}

CsvMetadata RunConfig::metadata(const std::string& stage) const {
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016" PRIx64, config_hash());
  CsvMetadata meta;
  meta.push_back({"tool", kToolName});
  meta.push_back({"version", kToolVersion});
  meta.push_back({"stage", stage});
  meta.push_back({"config_hash", hash});
  for (auto& kv : key_values(*this)) meta.push_back(std::move(kv));
  return meta;
}

BackgroundMode RunConfig::background_mode() const {
  return background == "pooled" ? BackgroundMode::pooled
                                : BackgroundMode::month_matched;
}

TokenWeighting RunConfig::token_weighting() const {
  return weighting == "unique" ? TokenWeighting::unique
                               : TokenWeighting::per_occurrence;
}

EligibilityThresholds RunConfig::eligibility() const {
  EligibilityThresholds thr;
  thr.vocab_min = vocab_min;
  thr.months_min = static_cast<int>(months_min);
  thr.percentile = static_cast<int>(percentile);
  return thr;
}

TypologyOptions RunConfig::typology_options() const {
  TypologyOptions topts;
  topts.background = background_mode();
  topts.weighting = token_weighting();
  topts.min_scored = min_scored;
  return topts;
}

SlmProtocol RunConfig::slm_protocol() const {
  SlmProtocol proto;
  proto.active_min = active_min;
  proto.n_users = static_cast<std::size_t>(slm_users);
  proto.spans_per_user = static_cast<std::size_t>(slm_spans_per_user);
  proto.span_len = static_cast<std::size_t>(slm_span_len);
  proto.n_models = static_cast<std::size_t>(slm_models);
  proto.vocab_cap = static_cast<std::size_t>(slm_vocab_cap);
  proto.gt_ceiling = slm_gt_ceiling;
  return proto;
}

AcculturationProtocol RunConfig::acculturation_protocol() const {
  AcculturationProtocol proto;
  proto.eval_users = static_cast<std::size_t>(accult_eval_users);
  proto.comments_per_user = static_cast<std::size_t>(accult_comments_per_user);
  proto.outsider_spans = static_cast<std::size_t>(accult_outsider_spans);
  proto.span_len = static_cast<std::size_t>(slm_span_len);
  return proto;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::int64_t parse_i64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) {
    throw ConfigError("config value for " + key +
                      " is not an integer: " + value);
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty() || value[0] == '-') {
    throw ConfigError("config value for " + key +
                      " is not a non-negative integer: " + value);
  }
  return v;
}

double parse_f64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) {
    throw ConfigError("config value for " + key + " is not a number: " +
                      value);
  }
  return v;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> load_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not readable: " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        " is not key=value: " + t);
    }
    entries.push_back({trim(t.substr(0, eq)), trim(t.substr(eq + 1))});
  }
  return entries;
}

void apply_config_value(RunConfig* cfg, const std::string& key,
                        const std::string& value) {
  if (key == "input") cfg->input = value;
  else if (key == "output_root") cfg->output_root = value;
  else if (key == "stoplist") cfg->stoplist = value;
  else if (key == "language_overrides") cfg->language_overrides = value;
  else if (key == "noun_mode") cfg->noun_mode = value;
  else if (key == "noun_resource") cfg->noun_resource = value;
  else if (key == "background") cfg->background = value;
  else if (key == "weighting") cfg->weighting = value;
  else if (key == "granularity") cfg->granularity = value;
  else if (key == "tenure_slice") cfg->tenure_slice = value;
  else if (key == "vocab_min") cfg->vocab_min = parse_i64(key, value);
  else if (key == "months_min") cfg->months_min = parse_i64(key, value);
  else if (key == "percentile") cfg->percentile = parse_i64(key, value);
  else if (key == "min_scored") cfg->min_scored = parse_i64(key, value);
  else if (key == "active_min") cfg->active_min = parse_i64(key, value);
  else if (key == "foreign_threshold") {
    cfg->foreign_threshold = parse_f64(key, value);
  } else if (key == "foreign_min_tokens") {
    cfg->foreign_min_tokens = parse_i64(key, value);
  } else if (key == "slm_users") cfg->slm_users = parse_i64(key, value);
  else if (key == "slm_spans_per_user") {
    cfg->slm_spans_per_user = parse_i64(key, value);
  } else if (key == "slm_span_len") cfg->slm_span_len = parse_i64(key, value);
  else if (key == "slm_models") cfg->slm_models = parse_i64(key, value);
  else if (key == "slm_vocab_cap") cfg->slm_vocab_cap = parse_i64(key, value);
  else if (key == "slm_gt_ceiling") {
    cfg->slm_gt_ceiling = parse_i64(key, value);
  } else if (key == "accult_eval_users") {
    cfg->accult_eval_users = parse_i64(key, value);
  } else if (key == "accult_comments_per_user") {
    cfg->accult_comments_per_user = parse_i64(key, value);
  } else if (key == "accult_outsider_spans") {
    cfg->accult_outsider_spans = parse_i64(key, value);
  } else if (key == "bootstrap_samples") {
    cfg->bootstrap_samples = parse_i64(key, value);
  } else if (key == "forest_trees") cfg->forest_trees = parse_i64(key, value);
  else if (key == "seed") cfg->seed = parse_u64(key, value);
  else throw ConfigError("unknown config key: " + key);
}

}  // namespace commscape
