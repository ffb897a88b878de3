#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "commscape/counts.hpp"
#include "commscape/csv.hpp"
#include "commscape/engagement.hpp"
#include "commscape/slm.hpp"
#include "commscape/typology.hpp"

namespace commscape {

inline constexpr const char* kToolName = "commscape";
inline constexpr const char* kToolVersion = "1.0.0";

// Every analysis knob, echoed verbatim into the metadata of every output
// file. The hash over the canonical form is the identity of a run: equal
// hashes mean equal inputs, thresholds, and seeds.
struct RunConfig {
  std::string input;        // raw JSON-lines comment dump
  std::string output_root;  // artifact directory
  std::string stoplist;     // stopword list for the language screen
  std::string language_overrides;
  std::string noun_mode = "all";  // all | lexicon | sidecar
  std::string noun_resource;      // lexicon or tag-sidecar path

  std::int64_t vocab_min = 500;
  std::int64_t months_min = 4;
  std::int64_t percentile = 95;
  std::int64_t min_scored = 50;
  std::int64_t active_min = 5;
  double foreign_threshold = 0.05;
  std::int64_t foreign_min_tokens = 1000;

  std::string background = "month_matched";    // month_matched | pooled
  std::string weighting = "per_occurrence";    // per_occurrence | unique
  std::string granularity = "community_mean";  // community_mean |
                                               // community_month
  std::string tenure_slice;  // YYYY-MM; empty = median corpus month

  std::int64_t slm_users = 200;
  std::int64_t slm_spans_per_user = 5;
  std::int64_t slm_span_len = 10;
  std::int64_t slm_models = 100;
  std::int64_t slm_vocab_cap = 50000;
  std::int64_t slm_gt_ceiling = 5;

  std::int64_t accult_eval_users = 5;
  std::int64_t accult_comments_per_user = 10;
  std::int64_t accult_outsider_spans = 50;

  std::int64_t bootstrap_samples = 1000;
  std::int64_t forest_trees = 100;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError on any bad value

  // Sorted key=value lines; the run identity.
  std::string canonical() const;
  std::uint64_t config_hash() const;

  // Header block for every output file of one stage.
  CsvMetadata metadata(const std::string& stage) const;

  BackgroundMode background_mode() const;
  TokenWeighting token_weighting() const;
  EligibilityThresholds eligibility() const;
  TypologyOptions typology_options() const;
  SlmProtocol slm_protocol() const;
  AcculturationProtocol acculturation_protocol() const;
};

// key=value lines in file order; '#' comments and blank lines skipped.
// Keys and values are whitespace-trimmed; values may contain '='.
std::vector<std::pair<std::string, std::string>> load_config_file(
    const std::string& path);

// Sets one field by its canonical() key name. Unknown keys and unparsable
// values throw ConfigError. The config block embedded in any artifact
// header is therefore a valid config file.
void apply_config_value(RunConfig* cfg, const std::string& key,
                        const std::string& value);

}  // namespace commscape
