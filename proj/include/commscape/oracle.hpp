#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "commscape/comment.hpp"

namespace commscape {

// Deliberately naive recomputation of the core measures, used only to check
// the optimized pipeline on small corpora. Shares nothing with the pipeline
// beyond tokenization and month bucketing; every count, probability, and mean
// is rebuilt here with plain nested loops. Refuses corpora large enough that
// the quadratic passes would hide a real workload.
struct OracleOptions {
  std::int64_t vocab_min = 500;
  int months_min = 4;
  int percentile = 95;
  std::int64_t min_scored = 50;
  bool pooled_background = false;

  std::size_t max_communities = 10;
  std::size_t max_months = 12;
  std::size_t max_vocab = 2000;
};

struct OracleMeasures {
  // Word scores for every scoring-vocab word of each included month.
  std::map<CommunityMonthKey, std::map<std::string, double>> specificity;
  std::map<CommunityMonthKey, std::map<std::string, double>> volatility;
  // Mean utterance scores for months that clear the scored-utterance floor.
  std::map<CommunityMonthKey, std::pair<double, double>> month_measures;
  // Unweighted means over each eligible community's included months.
  std::map<std::string, std::pair<double, double>> community_measures;
  // Next-month author return fraction for every community-month with authors.
  std::map<CommunityMonthKey, double> retention;
};

OracleMeasures brute_force_measures(const std::vector<CommentRecord>& records,
                                    const OracleOptions& opts);

}  // namespace commscape
