#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace commscape {

struct ForestOptions {
  int n_trees = 100;
  int min_leaf = 1;
};

// Bagged CART regression trees: bootstrap row sample per tree, max(1, p/3)
// candidate features per split, unlimited depth, mean aggregation.
// Deterministic under seed.
class RandomForest {
 public:
  static RandomForest train(const std::vector<std::vector<double>>& rows,
                            const std::vector<double>& targets,
                            const ForestOptions& opts, std::uint64_t seed);

  double predict(const std::vector<double>& x) const;

 private:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
  };

  std::vector<std::vector<Node>> trees_;
};

struct FeatureRow {
  std::string community;
  double distinctiveness = 0.0;
  double dynamicity = 0.0;
  double log_users = 0.0;     // ln(# contributing users)
  double log_activity = 0.0;  // ln(mean contributions per user)
  double target = 0.0;        // mean monthly retention
};

enum class FeatureSet { identity, activity, combined };

const char* feature_set_name(FeatureSet fs);
std::vector<double> select_features(const FeatureRow& row, FeatureSet fs);

struct CVResult {
  std::string model_id;
  std::vector<std::string> communities;  // fold order
  std::vector<double> predictions;
  std::vector<double> squared_errors;  // paired across feature sets
  double mse = 0.0;
  double r2 = 0.0;  // 1 - MSE / MSE of the fold-mean baseline
};

// Leave-one-community-out: every community is the test fold exactly once;
// the baseline predicts each fold's training mean.
CVResult loco_cv(const std::vector<FeatureRow>& rows, FeatureSet fs,
                 const ForestOptions& opts, std::uint64_t seed);

}  // namespace commscape
