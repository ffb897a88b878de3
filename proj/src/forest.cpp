#include "commscape/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "commscape/errors.hpp"
#include "commscape/rng.hpp"

namespace commscape {

RandomForest RandomForest::train(const std::vector<std::vector<double>>& rows,
                                 const std::vector<double>& targets,
                                 const ForestOptions& opts,
                                 std::uint64_t seed) {
  if (rows.size() < 2 || rows.size() != targets.size()) {
    throw DataError("forest training needs at least 2 rows");
  }
  std::size_t n = rows.size();
  std::size_t p = rows[0].size();
  std::size_t features_per_split = std::max<std::size_t>(1, p / 3);
  std::size_t min_leaf = static_cast<std::size_t>(opts.min_leaf);

  RandomForest forest;
  forest.trees_.reserve(static_cast<std::size_t>(opts.n_trees));

  // Scratch reused across nodes: (value, target) pairs for one feature.
  std::vector<std::pair<double, double>> pairs;

  for (int t = 0; t < opts.n_trees; ++t) {
    Rng rng(derive_seed(seed, {hash_bytes("tree"),
                               static_cast<std::uint64_t>(t)}));
    std::vector<std::size_t> sample(n);
    for (std::size_t i = 0; i < n; ++i) sample[i] = rng.below(n);

    std::vector<Node> tree;

    // Preorder construction keeps the random stream and node numbering
    // deterministic regardless of scheduling.
    auto build = [&](auto&& self,
                     const std::vector<std::size_t>& idx) -> std::int32_t {
      std::int32_t node_id = static_cast<std::int32_t>(tree.size());
      tree.emplace_back();

      double sum = 0.0;
      for (std::size_t i : idx) sum += targets[i];
      tree[node_id].value = sum / static_cast<double>(idx.size());

      bool pure = true;
      for (std::size_t i : idx) {
        if (targets[i] != targets[idx[0]]) {
          pure = false;
          break;
        }
      }
      if (pure || idx.size() < 2 * min_leaf) return node_id;

      std::vector<std::size_t> features =
          rng.sample_indices(p, features_per_split);

      // Best split by summed squared error of the two children, evaluated
      // with prefix sums over the sorted feature values.
      double best_cost = 0.0;
      std::int32_t best_feature = -1;
      double best_threshold = 0.0;
      for (std::size_t f : features) {
        pairs.clear();
        for (std::size_t i : idx) pairs.emplace_back(rows[i][f], targets[i]);
        std::sort(pairs.begin(), pairs.end());

        double total_y = 0.0, total_y2 = 0.0;
        for (const auto& [v, y] : pairs) {
          total_y += y;
          total_y2 += y * y;
        }
        double left_y = 0.0, left_y2 = 0.0;
        std::size_t m = pairs.size();
        for (std::size_t i = 0; i + 1 < m; ++i) {
          left_y += pairs[i].second;
          left_y2 += pairs[i].second * pairs[i].second;
          if (pairs[i].first == pairs[i + 1].first) continue;
          std::size_t nl = i + 1;
          std::size_t nr = m - nl;
          if (nl < min_leaf || nr < min_leaf) continue;
          double right_y = total_y - left_y;
          double right_y2 = total_y2 - left_y2;
          double cost = (left_y2 - left_y * left_y / nl) +
                        (right_y2 - right_y * right_y / nr);
          if (best_feature < 0 || cost < best_cost - 1e-12) {
            best_cost = cost;
            best_feature = static_cast<std::int32_t>(f);
            best_threshold = (pairs[i].first + pairs[i + 1].first) / 2.0;
          }
        }
      }
      if (best_feature < 0) return node_id;  // all candidates constant

      std::vector<std::size_t> left_idx, right_idx;
      for (std::size_t i : idx) {
        if (rows[i][static_cast<std::size_t>(best_feature)] <=
            best_threshold) {
          left_idx.push_back(i);
        } else {
          right_idx.push_back(i);
        }
      }
      tree[node_id].feature = best_feature;
      tree[node_id].threshold = best_threshold;
      std::int32_t left = self(self, left_idx);
      std::int32_t right = self(self, right_idx);
      tree[node_id].left = left;
      tree[node_id].right = right;
      return node_id;
    };
    build(build, sample);
    forest.trees_.push_back(std::move(tree));
  }
  return forest;
}

double RandomForest::predict(const std::vector<double>& x) const {
  double sum = 0.0;
  for (const auto& tree : trees_) {
    std::int32_t node = 0;
    while (tree[static_cast<std::size_t>(node)].feature >= 0) {
      const Node& nd = tree[static_cast<std::size_t>(node)];
      node = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold
                 ? nd.left
                 : nd.right;
    }
    sum += tree[static_cast<std::size_t>(node)].value;
  }
  return sum / static_cast<double>(trees_.size());
}

const char* feature_set_name(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::identity: return "identity";
    case FeatureSet::activity: return "activity";
    case FeatureSet::combined: return "combined";
  }
  return "unknown";
}

std::vector<double> select_features(const FeatureRow& row, FeatureSet fs) {
  switch (fs) {
    case FeatureSet::identity:
      return {row.distinctiveness, row.dynamicity};
    case FeatureSet::activity:
      return {row.log_users, row.log_activity};
    case FeatureSet::combined:
      return {row.distinctiveness, row.dynamicity, row.log_users,
              row.log_activity};
  }
  return {};
}

CVResult loco_cv(const std::vector<FeatureRow>& rows, FeatureSet fs,
                 const ForestOptions& opts, std::uint64_t seed) {
  if (rows.size() < 3) throw DataError("cross-validation needs >= 3 rows");
  CVResult result;
  result.model_id = feature_set_name(fs);

  double mse_sum = 0.0;
  double base_sum = 0.0;
  for (std::size_t fold = 0; fold < rows.size(); ++fold) {
    std::vector<std::vector<double>> train_x;
    std::vector<double> train_y;
    train_x.reserve(rows.size() - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == fold) continue;
      train_x.push_back(select_features(rows[i], fs));
      train_y.push_back(rows[i].target);
    }
    RandomForest forest = RandomForest::train(
        train_x, train_y, opts,
        derive_seed(seed, {hash_bytes("fold"),
                           static_cast<std::uint64_t>(fold)}));
    double pred = forest.predict(select_features(rows[fold], fs));
    double err = pred - rows[fold].target;
    double train_mean =
        std::accumulate(train_y.begin(), train_y.end(), 0.0) /
        static_cast<double>(train_y.size());
    double base_err = train_mean - rows[fold].target;

    result.communities.push_back(rows[fold].community);
    result.predictions.push_back(pred);
    result.squared_errors.push_back(err * err);
    mse_sum += err * err;
    base_sum += base_err * base_err;
  }
  double n = static_cast<double>(rows.size());
  result.mse = mse_sum / n;
  double mse_base = base_sum / n;
  if (mse_base <= 0.0) {
    result.r2 = result.mse <= 0.0 ? 1.0 : 0.0;
  } else {
    result.r2 = 1.0 - result.mse / mse_base;
  }
  return result;
}

}  // namespace commscape
