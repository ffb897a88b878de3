#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "commscape/errors.hpp"
#include "commscape/forest.hpp"
#include "commscape/rng.hpp"

using namespace commscape;

namespace {

std::vector<FeatureRow> linear_identity_rows(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureRow> rows;
  for (int i = 0; i < n; ++i) {
    FeatureRow r;
    r.community = "c" + std::to_string(i);
    r.distinctiveness = rng.unit();
    r.dynamicity = rng.unit();
    r.log_users = rng.unit() * 4.0;
    r.log_activity = rng.unit();
    r.target = 0.2 + 0.6 * r.distinctiveness;  // identity features decide
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("feature selection per set") {
  FeatureRow r;
  r.distinctiveness = 1.0;
  r.dynamicity = 2.0;
  r.log_users = 3.0;
  r.log_activity = 4.0;
  CHECK(select_features(r, FeatureSet::identity) ==
        std::vector<double>{1.0, 2.0});
  CHECK(select_features(r, FeatureSet::activity) ==
        std::vector<double>{3.0, 4.0});
  CHECK(select_features(r, FeatureSet::combined) ==
        std::vector<double>{1.0, 2.0, 3.0, 4.0});
  CHECK(std::string(feature_set_name(FeatureSet::identity)) == "identity");
  CHECK(std::string(feature_set_name(FeatureSet::activity)) == "activity");
  CHECK(std::string(feature_set_name(FeatureSet::combined)) == "combined");
}

TEST_CASE("forest on degenerate training sets") {
  ForestOptions opts;
  opts.n_trees = 10;

  SUBCASE("constant target predicts the constant everywhere") {
    std::vector<std::vector<double>> rows{{0.0}, {5.0}, {-2.0}, {9.0}};
    std::vector<double> targets(4, 3.25);
    auto forest = RandomForest::train(rows, targets, opts, 1);
    CHECK(forest.predict({0.0}) == 3.25);
    CHECK(forest.predict({100.0}) == 3.25);
  }

  SUBCASE("training below two rows is refused") {
    CHECK_THROWS_AS(RandomForest::train({{1.0, 2.0}}, {7.5}, opts, 3),
                    DataError);
    CHECK_THROWS_AS(RandomForest::train({}, {}, opts, 3), DataError);
  }

  SUBCASE("two separable rows split cleanly") {
    opts.n_trees = 200;
    auto forest =
        RandomForest::train({{0.0}, {10.0}}, {1.0, 2.0}, opts, 5);
    // Bootstrap bags miss a row ~1/4 of the time; the ensemble mean is
    // pulled toward the bagged blend but the ordering must survive.
    CHECK(forest.predict({0.0}) < forest.predict({10.0}));
    CHECK(forest.predict({0.0}) >= 1.0);
    CHECK(forest.predict({10.0}) <= 2.0);
  }

  SUBCASE("duplicate feature rows with different targets average") {
    opts.n_trees = 400;
    auto forest = RandomForest::train({{2.0}, {2.0}}, {0.0, 1.0}, opts, 9);
    double p = forest.predict({2.0});
    CHECK(p > 0.25);
    CHECK(p < 0.75);
  }
}

TEST_CASE("forest learns a smooth single-feature function") {
  // y = x on [0, 1]; held-out grid predictions should track the line.
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    double x = rng.unit();
    rows.push_back({x});
    targets.push_back(x);
  }
  ForestOptions opts;
  opts.n_trees = 100;
  auto forest = RandomForest::train(rows, targets, opts, 99);

  double ss_err = 0.0, ss_tot = 0.0;
  for (int g = 1; g < 40; ++g) {
    double x = g / 40.0;
    double pred = forest.predict({x});
    ss_err += (pred - x) * (pred - x);
    ss_tot += (x - 0.5) * (x - 0.5);
  }
  CHECK(1.0 - ss_err / ss_tot > 0.95);
}

TEST_CASE("forest determinism and bagging variance") {
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  Rng rng(23);
  for (int i = 0; i < 60; ++i) {
    double x = rng.unit(), z = rng.unit();
    rows.push_back({x, z});
    targets.push_back(2.0 * x - z + 0.1 * rng.unit());
  }

  ForestOptions opts;
  opts.n_trees = 50;
  auto a = RandomForest::train(rows, targets, opts, 7);
  auto b = RandomForest::train(rows, targets, opts, 7);
  for (double probe : {0.1, 0.5, 0.9}) {
    CHECK(a.predict({probe, 0.3}) == b.predict({probe, 0.3}));
  }

  SUBCASE("more trees shrink seed-to-seed prediction variance") {
    auto spread = [&](int n_trees) {
      ForestOptions o;
      o.n_trees = n_trees;
      double mn = 1e300, mx = -1e300;
      for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        auto f = RandomForest::train(rows, targets, o, seed);
        double p = f.predict({0.5, 0.5});
        mn = std::min(mn, p);
        mx = std::max(mx, p);
      }
      return mx - mn;
    };
    CHECK(spread(400) < spread(4));
  }
}

TEST_CASE("leave-one-community-out cross-validation") {
  SUBCASE("identity features recover an identity-driven target") {
    auto rows = linear_identity_rows(60, 41);
    ForestOptions opts;
    opts.n_trees = 100;
    auto cv = loco_cv(rows, FeatureSet::identity, opts, 13);
    CHECK(cv.model_id == "identity");
    CHECK(cv.communities.size() == rows.size());
    CHECK(cv.predictions.size() == rows.size());
    CHECK(cv.squared_errors.size() == rows.size());
    CHECK(cv.r2 > 0.8);

    // mse consistency with the per-fold squared errors
    double mean_sq = 0.0;
    for (double e : cv.squared_errors) mean_sq += e;
    mean_sq /= static_cast<double>(cv.squared_errors.size());
    CHECK(cv.mse == doctest::Approx(mean_sq).epsilon(1e-12));
  }

  SUBCASE("noise targets have no skill") {
    Rng rng(77);
    std::vector<FeatureRow> rows;
    for (int i = 0; i < 60; ++i) {
      FeatureRow r;
      r.community = "n" + std::to_string(i);
      r.distinctiveness = rng.unit();
      r.dynamicity = rng.unit();
      r.log_users = rng.unit();
      r.log_activity = rng.unit();
      r.target = rng.unit();  // independent of every feature
      rows.push_back(r);
    }
    ForestOptions opts;
    opts.n_trees = 60;
    auto cv = loco_cv(rows, FeatureSet::combined, opts, 19);
    CHECK(cv.r2 < 0.3);
    CHECK(cv.r2 > -1.0);
  }

  SUBCASE("fold order and pairing are stable across feature sets") {
    auto rows = linear_identity_rows(20, 5);
    ForestOptions opts;
    opts.n_trees = 30;
    auto id = loco_cv(rows, FeatureSet::identity, opts, 2);
    auto act = loco_cv(rows, FeatureSet::activity, opts, 2);
    REQUIRE(id.communities.size() == act.communities.size());
    for (std::size_t i = 0; i < id.communities.size(); ++i) {
      CHECK(id.communities[i] == act.communities[i]);
    }
  }

  SUBCASE("deterministic under a fixed seed") {
    auto rows = linear_identity_rows(15, 3);
    ForestOptions opts;
    opts.n_trees = 20;
    auto a = loco_cv(rows, FeatureSet::combined, opts, 4);
    auto b = loco_cv(rows, FeatureSet::combined, opts, 4);
    CHECK(a.predictions == b.predictions);
    CHECK(a.mse == b.mse);
    CHECK(a.r2 == b.r2);
  }
}
