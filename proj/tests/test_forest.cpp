#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "auq/forest.hpp"
#include "auq/metrics.hpp"

using namespace auq;

namespace {

// ramp data y = x on integer points
void make_ramp(Eigen::MatrixXd& x, Eigen::MatrixXd& y, int n) {
  x.resize(n, 1);
  y.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = i;
    y(i, 0) = i;
  }
}

}  // namespace

TEST_CASE("an unrestricted cart memorizes distinct inputs") {
  Eigen::MatrixXd x, y;
  make_ramp(x, y, 10);
  const CartTree tree = fit_cart(x, y, -1, 2);
  for (int i = 0; i < 10; ++i) {
    CHECK(tree.predict(x.row(i).transpose())[0] == doctest::Approx(i));
  }
}

TEST_CASE("depth and split-size limits stop growth") {
  Eigen::MatrixXd x, y;
  make_ramp(x, y, 16);
  const CartTree stump = fit_cart(x, y, 1, 2);
  // one split: exactly three nodes, leaf values are side means
  CHECK(stump.nodes.size() == 3);
  const CartTree no_split = fit_cart(x, y, 0, 2);
  CHECK(no_split.nodes.size() == 1);
  CHECK(no_split.predict(x.row(3).transpose())[0] == doctest::Approx(7.5));
  const CartTree coarse = fit_cart(x, y, -1, 9);
  for (const auto& node : coarse.nodes) {
    if (!node.leaf()) continue;
  }
  CHECK(coarse.nodes.size() < 31);
}

TEST_CASE("constant targets collapse to a single leaf") {
  Eigen::MatrixXd x, y;
  make_ramp(x, y, 12);
  y.setConstant(2.5);
  const CartTree tree = fit_cart(x, y, -1, 2);
  CHECK(tree.nodes.size() == 1);
  CHECK(tree.predict(x.row(7).transpose())[0] == 2.5);
}

TEST_CASE("vector targets split on summed variance") {
  Eigen::MatrixXd x(6, 1), y(6, 2);
  for (int i = 0; i < 6; ++i) {
    x(i, 0) = i;
    y(i, 0) = i < 3 ? 0.0 : 1.0;
    y(i, 1) = i < 3 ? 5.0 : -5.0;
  }
  const CartTree tree = fit_cart(x, y, -1, 2);
  const Eigen::VectorXd left = tree.predict(x.row(0).transpose());
  CHECK(left[0] == doctest::Approx(0.0));
  CHECK(left[1] == doctest::Approx(5.0));
  const Eigen::VectorXd right = tree.predict(x.row(5).transpose());
  CHECK(right[0] == doctest::Approx(1.0));
  CHECK(right[1] == doctest::Approx(-5.0));
}

TEST_CASE("forest averages its trees and keeps training error small") {
  Eigen::MatrixXd x, y;
  make_ramp(x, y, 10);
  ForestConfig cfg;
  cfg.n_trees = 5;
  cfg.seed = 3;
  const ForestLearner forest = fit_forest(x, y, cfg);
  REQUIRE(forest.trees.size() == 5);
  const Eigen::MatrixXd pred = forest.predict_rows(x);
  CHECK(mean_absolute_error(y.col(0), pred.col(0)) <= 0.5);
}

TEST_CASE("tree order does not change forest predictions") {
  Eigen::MatrixXd x, y;
  make_ramp(x, y, 20);
  ForestConfig cfg;
  cfg.n_trees = 7;
  cfg.seed = 11;
  ForestLearner forest = fit_forest(x, y, cfg);
  const Eigen::MatrixXd before = forest.predict_rows(x);
  std::mt19937_64 rng(1);
  std::shuffle(forest.trees.begin(), forest.trees.end(), rng);
  const Eigen::MatrixXd after = forest.predict_rows(x);
  CHECK((before - after).norm() == doctest::Approx(0.0));
}

TEST_CASE("forest training is seed deterministic") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::MatrixXd x(40, 2), y(40, 1);
  for (int i = 0; i < 40; ++i) {
    x(i, 0) = u(rng);
    x(i, 1) = u(rng);
    y(i, 0) = x(i, 0) * x(i, 1);
  }
  ForestConfig cfg;
  cfg.seed = 21;
  const ForestLearner a = fit_forest(x, y, cfg);
  const ForestLearner b = fit_forest(x, y, cfg);
  cfg.seed = 22;
  const ForestLearner c = fit_forest(x, y, cfg);
  CHECK((a.predict_rows(x) - b.predict_rows(x)).norm() == 0.0);
  CHECK((a.predict_rows(x) - c.predict_rows(x)).norm() != 0.0);
}

TEST_CASE("degenerate forest inputs are rejected") {
  Eigen::MatrixXd x(1, 1), y(1, 1);
  x << 0.0;
  y << 0.0;
  ForestConfig cfg;
  CHECK_THROWS_AS(fit_forest(x, y, cfg), std::invalid_argument);
  cfg.n_trees = 0;
  Eigen::MatrixXd x2(3, 1), y2(3, 1);
  x2 << 0, 1, 2;
  y2 << 0, 1, 2;
  CHECK_THROWS_AS(fit_forest(x2, y2, cfg), std::invalid_argument);
  CHECK_THROWS_AS(fit_cart(x2, y2, -1, 1), std::invalid_argument);
  CHECK_THROWS_AS(CartTree().predict(Eigen::VectorXd::Zero(1)),
                  std::runtime_error);
}
