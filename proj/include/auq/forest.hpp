#pragma once
// Regression random forest built from variance-reduction CART trees on
// bootstrap resamples. Trees carry vector-valued leaves so multi-output
// targets work unchanged.

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace auq {

struct ForestConfig {
  int n_trees = 5;
  int max_depth = -1;  // -1 = grow until pure or too small
  int min_samples_split = 2;
  int anchor_replication = 5;  // anchored copies per training sample
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  Eigen::VectorXd value;  // leaf mean

  bool leaf() const { return feature < 0; }
};

struct CartTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;
};

// Deterministic fit: best (feature, threshold) by summed-variance reduction,
// scanning features in order and midpoints in sorted order; first strict
// improvement wins.
CartTree fit_cart(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                  int max_depth, int min_samples_split);

struct ForestLearner {
  ForestConfig config;
  std::vector<CartTree> trees;

  // mean over trees, one prediction row per input row
  Eigen::MatrixXd predict_rows(const Eigen::MatrixXd& rows) const;
};

// n_trees CART fits on bootstrap resamples of (x, y), seeded by config.seed.
ForestLearner fit_forest(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const ForestConfig& config);

}  // namespace auq
