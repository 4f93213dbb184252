#include "auq/forest.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

namespace auq {
namespace {

struct Builder {
  const Eigen::MatrixXd& x;
  const Eigen::MatrixXd& y;
  int max_depth;
  int min_samples_split;
  std::vector<TreeNode> nodes;

  Eigen::VectorXd subset_mean(const std::vector<int>& idx) const {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(y.cols());
    for (int i : idx) mean += y.row(i).transpose();
    return mean / static_cast<double>(idx.size());
  }

  // summed squared deviation from the mean over all target coordinates
  static double sse(double sum_sq, const Eigen::VectorXd& sum, double count) {
    return sum_sq - sum.squaredNorm() / count;
  }

  int build(std::vector<int>& idx, int depth) {
    const int node_id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[node_id].value = subset_mean(idx);

    const auto m = static_cast<int>(idx.size());
    if (m < min_samples_split || (max_depth >= 0 && depth >= max_depth)) {
      return node_id;
    }

    Eigen::VectorXd total_sum = Eigen::VectorXd::Zero(y.cols());
    double total_sq = 0.0;
    for (int i : idx) {
      total_sum += y.row(i).transpose();
      total_sq += y.row(i).squaredNorm();
    }
    const double parent_sse = sse(total_sq, total_sum, m);
    if (parent_sse <= 1e-12) {
      return node_id;
    }

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<int> order(idx);
    for (int j = 0; j < x.cols(); ++j) {
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return x(a, j) < x(b, j);
      });
      Eigen::VectorXd left_sum = Eigen::VectorXd::Zero(y.cols());
      double left_sq = 0.0;
      for (int pos = 0; pos + 1 < m; ++pos) {
        const int i = order[static_cast<std::size_t>(pos)];
        left_sum += y.row(i).transpose();
        left_sq += y.row(i).squaredNorm();
        const double lo = x(i, j);
        const double hi = x(order[static_cast<std::size_t>(pos + 1)], j);
        if (lo == hi) continue;
        const double left_n = pos + 1;
        const double right_n = m - left_n;
        const double gain = parent_sse - sse(left_sq, left_sum, left_n) -
                            sse(total_sq - left_sq, total_sum - left_sum,
                                right_n);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = j;
          best_threshold = 0.5 * (lo + hi);
        }
      }
    }
    if (best_feature < 0) {
      return node_id;
    }

    std::vector<int> left_idx, right_idx;
    for (int i : idx) {
      (x(i, best_feature) <= best_threshold ? left_idx : right_idx).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    nodes[node_id].feature = best_feature;
    nodes[node_id].threshold = best_threshold;
    const int left = build(left_idx, depth + 1);
    nodes[node_id].left = left;
    const int right = build(right_idx, depth + 1);
    nodes[node_id].right = right;
    return node_id;
  }
};

}  // namespace

Eigen::VectorXd CartTree::predict(const Eigen::VectorXd& x) const {
  if (nodes.empty()) {
    throw std::runtime_error("tree is untrained");
  }
  int at = 0;
  while (!nodes[static_cast<std::size_t>(at)].leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(at)];
    if (n.feature >= x.size()) {
      throw std::invalid_argument("input narrower than the tree's features");
    }
    at = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(at)].value;
}

CartTree fit_cart(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                  int max_depth, int min_samples_split) {
  if (x.rows() == 0 || x.rows() != y.rows()) {
    throw std::invalid_argument("feature/target row mismatch");
  }
  if (min_samples_split < 2) {
    throw std::invalid_argument("min_samples_split must be >= 2");
  }
  Builder b{x, y, max_depth, min_samples_split, {}};
  std::vector<int> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  b.build(idx, 0);
  CartTree tree;
  tree.nodes = std::move(b.nodes);
  return tree;
}

Eigen::MatrixXd ForestLearner::predict_rows(const Eigen::MatrixXd& rows) const {
  if (trees.empty()) {
    throw std::runtime_error("forest is untrained");
  }
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Zero(rows.rows(), trees.front().nodes[0].value.size());
  for (const auto& tree : trees) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      out.row(i) += tree.predict(rows.row(i).transpose()).transpose();
    }
  }
  return out / static_cast<double>(trees.size());
}

ForestLearner fit_forest(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const ForestConfig& config) {
  if (config.n_trees < 1) {
    throw std::invalid_argument("forest needs at least one tree");
  }
  if (x.rows() < 2) {
    throw std::invalid_argument("forest needs at least two rows to split");
  }
  ForestLearner learner;
  learner.config = config;
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, x.rows() - 1);
  for (int t = 0; t < config.n_trees; ++t) {
    Eigen::MatrixXd bx(x.rows(), x.cols());
    Eigen::MatrixXd by(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto j = pick(rng);
      bx.row(i) = x.row(j);
      by.row(i) = y.row(j);
    }
    learner.trees.push_back(
        fit_cart(bx, by, config.max_depth, config.min_samples_split));
  }
  return learner;
}

}  // namespace auq
