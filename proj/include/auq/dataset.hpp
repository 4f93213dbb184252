#pragma once
// Tabular dataset container shared by all learners.

#include <Eigen/Core>
#include <string>
#include <vector>

namespace auq {

// Regression: `targets` is n x k. Classification: `labels` holds per-row class
// ids in [0, n_classes). n_classes == 0 marks a regression dataset.
struct Dataset {
  Eigen::MatrixXd inputs;    // n x d
  Eigen::MatrixXd targets;   // n x k (regression only)
  std::vector<int> labels;   // n entries (classification only)
  int n_classes = 0;
  std::vector<std::string> feature_names;  // optional, used by CSV io

  bool classification() const { return n_classes > 0; }
  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
  Eigen::Index target_dim() const { return classification() ? 1 : targets.cols(); }

  // Subset by row indices, preserving kind and feature names.
  Dataset take(const std::vector<int>& idx) const;

  static Dataset regression(Eigen::MatrixXd inputs, Eigen::MatrixXd targets);
  static Dataset regression(Eigen::MatrixXd inputs, Eigen::VectorXd targets);
  static Dataset classification(Eigen::MatrixXd inputs, std::vector<int> labels,
                                int n_classes);
};

}  // namespace auq
