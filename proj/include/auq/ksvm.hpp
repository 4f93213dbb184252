#pragma once
// One-vs-rest RBF-kernel SVM trained by dual coordinate optimization
// (box-constrained, no bias term). Class probabilities come from a softmax
// over the per-class decision values.

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace auq {

struct KsvmConfig {
  double gamma = 1.0;     // RBF bandwidth: k(a,b) = exp(-gamma |a-b|^2)
  double c = 10.0;        // box constraint on dual variables
  int max_iterations = 200;  // full passes over the dual coordinates
  int anchor_passes = 5;  // anchored copies per training sample
  std::uint64_t seed = 0;
};

struct KsvmLearner {
  KsvmConfig config;
  Eigen::MatrixXd support;  // training rows the kernel expands against
  Eigen::MatrixXd coef;     // support-row x class signed dual coefficients

  int n_classes() const { return static_cast<int>(coef.cols()); }

  // per-class decision values, one row per input row
  Eigen::MatrixXd decision_rows(const Eigen::MatrixXd& rows) const;
  // softmax of the decision values
  Eigen::MatrixXd predict_proba_rows(const Eigen::MatrixXd& rows) const;
  std::vector<int> predict_labels(const Eigen::MatrixXd& rows) const;
};

// Fits on the given rows directly (callers handle any anchor replication).
// Every class in [0, n_classes) must appear at least once.
KsvmLearner fit_ksvm(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                     int n_classes, const KsvmConfig& config);

}  // namespace auq
