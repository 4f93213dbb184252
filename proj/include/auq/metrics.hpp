#pragma once
// Scalar evaluation metrics for regression, ranking, and classification.

#include <Eigen/Core>
#include <vector>

namespace auq {

// Mean absolute error. Vectors must be nonempty and equal length.
double mean_absolute_error(const Eigen::VectorXd& truth,
                           const Eigen::VectorXd& predicted);

// Coefficient of determination, 1 - SS_res / SS_tot. Throws if the truth
// vector has zero variance (SS_tot would vanish).
double r2_score(const Eigen::VectorXd& truth, const Eigen::VectorXd& predicted);

// Ranks with ties sharing the average of the positions they occupy (1-based).
Eigen::VectorXd average_ranks(const Eigen::VectorXd& values);

// Spearman rank correlation: Pearson correlation of average ranks.
// Throws if either vector is constant.
double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Calibration summary over equal-width confidence bins on [0, 1].
// Confidence of a row is its max class probability.
struct CalibrationReport {
  double ece = 0.0;
  double nll = 0.0;
  double brier = 0.0;
  double accuracy = 0.0;
  int n_bins = 0;

  struct Bin {
    double mean_confidence = 0.0;
    double accuracy = 0.0;
    double weight = 0.0;  // fraction of samples landing in the bin
  };
  std::vector<Bin> bins;
};

// `probs` is n x c class probabilities; each row must sum to 1 within 1e-6.
CalibrationReport calibration_report(const Eigen::MatrixXd& probs,
                                     const std::vector<int>& labels,
                                     int n_bins = 15);

// Just the ECE term of calibration_report.
double expected_calibration_error(const Eigen::MatrixXd& probs,
                                  const std::vector<int>& labels,
                                  int n_bins = 15);

// Mean negative log-likelihood of the true class; probabilities are floored
// at 1e-12 before the log.
double negative_log_likelihood(const Eigen::MatrixXd& probs,
                               const std::vector<int>& labels);

// Mean squared distance between the probability row and the one-hot label.
double brier_score(const Eigen::MatrixXd& probs, const std::vector<int>& labels);

// Area under the ROC curve via the Mann-Whitney statistic (ties count 1/2),
// computed from average ranks. Needs at least one score in each class.
double auroc(const Eigen::VectorXd& negative_scores,
             const Eigen::VectorXd& positive_scores);

}  // namespace auq
