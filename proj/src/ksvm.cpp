#include "auq/ksvm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace auq {
namespace {

// exp(-gamma * squared distance) between all row pairs
Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           double gamma) {
  const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
  const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * a * b.transpose();
  d2.colwise() += a2;
  d2.rowwise() += b2.transpose();
  return (-gamma * d2.cwiseMax(0.0)).array().exp();
}

Eigen::VectorXd softmax_row(const Eigen::RowVectorXd& v) {
  const Eigen::ArrayXd shifted = v.transpose().array() - v.maxCoeff();
  const Eigen::ArrayXd e = shifted.exp();
  return e / e.sum();
}

}  // namespace

Eigen::MatrixXd KsvmLearner::decision_rows(const Eigen::MatrixXd& rows) const {
  if (support.rows() == 0) {
    throw std::runtime_error("svm is untrained");
  }
  if (rows.cols() != support.cols()) {
    throw std::invalid_argument("svm expects width " +
                                std::to_string(support.cols()) + ", got " +
                                std::to_string(rows.cols()));
  }
  return rbf_kernel(rows, support, config.gamma) * coef;
}

Eigen::MatrixXd KsvmLearner::predict_proba_rows(
    const Eigen::MatrixXd& rows) const {
  const Eigen::MatrixXd decisions = decision_rows(rows);
  Eigen::MatrixXd probs(decisions.rows(), decisions.cols());
  for (Eigen::Index i = 0; i < decisions.rows(); ++i) {
    probs.row(i) = softmax_row(decisions.row(i)).transpose();
  }
  return probs;
}

std::vector<int> KsvmLearner::predict_labels(const Eigen::MatrixXd& rows) const {
  const Eigen::MatrixXd decisions = decision_rows(rows);
  std::vector<int> labels(static_cast<std::size_t>(decisions.rows()));
  for (Eigen::Index i = 0; i < decisions.rows(); ++i) {
    Eigen::Index arg = 0;
    decisions.row(i).maxCoeff(&arg);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return labels;
}

KsvmLearner fit_ksvm(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                     int n_classes, const KsvmConfig& config) {
  const auto m = x.rows();
  if (m == 0 || static_cast<std::size_t>(m) != labels.size()) {
    throw std::invalid_argument("svm: feature/label row mismatch");
  }
  if (n_classes < 2) {
    throw std::invalid_argument("svm needs at least two classes, got " +
                                std::to_string(n_classes));
  }
  if (config.gamma <= 0.0 || config.c <= 0.0) {
    throw std::invalid_argument("svm requires gamma > 0 and c > 0");
  }
  if (config.max_iterations < 1) {
    throw std::invalid_argument("svm needs at least one pass");
  }
  std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw std::invalid_argument("svm: label " + std::to_string(labels[i]) +
                                  " outside [0, " + std::to_string(n_classes) +
                                  ")");
    }
    counts[static_cast<std::size_t>(labels[i])]++;
  }
  for (int c = 0; c < n_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw std::invalid_argument("svm: class " + std::to_string(c) +
                                  " has no training samples");
    }
  }

  const Eigen::MatrixXd kernel = rbf_kernel(x, x, config.gamma);
  KsvmLearner learner;
  learner.config = config;
  learner.support = x;
  learner.coef = Eigen::MatrixXd::Zero(m, n_classes);

  std::mt19937_64 rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int c = 0; c < n_classes; ++c) {
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      y[i] = labels[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
    }
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(m);  // f_i = sum_j a_j y_j K_ij
    for (int pass = 0; pass < config.max_iterations; ++pass) {
      std::shuffle(order.begin(), order.end(), rng);
      double worst = 0.0;
      for (const Eigen::Index i : order) {
        const double g = y[i] * f[i] - 1.0;
        double projected = g;
        if (alpha[i] <= 0.0) projected = std::min(g, 0.0);
        else if (alpha[i] >= config.c) projected = std::max(g, 0.0);
        worst = std::max(worst, std::abs(projected));
        if (projected == 0.0) continue;
        const double updated =
            std::clamp(alpha[i] - g / kernel(i, i), 0.0, config.c);
        const double delta = (updated - alpha[i]) * y[i];
        if (delta == 0.0) continue;
        alpha[i] = updated;
        f += delta * kernel.col(i);
      }
      if (worst < 1e-6) break;
    }
    learner.coef.col(c) = alpha.array() * y.array();
  }
  return learner;
}

}  // namespace auq
