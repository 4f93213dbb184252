#include "auq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace auq {
namespace {

void check_pair(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                const char* what) {
  if (a.size() == 0 || b.size() == 0) {
    throw std::invalid_argument(std::string(what) + ": empty input");
  }
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch, " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
}

void check_probs(const Eigen::MatrixXd& probs, const std::vector<int>& labels,
                 const char* what) {
  if (probs.rows() == 0 || probs.cols() == 0) {
    throw std::invalid_argument(std::string(what) +
                                ": probability matrix is empty");
  }
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
    throw std::invalid_argument(std::string(what) + ": " +
                                std::to_string(probs.rows()) +
                                " probability rows but " +
                                std::to_string(labels.size()) + " labels");
  }
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if ((probs.row(i).array() < 0.0).any() ||
        std::abs(probs.row(i).sum() - 1.0) > 1e-6) {
      throw std::invalid_argument(std::string(what) + ": row " +
                                  std::to_string(i) +
                                  " is not a probability distribution");
    }
    if (labels[i] < 0 || labels[i] >= probs.cols()) {
      throw std::invalid_argument(std::string(what) + ": label " +
                                  std::to_string(labels[i]) + " at row " +
                                  std::to_string(i) + " outside [0, " +
                                  std::to_string(probs.cols()) + ")");
    }
  }
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  return (da * db).sum() / denom;
}

}  // namespace

double mean_absolute_error(const Eigen::VectorXd& truth,
                           const Eigen::VectorXd& predicted) {
  check_pair(truth, predicted, "mean_absolute_error");
  return (truth - predicted).cwiseAbs().mean();
}

double r2_score(const Eigen::VectorXd& truth,
                const Eigen::VectorXd& predicted) {
  check_pair(truth, predicted, "r2_score");
  if (truth.size() < 2) {
    throw std::invalid_argument("r2_score: need at least two samples");
  }
  const double ss_tot = (truth.array() - truth.mean()).square().sum();
  if (ss_tot == 0.0) {
    throw std::invalid_argument("r2_score: truth vector has zero variance");
  }
  const double ss_res = (truth - predicted).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

Eigen::VectorXd average_ranks(const Eigen::VectorXd& values) {
  const auto n = values.size();
  if (n == 0) {
    throw std::invalid_argument("average_ranks: empty input");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return values[i] < values[j]; });

  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) {
      ranks[order[k]] = shared;
    }
    i = j + 1;
  }
  return ranks;
}

double spearman_correlation(const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b) {
  check_pair(a, b, "spearman_correlation");
  if (a.minCoeff() == a.maxCoeff() || b.minCoeff() == b.maxCoeff()) {
    throw std::invalid_argument(
        "spearman_correlation: constant vector has no rank ordering");
  }
  return pearson(average_ranks(a), average_ranks(b));
}

CalibrationReport calibration_report(const Eigen::MatrixXd& probs,
                                     const std::vector<int>& labels,
                                     int n_bins) {
  check_probs(probs, labels, "calibration_report");
  if (n_bins < 1) {
    throw std::invalid_argument("calibration_report: need at least one bin");
  }
  const auto n = probs.rows();
  std::vector<double> bin_conf(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<double> bin_acc(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<int> bin_count(static_cast<std::size_t>(n_bins), 0);
  double correct = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    const double conf = probs.row(i).maxCoeff(&arg);
    int bin = static_cast<int>(conf * n_bins);
    bin = std::min(bin, n_bins - 1);
    const double hit = (arg == labels[i]) ? 1.0 : 0.0;
    bin_conf[bin] += conf;
    bin_acc[bin] += hit;
    bin_count[bin] += 1;
    correct += hit;
  }
  CalibrationReport report;
  report.n_bins = n_bins;
  report.accuracy = correct / n;
  report.nll = negative_log_likelihood(probs, labels);
  report.brier = brier_score(probs, labels);
  report.bins.resize(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    auto& bin = report.bins[static_cast<std::size_t>(b)];
    if (bin_count[b] == 0) continue;
    const double inv = 1.0 / bin_count[b];
    bin.mean_confidence = bin_conf[b] * inv;
    bin.accuracy = bin_acc[b] * inv;
    bin.weight = static_cast<double>(bin_count[b]) / n;
    report.ece += bin.weight * std::abs(bin.accuracy - bin.mean_confidence);
  }
  return report;
}

double expected_calibration_error(const Eigen::MatrixXd& probs,
                                  const std::vector<int>& labels, int n_bins) {
  return calibration_report(probs, labels, n_bins).ece;
}

double negative_log_likelihood(const Eigen::MatrixXd& probs,
                               const std::vector<int>& labels) {
  check_probs(probs, labels, "negative_log_likelihood");
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    total -= std::log(std::max(probs(i, labels[i]), 1e-12));
  }
  return total / probs.rows();
}

double brier_score(const Eigen::MatrixXd& probs,
                   const std::vector<int>& labels) {
  check_probs(probs, labels, "brier_score");
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::VectorXd onehot = Eigen::VectorXd::Zero(probs.cols());
    onehot[labels[i]] = 1.0;
    total += (probs.row(i).transpose() - onehot).squaredNorm();
  }
  return total / probs.rows();
}

double auroc(const Eigen::VectorXd& negative_scores,
             const Eigen::VectorXd& positive_scores) {
  const auto n_neg = negative_scores.size();
  const auto n_pos = positive_scores.size();
  if (n_neg == 0 || n_pos == 0) {
    throw std::invalid_argument("auroc: need scores from both classes");
  }
  Eigen::VectorXd all(n_neg + n_pos);
  all << negative_scores, positive_scores;
  const Eigen::VectorXd ranks = average_ranks(all);
  const double pos_rank_sum = ranks.tail(n_pos).sum();
  const double u = pos_rank_sum -
                   static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace auq
