#include "auq/dataset.hpp"

#include <stdexcept>
#include <string>

namespace auq {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string("dataset ") + what +
                                " contains NaN or Inf");
  }
}

}  // namespace

Dataset Dataset::take(const std::vector<int>& idx) const {
  Dataset out;
  out.n_classes = n_classes;
  out.feature_names = feature_names;
  out.inputs.resize(static_cast<Eigen::Index>(idx.size()), inputs.cols());
  if (!classification()) {
    out.targets.resize(static_cast<Eigen::Index>(idx.size()), targets.cols());
  }
  for (size_t r = 0; r < idx.size(); ++r) {
    const int i = idx[r];
    if (i < 0 || i >= inputs.rows()) {
      throw std::out_of_range("dataset row index " + std::to_string(i) +
                              " out of range");
    }
    out.inputs.row(static_cast<Eigen::Index>(r)) = inputs.row(i);
    if (classification()) {
      out.labels.push_back(labels[static_cast<size_t>(i)]);
    } else {
      out.targets.row(static_cast<Eigen::Index>(r)) = targets.row(i);
    }
  }
  return out;
}

Dataset Dataset::regression(Eigen::MatrixXd inputs, Eigen::MatrixXd targets) {
  if (inputs.rows() < 1) {
    throw std::invalid_argument("dataset must contain at least one row");
  }
  if (inputs.rows() != targets.rows()) {
    throw std::invalid_argument(
        "inputs and targets row counts differ: " + std::to_string(inputs.rows()) +
        " vs " + std::to_string(targets.rows()));
  }
  require_finite(inputs, "inputs");
  require_finite(targets, "targets");
  Dataset ds;
  ds.inputs = std::move(inputs);
  ds.targets = std::move(targets);
  return ds;
}

Dataset Dataset::regression(Eigen::MatrixXd inputs, Eigen::VectorXd targets) {
  Eigen::MatrixXd t = targets;
  return regression(std::move(inputs), std::move(t));
}

Dataset Dataset::classification(Eigen::MatrixXd inputs, std::vector<int> labels,
                                int n_classes) {
  if (inputs.rows() < 1) {
    throw std::invalid_argument("dataset must contain at least one row");
  }
  if (n_classes < 1) {
    throw std::invalid_argument("n_classes must be >= 1");
  }
  if (static_cast<Eigen::Index>(labels.size()) != inputs.rows()) {
    throw std::invalid_argument("label count does not match row count");
  }
  require_finite(inputs, "inputs");
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw std::invalid_argument("label " + std::to_string(labels[i]) +
                                  " at row " + std::to_string(i) +
                                  " outside [0, " + std::to_string(n_classes) +
                                  ")");
    }
  }
  Dataset ds;
  ds.inputs = std::move(inputs);
  ds.labels = std::move(labels);
  ds.n_classes = n_classes;
  return ds;
}

}  // namespace auq
