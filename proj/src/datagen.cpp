#include "auq/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace auq {

Dataset make_two_moons(int n, double noise_sd, std::uint64_t seed) {
  if (n < 2) {
    throw std::invalid_argument("make_two_moons: need n >= 2");
  }
  if (noise_sd < 0.0) {
    throw std::invalid_argument("make_two_moons: noise_sd must be >= 0");
  }
  const int n0 = (n + 1) / 2;
  const int n1 = n - n0;
  Eigen::MatrixXd x(n, 2);
  std::vector<int> labels(static_cast<std::size_t>(n));
  const double pi = std::numbers::pi;
  for (int i = 0; i < n0; ++i) {
    const double t = n0 == 1 ? 0.0 : pi * i / (n0 - 1);
    x(i, 0) = std::cos(t);
    x(i, 1) = std::sin(t);
    labels[static_cast<std::size_t>(i)] = 0;
  }
  for (int i = 0; i < n1; ++i) {
    const double t = n1 == 1 ? 0.0 : pi * i / (n1 - 1);
    x(n0 + i, 0) = 1.0 - std::cos(t);
    x(n0 + i, 1) = 0.5 - std::sin(t);
    labels[static_cast<std::size_t>(n0 + i)] = 1;
  }
  if (noise_sd > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sd);
    for (int i = 0; i < n; ++i) {
      x(i, 0) += noise(rng);
      x(i, 1) += noise(rng);
    }
  }
  return Dataset::classification(std::move(x), std::move(labels), 2);
}

Dataset make_blobs(const Eigen::MatrixXd& centers, int n, double sd,
                   std::uint64_t seed) {
  if (centers.rows() == 0 || centers.cols() == 0) {
    throw std::invalid_argument("make_blobs: centers matrix is empty");
  }
  if (n < 2) {
    throw std::invalid_argument("make_blobs: need n >= 2");
  }
  if (sd < 0.0) {
    throw std::invalid_argument("make_blobs: sd must be >= 0");
  }
  const auto c = centers.rows();
  Eigen::MatrixXd x(n, centers.cols());
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const auto center = i % c;
    x.row(i) = centers.row(center);
    if (sd > 0.0) {
      for (Eigen::Index j = 0; j < centers.cols(); ++j) {
        x(i, j) += sd * noise(rng);
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(center);
  }
  return Dataset::classification(std::move(x), std::move(labels),
                                 static_cast<int>(c));
}

std::pair<Dataset, Dataset> split(const Dataset& ds, int n_train,
                                  std::uint64_t seed) {
  const auto n = static_cast<int>(ds.size());
  if (n_train < 1 || n_train >= n) {
    throw std::invalid_argument("split: n_train must lie in [1, " +
                                std::to_string(n - 1) + "], got " +
                                std::to_string(n_train));
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::vector<int> train_idx(order.begin(), order.begin() + n_train);
  const std::vector<int> test_idx(order.begin() + n_train, order.end());
  return {ds.take(train_idx), ds.take(test_idx)};
}

Dataset corrupt(const Dataset& ds, const CorruptionSpec& spec) {
  if (spec.intensity < 1 || spec.intensity > 5) {
    throw std::invalid_argument("corrupt: intensity must lie in 1..5, got " +
                                std::to_string(spec.intensity));
  }
  Dataset out = ds;
  std::mt19937_64 rng(spec.seed);
  switch (spec.kind) {
    case CorruptionKind::GaussianNoise: {
      std::normal_distribution<double> noise(0.0, 0.1 * spec.intensity);
      for (Eigen::Index i = 0; i < out.inputs.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.inputs.cols(); ++j) {
          out.inputs(i, j) += noise(rng);
        }
      }
      break;
    }
    case CorruptionKind::UniformNoise: {
      const double half = 0.15 * spec.intensity;
      std::uniform_real_distribution<double> noise(-half, half);
      for (Eigen::Index i = 0; i < out.inputs.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.inputs.cols(); ++j) {
          out.inputs(i, j) += noise(rng);
        }
      }
      break;
    }
    case CorruptionKind::FeatureShift: {
      std::normal_distribution<double> gauss(0.0, 1.0);
      Eigen::VectorXd direction(out.inputs.cols());
      for (Eigen::Index j = 0; j < direction.size(); ++j) {
        direction[j] = gauss(rng);
      }
      const double norm = direction.norm();
      direction = norm > 0.0
                      ? (direction / norm).eval()
                      : Eigen::VectorXd::Unit(out.inputs.cols(), 0).eval();
      out.inputs.rowwise() += (0.2 * spec.intensity) * direction.transpose();
      break;
    }
  }
  return out;
}

}  // namespace auq
