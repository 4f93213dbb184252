#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "auq/datagen.hpp"
#include "auq/ksvm.hpp"

using namespace auq;

namespace {

// Perceptron with an explicit certificate check: returns true only if the
// learned separator is verified to classify every point strictly correctly,
// which proves linear separability.
bool verified_linearly_separable(const Eigen::MatrixXd& x,
                                 const std::vector<int>& labels) {
  const auto n = x.rows();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols() + 1);  // last = intercept
  for (int pass = 0; pass < 5000; ++pass) {
    bool clean = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
      const double score = w.head(x.cols()).dot(x.row(i)) + w[x.cols()];
      if (y * score <= 0.0) {
        w.head(x.cols()) += y * x.row(i).transpose();
        w[x.cols()] += y;
        clean = false;
      }
    }
    if (clean) break;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    if (y * (w.head(x.cols()).dot(x.row(i)) + w[x.cols()]) <= 0.0) {
      return false;
    }
  }
  return true;
}

double accuracy(const std::vector<int>& predicted,
                const std::vector<int>& truth) {
  int hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / truth.size();
}

}  // namespace

TEST_CASE("separable blobs are fit almost perfectly") {
  Eigen::MatrixXd centers(2, 2);
  centers << 0.0, 0.0, 6.0, 0.0;
  const Dataset blobs = make_blobs(centers, 100, 0.5, 5);
  // oracle first: the data really is linearly separable
  REQUIRE(verified_linearly_separable(blobs.inputs, blobs.labels));

  KsvmConfig cfg;
  cfg.gamma = 0.5;
  cfg.seed = 1;
  const KsvmLearner svm =
      fit_ksvm(blobs.inputs, blobs.labels, blobs.n_classes, cfg);
  CHECK(accuracy(svm.predict_labels(blobs.inputs), blobs.labels) >= 0.98);
}

TEST_CASE("three-class decision values pick the right blob") {
  Eigen::MatrixXd centers(3, 2);
  centers << 0.0, 0.0, 5.0, 0.0, 0.0, 5.0;
  const Dataset blobs = make_blobs(centers, 120, 0.4, 2);
  KsvmConfig cfg;
  cfg.gamma = 0.5;
  const KsvmLearner svm =
      fit_ksvm(blobs.inputs, blobs.labels, blobs.n_classes, cfg);
  CHECK(accuracy(svm.predict_labels(blobs.inputs), blobs.labels) >= 0.97);
  CHECK(accuracy(svm.predict_labels(centers), {0, 1, 2}) == 1.0);
}

TEST_CASE("probability rows are exact distributions") {
  Eigen::MatrixXd centers(3, 2);
  centers << 0.0, 0.0, 4.0, 0.0, 0.0, 4.0;
  const Dataset blobs = make_blobs(centers, 60, 0.6, 7);
  KsvmConfig cfg;
  const KsvmLearner svm =
      fit_ksvm(blobs.inputs, blobs.labels, blobs.n_classes, cfg);
  const Eigen::MatrixXd probs = svm.predict_proba_rows(blobs.inputs);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    CHECK((probs.row(i).array() >= 0.0).all());
    CHECK(std::abs(probs.row(i).sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("svm training is seed deterministic") {
  Eigen::MatrixXd centers(2, 2);
  centers << 0.0, 0.0, 3.0, 3.0;
  const Dataset blobs = make_blobs(centers, 50, 0.8, 3);
  KsvmConfig cfg;
  cfg.seed = 17;
  const KsvmLearner a = fit_ksvm(blobs.inputs, blobs.labels, 2, cfg);
  const KsvmLearner b = fit_ksvm(blobs.inputs, blobs.labels, 2, cfg);
  CHECK((a.coef - b.coef).norm() == 0.0);
}

TEST_CASE("dual variables respect the box constraint") {
  Eigen::MatrixXd centers(2, 2);
  centers << 0.0, 0.0, 1.0, 0.5;  // overlapping classes force saturation
  const Dataset blobs = make_blobs(centers, 80, 1.0, 9);
  KsvmConfig cfg;
  cfg.c = 2.0;
  const KsvmLearner svm = fit_ksvm(blobs.inputs, blobs.labels, 2, cfg);
  // coef = alpha * y, so |coef| must stay within [0, C]
  CHECK(svm.coef.cwiseAbs().maxCoeff() <= cfg.c + 1e-12);
  CHECK(svm.coef.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("invalid svm inputs are rejected") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 1, 0, 0, 1, 1, 1;
  KsvmConfig cfg;
  CHECK_THROWS_AS(fit_ksvm(x, {0, 0, 0, 0}, 1, cfg), std::invalid_argument);
  CHECK_THROWS_AS(fit_ksvm(x, {0, 0, 0, 0}, 2, cfg), std::invalid_argument);
  CHECK_THROWS_AS(fit_ksvm(x, {0, 1, 0, 3}, 2, cfg), std::invalid_argument);
  cfg.gamma = -1.0;
  CHECK_THROWS_AS(fit_ksvm(x, {0, 1, 0, 1}, 2, cfg), std::invalid_argument);
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(KsvmLearner().decision_rows(x), std::runtime_error);
}
