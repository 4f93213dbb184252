#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "auq/metrics.hpp"

using namespace auq;

namespace {

// independent Pearson used as the Spearman oracle
double pearson_oracle(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean(), mb = b.mean();
  double num = 0.0, da = 0.0, db = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

// pairwise-comparison oracle for the Mann-Whitney statistic
double auroc_oracle(const Eigen::VectorXd& neg, const Eigen::VectorXd& pos) {
  double wins = 0.0;
  for (Eigen::Index i = 0; i < pos.size(); ++i) {
    for (Eigen::Index j = 0; j < neg.size(); ++j) {
      if (pos[i] > neg[j]) wins += 1.0;
      else if (pos[i] == neg[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pos.size() * neg.size());
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("perfect predictions give zero error and full explained variance") {
  const Eigen::VectorXd truth = vec({1.0, 2.0, 3.0});
  CHECK(mean_absolute_error(truth, truth) == doctest::Approx(0.0));
  CHECK(r2_score(truth, truth) == doctest::Approx(1.0));
}

TEST_CASE("predicting the mean scores zero explained variance") {
  const Eigen::VectorXd truth = vec({1.0, 2.0, 3.0});
  const Eigen::VectorXd mean_pred = Eigen::VectorXd::Constant(3, 2.0);
  CHECK(r2_score(truth, mean_pred) == doctest::Approx(0.0));
}

TEST_CASE("mae averages absolute residuals") {
  CHECK(mean_absolute_error(vec({2.0, 2.0}), vec({1.0, 3.0})) ==
        doctest::Approx(1.0));
}

TEST_CASE("r2 rejects constant truth and tiny samples") {
  CHECK_THROWS_AS(r2_score(vec({2.0, 2.0}), vec({1.0, 3.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(r2_score(vec({2.0}), vec({1.0})), std::invalid_argument);
  CHECK_THROWS_AS(mean_absolute_error(vec({1.0}), vec({1.0, 2.0})),
                  std::invalid_argument);
}

TEST_CASE("average ranks share positions across ties") {
  const Eigen::VectorXd r = average_ranks(vec({1.0, 1.0, 2.0}));
  CHECK(r[0] == doctest::Approx(1.5));
  CHECK(r[1] == doctest::Approx(1.5));
  CHECK(r[2] == doctest::Approx(3.0));
  const Eigen::VectorXd r2 = average_ranks(vec({30.0, 10.0, 20.0}));
  CHECK(r2[0] == doctest::Approx(3.0));
  CHECK(r2[1] == doctest::Approx(1.0));
  CHECK(r2[2] == doctest::Approx(2.0));
}

TEST_CASE("monotone agreement and disagreement hit the rank bounds") {
  CHECK(spearman_correlation(vec({1.0, 2.0, 3.0}), vec({10.0, 20.0, 30.0})) ==
        doctest::Approx(1.0));
  CHECK(spearman_correlation(vec({1.0, 2.0, 3.0}), vec({30.0, 20.0, 10.0})) ==
        doctest::Approx(-1.0));
}

TEST_CASE("tied ranks match a direct Pearson-on-ranks computation") {
  const Eigen::VectorXd a = vec({1.0, 1.0, 2.0});
  const Eigen::VectorXd b = vec({1.0, 2.0, 3.0});
  const double expected =
      pearson_oracle(vec({1.5, 1.5, 3.0}), vec({1.0, 2.0, 3.0}));
  CHECK(spearman_correlation(a, b) == doctest::Approx(expected));
}

TEST_CASE("rank correlation ignores strictly increasing transforms") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  Eigen::VectorXd a(40), b(40);
  for (int i = 0; i < 40; ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
  }
  const double base = spearman_correlation(a, b);
  const Eigen::VectorXd a_cubed = a.array().pow(3.0);
  const Eigen::VectorXd b_exp = b.array().exp();
  CHECK(spearman_correlation(a_cubed, b) == doctest::Approx(base));
  CHECK(spearman_correlation(a, b_exp) == doctest::Approx(base));
}

TEST_CASE("spearman rejects constant vectors") {
  CHECK_THROWS_AS(
      spearman_correlation(vec({1.0, 1.0, 1.0}), vec({1.0, 2.0, 3.0})),
      std::invalid_argument);
}

TEST_CASE("matched confidence and accuracy give zero calibration error") {
  // ten rows at confidence 0.8, exactly eight of them correct
  Eigen::MatrixXd probs(10, 2);
  std::vector<int> labels(10);
  for (int i = 0; i < 10; ++i) {
    probs(i, 0) = 0.8;
    probs(i, 1) = 0.2;
    labels[static_cast<std::size_t>(i)] = i < 8 ? 0 : 1;
  }
  CHECK(expected_calibration_error(probs, labels) == doctest::Approx(0.0));
}

TEST_CASE("certain but half-wrong predictions have ece one half") {
  Eigen::MatrixXd probs(4, 2);
  std::vector<int> labels = {0, 0, 1, 1};
  for (int i = 0; i < 4; ++i) {
    probs(i, 0) = 1.0;
    probs(i, 1) = 0.0;
  }
  const auto report = calibration_report(probs, labels);
  CHECK(report.ece == doctest::Approx(0.5));
  CHECK(report.accuracy == doctest::Approx(0.5));
}

TEST_CASE("single coin-flip row has ln2 log-loss and half brier") {
  Eigen::MatrixXd probs(1, 2);
  probs << 0.5, 0.5;
  const std::vector<int> labels = {0};
  const auto report = calibration_report(probs, labels);
  CHECK(report.nll == doctest::Approx(std::log(2.0)));
  CHECK(report.brier == doctest::Approx(0.5));
}

TEST_CASE("bin weights sum to one over nonempty bins") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd probs(200, 3);
  std::vector<int> labels(200);
  for (int i = 0; i < 200; ++i) {
    Eigen::Vector3d raw(u(rng) + 1e-3, u(rng) + 1e-3, u(rng) + 1e-3);
    probs.row(i) = raw / raw.sum();
    labels[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 3);
  }
  const auto report = calibration_report(probs, labels);
  double weight = 0.0;
  for (const auto& bin : report.bins) weight += bin.weight;
  CHECK(weight == doctest::Approx(1.0));
  CHECK(report.ece >= 0.0);
  CHECK(report.ece <= 1.0);
  CHECK(report.brier >= 0.0);
  CHECK(report.brier <= 2.0);
  CHECK(report.nll >= 0.0);
}

TEST_CASE("probability floor keeps log-loss finite") {
  Eigen::MatrixXd probs(1, 2);
  probs << 0.0, 1.0;
  const std::vector<int> labels = {0};
  const double nll = negative_log_likelihood(probs, labels);
  CHECK(std::isfinite(nll));
  CHECK(nll == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("calibration inputs are validated") {
  Eigen::MatrixXd probs(1, 2);
  probs << 0.7, 0.3;
  CHECK_THROWS_AS(expected_calibration_error(probs, {2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(expected_calibration_error(probs, {0, 1}),
                  std::invalid_argument);
  Eigen::MatrixXd bad(1, 2);
  bad << 0.9, 0.3;
  CHECK_THROWS_AS(expected_calibration_error(bad, {0}), std::invalid_argument);
}

TEST_CASE("separated score distributions give auroc one") {
  CHECK(auroc(vec({0.1, 0.2, 0.3}), vec({0.5, 0.9})) == doctest::Approx(1.0));
  CHECK(auroc(vec({0.5, 0.9}), vec({0.1, 0.2})) == doctest::Approx(0.0));
}

TEST_CASE("identical constant scores give auroc one half") {
  CHECK(auroc(vec({1.0, 1.0}), vec({1.0, 1.0, 1.0})) == doctest::Approx(0.5));
}

TEST_CASE("auroc equals the pairwise-comparison oracle") {
  const Eigen::VectorXd neg = vec({1.0, 2.0});
  const Eigen::VectorXd pos = vec({1.5, 3.0});
  CHECK(auroc_oracle(neg, pos) == doctest::Approx(0.75));  // wins 3 of 4
  CHECK(auroc(neg, pos) == doctest::Approx(auroc_oracle(neg, pos)));

  // a tie contributes one half: wins 3.5 of 4
  const Eigen::VectorXd pos_tied = vec({2.0, 3.0});
  CHECK(auroc_oracle(neg, pos_tied) == doctest::Approx(0.875));
  CHECK(auroc(neg, pos_tied) == doctest::Approx(0.875));

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd n(5 + static_cast<Eigen::Index>(rng() % 20));
    Eigen::VectorXd p(5 + static_cast<Eigen::Index>(rng() % 20));
    for (Eigen::Index i = 0; i < n.size(); ++i) n[i] = std::round(u(rng) * 10) / 10.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::round(u(rng) * 10) / 10.0;
    CHECK(auroc(n, p) == doctest::Approx(auroc_oracle(n, p)));
  }
}

TEST_CASE("swapping auroc argument order complements the score") {
  const Eigen::VectorXd a = vec({0.1, 0.4, 0.35});
  const Eigen::VectorXd b = vec({0.8, 0.2});
  CHECK(auroc(a, b) + auroc(b, a) == doctest::Approx(1.0));
}

TEST_CASE("auroc needs both classes") {
  CHECK_THROWS_AS(auroc(Eigen::VectorXd(), vec({1.0})), std::invalid_argument);
}

TEST_CASE("metrics are permutation invariant") {
  std::mt19937_64 rng(21);
  Eigen::VectorXd truth(30), pred(30);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 30; ++i) {
    truth[i] = u(rng);
    pred[i] = u(rng);
  }
  std::vector<int> order(30);
  for (int i = 0; i < 30; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::VectorXd truth_p(30), pred_p(30);
  for (int i = 0; i < 30; ++i) {
    truth_p[i] = truth[order[static_cast<std::size_t>(i)]];
    pred_p[i] = pred[order[static_cast<std::size_t>(i)]];
  }
  CHECK(mean_absolute_error(truth, pred) ==
        doctest::Approx(mean_absolute_error(truth_p, pred_p)));
  CHECK(r2_score(truth, pred) == doctest::Approx(r2_score(truth_p, pred_p)));
  CHECK(spearman_correlation(truth, pred) ==
        doctest::Approx(spearman_correlation(truth_p, pred_p)));
}
