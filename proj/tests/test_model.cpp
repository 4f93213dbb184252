#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "auq/datagen.hpp"
#include "auq/metrics.hpp"
#include "auq/model.hpp"

using namespace auq;

namespace {

Dataset line_dataset(int n, double slope, double intercept,
                     std::uint64_t seed, double noise_sd = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = u(rng);
    y[i] = slope * x(i, 0) + intercept;
    if (noise_sd > 0.0) y[i] += noise_sd * gauss(rng);
  }
  return Dataset::regression(x, y);
}

AnchorPrior train_prior(const Dataset& ds, std::uint64_t seed = 0) {
  return AnchorPrior::train_distribution(ds.inputs, seed);
}

}  // namespace

TEST_CASE("anchored mlp learns a clean linear map") {
  const Dataset train = line_dataset(100, 2.0, 0.0, 1);
  MlpConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 7;
  const AnchorPrior prior = train_prior(train);
  const DeltaModel model =
      train_anchored_mlp(train, cfg, EncodingScheme::SingleAnchor, prior);

  std::mt19937_64 rng(3);
  double mse = 0.0;
  const int grid = 50;
  for (int i = 0; i < grid; ++i) {
    const double xv = -2.0 + 4.0 * i / (grid - 1);
    const auto summary = marginalized_predict(
        model, Eigen::VectorXd::Constant(1, xv), prior, 10, rng);
    const double err = summary.mean[0] - 2.0 * xv;
    mse += err * err;
  }
  mse /= grid;
  CHECK(mse <= 0.05);
}

TEST_CASE("plain mlp matches the same linear-fit bound") {
  const Dataset train = line_dataset(100, 2.0, 0.0, 2);
  MlpConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 5;
  const PlainModel model = train_plain_mlp(train, cfg);
  Eigen::MatrixXd grid(50, 1);
  for (int i = 0; i < 50; ++i) grid(i, 0) = -2.0 + 4.0 * i / 49.0;
  const Eigen::MatrixXd pred = model.predict_rows(grid);
  double mse = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double err = pred(i, 0) - 2.0 * grid(i, 0);
    mse += err * err;
  }
  CHECK(mse / 50 <= 0.05);
}

TEST_CASE("constant targets are recovered for any anchor count") {
  const double c = -3.7;
  Dataset train = line_dataset(60, 0.0, c, 4);
  MlpConfig cfg;
  cfg.epochs = 100;
  const AnchorPrior prior = train_prior(train);
  const DeltaModel model =
      train_anchored_mlp(train, cfg, EncodingScheme::SingleAnchor, prior);
  std::mt19937_64 rng(9);
  for (int k : {1, 5, 40}) {
    const auto summary = marginalized_predict(
        model, Eigen::VectorXd::Constant(1, 0.8), prior, k, rng);
    CHECK(std::abs(summary.mean[0] - c) <= std::abs(c) * 0.01 + 0.01);
  }
}

TEST_CASE("diverging training reports the epoch") {
  const Dataset train = line_dataset(100, 2.0, 0.0, 6);
  MlpConfig cfg;
  cfg.learning_rate = 1e80;
  cfg.epochs = 5;
  cfg.batch_size = 10;
  const AnchorPrior prior = train_prior(train);
  try {
    train_anchored_mlp(train, cfg, EncodingScheme::SingleAnchor, prior);
    FAIL("expected divergence");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("single-anchor forest on constant targets is exactly constant") {
  Dataset train = line_dataset(30, 0.0, 2.0, 8);
  ForestConfig cfg;
  cfg.seed = 2;
  const AnchorPrior prior = train_prior(train);
  const DeltaModel model =
      train_anchored_forest(train, cfg, EncodingScheme::SingleAnchor, prior);
  std::mt19937_64 rng(1);
  const auto summary = marginalized_predict(
      model, Eigen::VectorXd::Constant(1, 0.3), prior, 8, rng);
  CHECK(summary.mean[0] == 2.0);
  CHECK(summary.total_variance == 0.0);
}

TEST_CASE("anchored forest keeps the ramp's training error small") {
  Eigen::MatrixXd x(10, 1);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i;
    y[i] = i;
  }
  const Dataset train = Dataset::regression(x, y);
  ForestConfig cfg;
  cfg.anchor_replication = 5;
  cfg.seed = 3;
  const AnchorPrior prior = train_prior(train);
  const DeltaModel model =
      train_anchored_forest(train, cfg, EncodingScheme::SingleAnchor, prior);
  std::mt19937_64 rng(5);
  double abs_err = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto summary =
        marginalized_predict(model, x.row(i).transpose(), prior, 10, rng);
    abs_err += std::abs(summary.mean[0] - y[i]);
  }
  CHECK(abs_err / 10 <= 0.5);
}

TEST_CASE("one anchor means exactly zero variance") {
  const Dataset train = line_dataset(50, 1.5, 0.5, 10, 0.1);
  ForestConfig cfg;
  const AnchorPrior prior = train_prior(train);
  const DeltaModel model =
      train_anchored_forest(train, cfg, EncodingScheme::SingleAnchor, prior);
  std::mt19937_64 rng(2);
  const auto summary = marginalized_predict(
      model, Eigen::VectorXd::Constant(1, 0.0), prior, 1, rng);
  CHECK(summary.total_variance == 0.0);
  CHECK(summary.anchor_count() == 1);
}

TEST_CASE("identical anchors mean zero variance") {
  const Dataset train = line_dataset(50, 1.5, 0.5, 11, 0.1);
  MlpConfig cfg;
  cfg.epochs = 20;
  const AnchorPrior prior = train_prior(train);
  const DeltaModel model =
      train_anchored_mlp(train, cfg, EncodingScheme::SingleAnchor, prior);
  Eigen::MatrixXd block(6, 1);
  block.setConstant(0.25);
  const auto summary =
      predict_with_anchors(model, Eigen::VectorXd::Constant(1, 1.0), block);
  CHECK(summary.total_variance == 0.0);
}

TEST_CASE("a hand-built anchor-sum-invariant net has zero variance") {
  std::mt19937_64 rng(13);
  const int d = 3;
  MlpNet net(2 * d, {}, 1, 0);
  Eigen::VectorXd a(d);
  a << 0.3, -1.2, 2.0;
  net.weights[0].topRows(d) = a;
  net.weights[0].bottomRows(d) = a;
  net.biases[0] << 0.7;

  DeltaModel model;
  model.scheme = EncodingScheme::SingleAnchor;
  model.task = Task::Regression;
  model.input_dim = d;
  model.output_dim = 1;
  model.prior = AnchorPrior::standard_normal(d, 4);
  MlpLearner learner;
  learner.net = net;
  learner.scaler = TargetScaler::identity(1);
  model.learner = learner;
  model.trained = true;

  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x[i] = u(rng);
  auto prior_rng = model.prior.make_rng();
  const auto summary =
      marginalized_predict(model, x, model.prior, 64, prior_rng);
  CHECK(summary.total_variance < 1e-12);
  CHECK(summary.mean[0] == doctest::Approx(a.dot(x) + 0.7));
}

TEST_CASE("untrained models refuse to predict") {
  DeltaModel model;
  model.input_dim = 2;
  CHECK_THROWS_AS(model.raw_predict_rows(Eigen::MatrixXd::Zero(1, 4)),
                  std::runtime_error);
}

TEST_CASE("anchored models reject raw-width inputs") {
  const Dataset train = line_dataset(40, 1.0, 0.0, 12);
  ForestConfig cfg;
  const AnchorPrior prior = train_prior(train);
  const DeltaModel model =
      train_anchored_forest(train, cfg, EncodingScheme::SingleAnchor, prior);
  CHECK(model.tuple_width() == 2);
  CHECK_THROWS_AS(model.raw_predict_rows(Eigen::MatrixXd::Zero(3, 1)),
                  std::invalid_argument);
}

TEST_CASE("batched prediction matches the one-point path") {
  const Dataset train = line_dataset(80, -1.0, 0.3, 14, 0.2);
  MlpConfig cfg;
  cfg.epochs = 40;
  const AnchorPrior prior = train_prior(train);
  const DeltaModel model =
      train_anchored_mlp(train, cfg, EncodingScheme::SingleAnchor, prior);
  auto rng = prior.make_rng();
  const Eigen::MatrixXd block =
      sample_anchor_block(prior, 12, model.scheme, rng);
  Eigen::MatrixXd xs(5, 1);
  xs << -1.5, -0.5, 0.0, 0.5, 1.5;
  const auto batched = predict_batch_with_anchors(model, xs, block);
  REQUIRE(batched.size() == 5);
  for (int i = 0; i < 5; ++i) {
    const auto single =
        predict_with_anchors(model, xs.row(i).transpose(), block);
    CHECK((batched[static_cast<std::size_t>(i)].mean - single.mean).norm() ==
          doctest::Approx(0.0));
    CHECK(batched[static_cast<std::size_t>(i)].total_variance ==
          doctest::Approx(single.total_variance));
  }
}

TEST_CASE("probability predictions live on the simplex") {
  const Dataset moons = make_two_moons(120, 0.1, 3);
  MlpConfig cfg;
  cfg.epochs = 30;
  cfg.hidden = {32, 32};
  const AnchorPrior prior = AnchorPrior::train_distribution(moons.inputs, 1);
  const DeltaModel model =
      train_anchored_mlp(moons, cfg, EncodingScheme::SingleAnchor, prior);
  std::mt19937_64 rng(6);
  const auto summary = marginalized_predict_proba(
      model, Eigen::VectorXd::Zero(2), prior, 16, rng);
  CHECK(summary.mean.sum() == doctest::Approx(1.0));
  CHECK((summary.mean.array() >= 0.0).all());

  const Dataset reg = line_dataset(20, 1.0, 0.0, 15);
  ForestConfig fcfg;
  const DeltaModel reg_model =
      train_anchored_forest(reg, fcfg, EncodingScheme::SingleAnchor,
                            train_prior(reg));
  CHECK_THROWS_AS(
      marginalized_predict_proba(reg_model, Eigen::VectorXd::Zero(1),
                                 reg_model.prior, 4, rng),
      std::invalid_argument);
}

TEST_CASE("anchored svm flags its largest uncertainty near boundaries") {
  Eigen::MatrixXd centers(3, 2);
  centers << 0.0, 0.0, 4.0, 0.0, 2.0, 3.5;
  const Dataset blobs = make_blobs(centers, 150, 0.45, 21);
  KsvmConfig cfg;
  cfg.gamma = 0.8;
  cfg.seed = 2;
  const AnchorPrior prior = AnchorPrior::train_distribution(blobs.inputs, 3);
  const DeltaModel model =
      train_anchored_ksvm(blobs, cfg, EncodingScheme::SingleAnchor, prior);

  // variance map over a grid; the hot spot must touch a label change
  const int cells = 30;
  const double lo_x = -1.5, hi_x = 5.5, lo_y = -1.5, hi_y = 5.0;
  const Eigen::MatrixXd& block = model.training_anchors;
  REQUIRE(block.rows() == cfg.anchor_passes);
  Eigen::MatrixXd points((cells + 1) * (cells + 1), 2);
  for (int i = 0; i <= cells; ++i) {
    for (int j = 0; j <= cells; ++j) {
      points((cells + 1) * i + j, 0) = lo_x + (hi_x - lo_x) * i / cells;
      points((cells + 1) * i + j, 1) = lo_y + (hi_y - lo_y) * j / cells;
    }
  }
  const auto summaries = predict_batch_with_anchors(model, points, block);
  Eigen::MatrixXd variance(cells + 1, cells + 1);
  Eigen::MatrixXd label(cells + 1, cells + 1);
  for (int i = 0; i <= cells; ++i) {
    for (int j = 0; j <= cells; ++j) {
      const auto& s = summaries[static_cast<std::size_t>((cells + 1) * i + j)];
      variance(i, j) = s.total_variance;
      Eigen::Index arg = 0;
      s.mean.maxCoeff(&arg);
      label(i, j) = static_cast<double>(arg);
    }
  }
  Eigen::Index bi = 0, bj = 0;
  variance.maxCoeff(&bi, &bj);
  bool near_boundary = false;
  for (int di = -2; di <= 2; ++di) {
    for (int dj = -2; dj <= 2; ++dj) {
      const auto ni = bi + di, nj = bj + dj;
      if (ni < 0 || nj < 0 || ni > cells || nj > cells) continue;
      if (label(ni, nj) != label(bi, bj)) near_boundary = true;
    }
  }
  CHECK(near_boundary);
}

TEST_CASE("every anchored trainer is seed deterministic") {
  const Dataset reg = line_dataset(60, 1.2, -0.4, 17, 0.15);
  const AnchorPrior prior = train_prior(reg);
  std::mt19937_64 rng(1);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.2);

  MlpConfig mcfg;
  mcfg.epochs = 15;
  mcfg.seed = 31;
  const auto m1 = train_anchored_mlp(reg, mcfg, EncodingScheme::SingleAnchor, prior);
  const auto m2 = train_anchored_mlp(reg, mcfg, EncodingScheme::SingleAnchor, prior);
  auto r1 = prior.make_rng();
  auto r2 = prior.make_rng();
  CHECK((marginalized_predict(m1, x, prior, 8, r1).mean -
         marginalized_predict(m2, x, prior, 8, r2).mean).norm() == 0.0);

  ForestConfig fcfg;
  fcfg.seed = 32;
  const auto f1 = train_anchored_forest(reg, fcfg, EncodingScheme::SingleAnchor, prior);
  const auto f2 = train_anchored_forest(reg, fcfg, EncodingScheme::SingleAnchor, prior);
  r1 = prior.make_rng();
  r2 = prior.make_rng();
  CHECK((marginalized_predict(f1, x, prior, 8, r1).mean -
         marginalized_predict(f2, x, prior, 8, r2).mean).norm() == 0.0);

  const Dataset cls = make_two_moons(80, 0.15, 19);
  const AnchorPrior cls_prior = AnchorPrior::train_distribution(cls.inputs, 2);
  KsvmConfig kcfg;
  kcfg.seed = 33;
  const auto k1 = train_anchored_ksvm(cls, kcfg, EncodingScheme::SingleAnchor, cls_prior);
  const auto k2 = train_anchored_ksvm(cls, kcfg, EncodingScheme::SingleAnchor, cls_prior);
  CHECK((std::get<KsvmLearner>(k1.learner).coef -
         std::get<KsvmLearner>(k2.learner).coef).norm() == 0.0);
}

TEST_CASE("double-anchor training and prediction stay consistent") {
  const Dataset train = line_dataset(60, 0.8, 0.1, 23, 0.1);
  ForestConfig cfg;
  cfg.anchor_replication = 3;
  const AnchorPrior prior = train_prior(train);
  const DeltaModel model =
      train_anchored_forest(train, cfg, EncodingScheme::DoubleAnchor, prior);
  CHECK(model.tuple_width() == 3);
  std::mt19937_64 rng(4);
  const auto summary = marginalized_predict(
      model, Eigen::VectorXd::Constant(1, 0.4), prior, 6, rng);
  CHECK(summary.per_anchor.rows() == 6);
  CHECK(std::isfinite(summary.mean[0]));
}

TEST_CASE("identity-scheme forest tracks the plain baseline") {
  const Dataset full = line_dataset(160, 1.3, -0.2, 27, 0.3);
  const auto [train, test] = split(full, 100, 5);
  ForestConfig cfg;
  cfg.seed = 6;
  const AnchorPrior prior = train_prior(train);
  const DeltaModel anchored =
      train_anchored_forest(train, cfg, EncodingScheme::Identity, prior);
  const PlainModel plain = train_plain_forest(train, cfg);

  const Eigen::MatrixXd plain_pred = plain.predict_rows(test.inputs);
  std::mt19937_64 rng(8);
  Eigen::VectorXd anchored_pred(test.size());
  for (Eigen::Index i = 0; i < test.size(); ++i) {
    anchored_pred[i] = marginalized_predict(anchored, test.inputs.row(i).transpose(),
                                            prior, 10, rng).mean[0];
  }
  const double plain_mae = mean_absolute_error(test.targets.col(0), plain_pred.col(0));
  const double gap = mean_absolute_error(plain_pred.col(0), anchored_pred);
  CHECK(gap <= 2.0 * plain_mae + 1e-9);
}

TEST_CASE("ensembles need two members and spread with seeds") {
  const Dataset train = line_dataset(60, 1.0, 0.0, 29, 0.4);
  ForestConfig cfg;
  CHECK_THROWS_AS(train_forest_ensemble(train, cfg, 1), std::invalid_argument);

  const EnsembleModel ens = train_forest_ensemble(train, cfg, 3);
  REQUIRE(ens.members.size() == 3);
  const auto summary = ens.predict_summary(Eigen::VectorXd::Constant(1, 0.5));
  CHECK(summary.per_anchor.rows() == 3);
  CHECK(summary.total_variance > 0.0);

  // identical members collapse the spread to zero
  EnsembleModel clones;
  clones.members = {ens.members[0], ens.members[0], ens.members[0]};
  const auto collapsed =
      clones.predict_summary(Eigen::VectorXd::Constant(1, 0.5));
  CHECK(collapsed.total_variance == 0.0);
}
