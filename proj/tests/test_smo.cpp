#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "auq/csv.hpp"
#include "auq/functions.hpp"
#include "auq/model.hpp"
#include "auq/smo.hpp"

using namespace auq;
namespace fs = std::filesystem;

namespace {

struct TempFile {
  fs::path path;
  explicit TempFile(const char* stem) {
    path = fs::temp_directory_path() /
           (std::string(stem) + std::to_string(std::random_device{}()) + ".csv");
  }
  ~TempFile() {
    std::error_code ec;
    fs::remove(path, ec);
  }
};

// Monte Carlo estimate of E[max(0, V - best)] for V ~ N(mu, sigma^2),
// with the standard error of that estimate.
struct McEstimate {
  double mean;
  double se;
};
McEstimate ei_monte_carlo(double mu, double sigma, double best, int draws,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = mu + sigma * gauss(rng);
    const double gain = std::max(0.0, v - best);
    sum += gain;
    sum_sq += gain * gain;
  }
  const double mean = sum / draws;
  const double var = sum_sq / draws - mean * mean;
  return {mean, std::sqrt(var / draws)};
}

// Surrogate whose output is a fixed linear map of the raw input, unaffected
// by the anchor: with single-anchor tuples [r | x - r], weights [a; a] give
// a.(r) + a.(x - r) = a.x for every anchor.
DeltaModel anchor_invariant_model(double slope, double intercept) {
  DeltaModel model;
  model.scheme = EncodingScheme::SingleAnchor;
  model.task = Task::Regression;
  model.input_dim = 1;
  model.output_dim = 1;
  model.prior = AnchorPrior::standard_normal(1, 0);
  MlpLearner learner;
  learner.net = MlpNet(2, {}, 1, 0);
  learner.net.weights[0] << slope, slope;
  learner.net.biases[0] << intercept;
  learner.scaler = TargetScaler::identity(1);
  model.learner = learner;
  model.trained = true;
  return model;
}

}  // namespace

TEST_CASE("expected improvement matches its closed-form trivial cases") {
  // at mu == best the sigma floor leaves 1e-9 * pdf(0), i.e. zero at floor
  // resolution
  CHECK(expected_improvement(0.0, 0.0, 0.0) <= 1e-9);
  CHECK(expected_improvement(-3.0, 0.0, 0.0) == 0.0);
  CHECK(expected_improvement(1.0, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("expected improvement agrees with a Monte Carlo oracle") {
  const auto cases = {std::tuple{1.0, 1.0, 0.0}, std::tuple{0.0, 2.0, 1.0},
                      std::tuple{-1.0, 0.5, 0.5}, std::tuple{2.5, 0.3, 2.0}};
  int idx = 0;
  for (const auto& [mu, sigma, best] : cases) {
    const auto mc = ei_monte_carlo(mu, sigma, best, 1000000, 42 + idx++);
    const double ei = expected_improvement(mu, sigma, best);
    CHECK(std::abs(ei - mc.mean) < 3.0 * mc.se + 1e-12);
  }
  // the documented reference value for (1, 1, 0)
  CHECK(expected_improvement(1.0, 1.0, 0.0) ==
        doctest::Approx(1.0833).epsilon(1e-3));
}

TEST_CASE("expected improvement collapses to hinge gain as sigma shrinks") {
  for (double mu : {-0.7, 0.0, 0.4, 2.0}) {
    for (double sigma = 1e-1; sigma >= 1e-9; sigma *= 1e-1) {
      const double ei = expected_improvement(mu, sigma, 0.0);
      CHECK(ei >= 0.0);
      CHECK(std::abs(ei - std::max(0.0, mu)) < 2.0 * sigma + 1e-12);
    }
  }
}

TEST_CASE("expected improvement increases with mu at fixed sigma") {
  double prev = expected_improvement(-2.0, 0.5, 0.0);
  for (double mu = -1.8; mu <= 2.0; mu += 0.2) {
    const double cur = expected_improvement(mu, 0.5, 0.0);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("expected improvement rejects bad inputs") {
  const double inf = std::numeric_limits<double>::infinity();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(expected_improvement(inf, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(expected_improvement(0.0, nan, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(expected_improvement(0.0, 1.0, -inf), std::invalid_argument);
  CHECK_THROWS_AS(expected_improvement(0.0, -0.5, 0.0), std::invalid_argument);
}

TEST_CASE("propose returns the only candidate in a singleton pool") {
  const auto model = anchor_invariant_model(1.0, 0.0);
  Eigen::MatrixXd pool(1, 1);
  pool << 0.37;
  std::mt19937_64 rng(1);
  const auto x = propose(model, model.prior, 4, pool, 10.0, rng);
  CHECK(x[0] == 0.37);
}

TEST_CASE("propose picks the sole improving point of a certain model") {
  // slope 1 surrogate predicts x exactly; only x=2 improves on best=1
  const auto model = anchor_invariant_model(1.0, 0.0);
  Eigen::MatrixXd pool(4, 1);
  pool << -1.0, 0.5, 2.0, 0.9;
  std::mt19937_64 rng(3);
  const auto chosen = propose_candidate(model, model.prior, 8, pool, 1.0, rng);
  CHECK(chosen.index == 2);
  CHECK(chosen.mu == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("bitwise-equal acquisition values go to the lowest index") {
  // zero slope makes every candidate's summary identical
  const auto model = anchor_invariant_model(0.0, 0.5);
  Eigen::MatrixXd pool(5, 1);
  pool << 0.1, -0.4, 0.9, 0.0, 0.3;
  std::mt19937_64 rng(7);
  const auto chosen = propose_candidate(model, model.prior, 4, pool, 0.0, rng);
  CHECK(chosen.index == 0);
}

TEST_CASE("propose rejects empty pools and untrained models") {
  const auto model = anchor_invariant_model(1.0, 0.0);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(
      propose(model, model.prior, 4, Eigen::MatrixXd(0, 1), 0.0, rng),
      std::invalid_argument);
  DeltaModel untrained;
  untrained.scheme = EncodingScheme::SingleAnchor;
  untrained.input_dim = 1;
  Eigen::MatrixXd pool(1, 1);
  pool << 0.0;
  CHECK_THROWS_AS(
      propose(untrained, AnchorPrior::standard_normal(1, 0), 4, pool, 0.0, rng),
      std::runtime_error);
}

TEST_CASE("zero iterations yields exactly the initial design") {
  SmoConfig cfg;
  cfg.objective = make_benchmark(BenchmarkId::Sinusoid1D);
  cfg.n_iterations = 0;
  cfg.seed = 5;
  const auto trace = run_smo(cfg);
  REQUIRE(trace.records.size() == 6);
  double max_y = trace.records[0].y;
  for (const auto& r : trace.records) {
    CHECK(r.iteration == 0);
    CHECK(r.ei == 0.0);
    max_y = std::max(max_y, r.y);
  }
  CHECK(trace.best() == max_y);
}

TEST_CASE("best-so-far never decreases along a trace") {
  SmoConfig cfg;
  cfg.objective = make_benchmark(BenchmarkId::MultiOptima1D);
  cfg.n_iterations = 4;
  cfg.pool_size = 128;
  cfg.refit_epochs = 40;
  cfg.seed = 11;
  const auto trace = run_smo(cfg);
  REQUIRE(trace.records.size() == 10);
  double prev = -1e300;
  for (const auto& r : trace.records) {
    CHECK(r.best >= prev);
    CHECK(r.best >= r.y - 1e-15);
    prev = r.best;
  }
}

TEST_CASE("traces are deterministic given the seed") {
  SmoConfig cfg;
  cfg.objective = make_benchmark(BenchmarkId::Sinusoid1D);
  cfg.n_iterations = 3;
  cfg.pool_size = 64;
  cfg.refit_epochs = 30;
  cfg.seed = 21;
  const auto a = run_smo(cfg);
  const auto b = run_smo(cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].x[0] == b.records[i].x[0]);
    CHECK(a.records[i].y == b.records[i].y);
    CHECK(a.records[i].best == b.records[i].best);
    CHECK(a.records[i].ei == b.records[i].ei);
  }
}

TEST_CASE("warm-started runs keep the trace invariants") {
  SmoConfig cfg;
  cfg.objective = make_benchmark(BenchmarkId::Sinusoid1D);
  cfg.n_iterations = 3;
  cfg.pool_size = 64;
  cfg.refit_epochs = 30;
  cfg.warm_start = true;
  cfg.seed = 2;
  const auto trace = run_smo(cfg);
  REQUIRE(trace.records.size() == 9);
  double prev = -1e300;
  for (const auto& r : trace.records) {
    CHECK(r.best >= prev);
    prev = r.best;
  }
  const auto again = run_smo(cfg);
  CHECK(again.best() == trace.best());
}

TEST_CASE("a warm-start threshold past the last iteration matches cold refits") {
  SmoConfig cold;
  cold.objective = make_benchmark(BenchmarkId::Sinusoid1D);
  cold.n_iterations = 3;
  cold.pool_size = 64;
  cold.refit_epochs = 30;
  cold.seed = 5;
  SmoConfig staged = cold;
  staged.warm_start = true;
  staged.warm_start_after = cold.n_iterations;
  const auto a = run_smo(cold);
  const auto b = run_smo(staged);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].x[0] == b.records[i].x[0]);
    CHECK(a.records[i].y == b.records[i].y);
    CHECK(a.records[i].ei == b.records[i].ei);
  }
  SmoConfig bad = staged;
  bad.warm_start_after = -1;
  CHECK_THROWS_AS(run_smo(bad), std::invalid_argument);
}

TEST_CASE("a short run makes clear progress on the sinusoid") {
  SmoConfig cfg;
  cfg.objective = make_benchmark(BenchmarkId::Sinusoid1D);
  cfg.n_iterations = 15;
  cfg.pool_size = 512;
  cfg.seed = 1;
  const auto trace = run_smo(cfg);
  const double init_best = trace.records[5].best;
  CHECK(trace.best() >= init_best + 3.0);
  CHECK(trace.best() >= 7.0);
}

TEST_CASE("trace csv round-trips through the table reader") {
  SmoConfig cfg;
  cfg.objective = make_benchmark(BenchmarkId::Booth2D, 0, true);
  cfg.n_iterations = 2;
  cfg.pool_size = 32;
  cfg.refit_epochs = 20;
  cfg.seed = 9;
  const auto trace = run_smo(cfg);
  TempFile tmp("auq_smo_trace");
  trace.save_csv(tmp.path);
  const auto table = load_table(tmp.path);
  REQUIRE(table.columns.size() == 8);
  CHECK(table.columns[0] == "iteration");
  CHECK(table.columns[1] == "x0");
  CHECK(table.columns[2] == "x1");
  CHECK(table.columns[3] == "y");
  CHECK(table.columns[7] == "sigma");
  REQUIRE(table.values.rows() == 8);
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    CHECK(table.values(r, 0) == trace.records[i].iteration);
    CHECK(table.values(r, 3) == trace.records[i].y);
    CHECK(table.values(r, 4) == trace.records[i].best);
  }
}

TEST_CASE("invalid configurations are rejected") {
  SmoConfig cfg;
  cfg.objective = make_benchmark(BenchmarkId::Sinusoid1D);
  cfg.n_init = 1;
  CHECK_THROWS_AS(run_smo(cfg), std::invalid_argument);
  cfg.n_init = 6;
  cfg.pool_size = 0;
  CHECK_THROWS_AS(run_smo(cfg), std::invalid_argument);
  cfg.pool_size = 10;
  cfg.n_iterations = -1;
  CHECK_THROWS_AS(run_smo(cfg), std::invalid_argument);
  SmoConfig no_objective;
  CHECK_THROWS_AS(run_smo(no_objective), std::invalid_argument);
}
