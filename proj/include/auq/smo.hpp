#pragma once
// Sequential model optimization: fit an anchored surrogate to the points
// observed so far, pick the next query by expected improvement over a random
// candidate pool, evaluate the objective there, repeat.

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "auq/encoding.hpp"
#include "auq/functions.hpp"
#include "auq/model.hpp"

namespace auq {

struct SmoConfig {
  Benchmark objective;
  int n_init = 6;            // uniform samples drawn before the loop
  int n_iterations = 50;
  int pool_size = 2048;      // candidates per iteration, resampled each time
  int anchors_k = 10;        // anchors marginalized per candidate
  int refit_epochs = 200;
  double learning_rate = 1e-3;
  int batch_size = 16;
  bool warm_start = false;   // reuse previous weights instead of refitting fresh
  int warm_start_after = 0;  // iterations that still refit fresh when warm_start is on
  std::uint64_t seed = 0;
};

struct SmoRecord {
  int iteration = 0;   // 0 for the initial design
  Eigen::VectorXd x;
  double y = 0.0;
  double best = 0.0;   // running maximum up to and including this row
  double ei = 0.0;     // acquisition value at the query, 0 for initial rows
  double mu = 0.0;     // surrogate mean at the query, 0 for initial rows
  double sigma = 0.0;  // surrogate sd at the query, 0 for initial rows
};

struct SmoTrace {
  std::vector<SmoRecord> records;

  double best() const;
  // columns: iteration, x0..x{d-1}, y, best, ei, mu, sigma
  void save_csv(const std::filesystem::path& path) const;
};

// EI under a Gaussian belief N(mu, sigma^2) about the value at a point,
// relative to the best observation seen so far; sigma is floored at 1e-9.
double expected_improvement(double mu, double sigma, double best);

struct Proposal {
  int index = 0;     // chosen pool row
  double ei = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
};

// Scores every pool row against one shared block of k prior anchors and
// returns the row with the largest EI; ties go to the lowest index. Sigma is
// the square root of the summary's total variance.
Proposal propose_candidate(const DeltaModel& model, const AnchorPrior& prior,
                           int k, const Eigen::MatrixXd& pool, double best,
                           std::mt19937_64& rng);

// The chosen candidate itself.
Eigen::VectorXd propose(const DeltaModel& model, const AnchorPrior& prior,
                        int k, const Eigen::MatrixXd& pool, double best,
                        std::mt19937_64& rng);

SmoTrace run_smo(const SmoConfig& config);

}  // namespace auq
