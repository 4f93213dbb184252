#pragma once
// Model-based inversion: search the latent input of an inverse generator so
// the forward surrogate hits a target value, trading prediction error against
// the surrogate's own uncertainty.

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <vector>

#include "auq/dataset.hpp"
#include "auq/encoding.hpp"
#include "auq/mlp.hpp"
#include "auq/model.hpp"

namespace auq {

// Synthetic inversion benchmark. Inputs live in [-1,1]^input_dim, the
// ground-truth response is the thickness sum_i sigmoid(4 x_i), and training
// data are capped at thickness <= cap_fraction * input_dim, so targets above
// the cap require extrapolation.
struct MboTask {
  int input_dim = 16;
  int latent_dim = 8;
  double cap_fraction = 0.6;

  double cap() const { return cap_fraction * input_dim; }
  double thickness(const Eigen::VectorXd& x) const;
  Eigen::VectorXd thickness_rows(const Eigen::MatrixXd& xs) const;
  // n below-cap samples, drawn from U[-1,1]^input_dim by rejection
  Dataset sample_training(int n, std::uint64_t seed) const;
};

// MLP mapping [y | z] -> x; z comes from the uniform latent box [-1,1].
struct InverseModel {
  int input_dim = 0;  // dimension of the produced x
  int latent_dim = 0;
  MlpLearner learner;
  bool trained = false;

  // throws when z leaves the latent box
  Eigen::VectorXd generate(double y, const Eigen::VectorXd& z) const;
  // row i pairs ys[i] with zs.row(i)
  Eigen::MatrixXd generate_rows(const Eigen::VectorXd& ys,
                                const Eigen::MatrixXd& zs) const;
};

// Reconstruction training: every batch pairs its (x, y) samples with freshly
// drawn latent z and regresses g(y, z) onto x.
InverseModel train_inverse(const Dataset& data, int latent_dim,
                           const MlpConfig& config);

// abs_error / b + ln b with b floored at 1e-6: the scale tradeoff of the
// objective in isolation. Its minimum over b sits at b = abs_error.
double objective_given_scale(double abs_error, double b);

struct ObjectiveValue {
  double objective = 0.0;
  double mu = 0.0;
  double b = 0.0;
  Eigen::VectorXd x;
};

// Deterministic evaluation against an explicit anchor block; weighted=false
// drops the scale term and scores |mu - y_star| alone. The forward model must
// be scalar regression.
ObjectiveValue evaluate_objective(const DeltaModel& fwd, const InverseModel& g,
                                  double y_star, const Eigen::VectorXd& z,
                                  const Eigen::MatrixXd& anchors,
                                  bool weighted = true);

// Prior-sampling form: k fresh anchors per call.
double mbo_objective(const DeltaModel& fwd, const InverseModel& g,
                     double y_star, const Eigen::VectorXd& z,
                     const AnchorPrior& prior, int k, std::mt19937_64& rng);

// Gradient of the objective in z. The analytic path backpropagates through
// both networks and needs an MLP forward learner; the finite-difference path
// (central, h = 1e-3) only needs objective evaluations, so it also serves
// learners without input gradients. FD probes may step h outside the box.
Eigen::VectorXd analytic_gradient(const DeltaModel& fwd, const InverseModel& g,
                                  double y_star, const Eigen::VectorXd& z,
                                  const Eigen::MatrixXd& anchors,
                                  bool weighted = true);
Eigen::VectorXd finite_difference_gradient(const DeltaModel& fwd,
                                           const InverseModel& g,
                                           double y_star,
                                           const Eigen::VectorXd& z,
                                           const Eigen::MatrixXd& anchors,
                                           bool weighted = true);

struct LatentSearchConfig {
  int restarts = 50;
  int iterations = 1000;
  double step = 0.02;
  int anchors_k = 10;
  std::uint64_t seed = 0;
};

struct LatentSolution {
  Eigen::VectorXd z;          // inside the latent box
  Eigen::VectorXd x;          // g(y_star, z)
  double objective = 0.0;
  double mu = 0.0;
  double b = 0.0;
  int restart = 0;            // winning restart index
  std::vector<double> trace;  // winner's objective, initial value then one
                              // entry per iteration
};

struct MboOutcome {
  double y_star = 0.0;
  LatentSolution weighted;
  LatentSolution vanilla;  // same starts, |mu - y_star| alone
};

// Projected gradient descent from `restarts` random starts, each with its own
// rng stream derived from (seed, restart index); anchors are drawn once per
// restart and held fixed. Returns the restart with the lowest final
// objective. A restart whose objective turns non-finite is dropped; all of
// them failing is an error.
MboOutcome optimize_latent(const DeltaModel& fwd, const InverseModel& g,
                           double y_star, const LatentSearchConfig& config);

}  // namespace auq
