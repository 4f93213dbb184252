#include "auq/mbo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace auq {
namespace {

constexpr double kScaleFloor = 1e-6;
constexpr double kFdStep = 1e-3;

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// splitmix64 of (seed, restart) so every restart owns an independent stream
std::uint64_t restart_stream(std::uint64_t seed, int restart) {
  std::uint64_t v =
      seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(restart) + 1);
  v ^= v >> 30;
  v *= 0xBF58476D1CE4E5B9ULL;
  v ^= v >> 27;
  v *= 0x94D049BB133111EBULL;
  v ^= v >> 31;
  return v;
}

void check_models(const DeltaModel& fwd, const InverseModel& g) {
  if (!fwd.trained || !g.trained) {
    throw std::runtime_error("both forward and inverse models must be trained");
  }
  if (fwd.task != Task::Regression || fwd.output_dim != 1) {
    throw std::invalid_argument("forward model must be scalar regression");
  }
  if (fwd.input_dim != g.input_dim) {
    throw std::invalid_argument(
        "forward and inverse models disagree on the input dimension");
  }
}

void check_latent(const Eigen::VectorXd& z, int latent_dim) {
  if (static_cast<int>(z.size()) != latent_dim) {
    throw std::invalid_argument("latent vector has the wrong dimension");
  }
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (!(std::abs(z[i]) <= 1.0)) {
      throw std::invalid_argument("latent coordinate " + std::to_string(i) +
                                  " is outside the [-1,1] box");
    }
  }
}

Eigen::MatrixXd latent_inputs(double y_star, const Eigen::MatrixXd& zs) {
  Eigen::MatrixXd u(zs.rows(), 1 + zs.cols());
  u.col(0).setConstant(y_star);
  u.rightCols(zs.cols()) = zs;
  return u;
}

struct BatchValues {
  Eigen::MatrixXd x;           // one decoded input per restart
  Eigen::MatrixXd tuples;      // (restarts * k) anchored rows
  Eigen::VectorXd per_anchor;  // raw forward outputs, restart-major
  Eigen::VectorXd mu, var, b, objective;
};

// zs holds one latent row per restart; anchors holds k rows per restart,
// stacked in restart order. No box validation: callers keep zs projected.
BatchValues eval_batch(const DeltaModel& fwd, const InverseModel& g,
                       double y_star, const Eigen::MatrixXd& zs,
                       const Eigen::MatrixXd& anchors, int k, bool weighted) {
  const auto r_count = zs.rows();
  BatchValues v;
  v.x = g.learner.predict_rows(latent_inputs(y_star, zs));
  v.tuples.resize(r_count * k, fwd.tuple_width());
  for (Eigen::Index r = 0; r < r_count; ++r) {
    v.tuples.middleRows(r * k, k) = anchored_rows(
        v.x.row(r).transpose(), anchors.middleRows(r * k, k), fwd.scheme);
  }
  v.per_anchor = fwd.raw_predict_rows(v.tuples).col(0);
  v.mu.resize(r_count);
  v.var.resize(r_count);
  v.b.resize(r_count);
  v.objective.resize(r_count);
  for (Eigen::Index r = 0; r < r_count; ++r) {
    const auto seg = v.per_anchor.segment(r * k, k);
    v.mu[r] = seg.mean();
    v.var[r] = (seg.array() - v.mu[r]).square().mean();
    v.b[r] = std::max(std::sqrt(std::max(v.var[r], 0.0)), kScaleFloor);
    const double err = std::abs(v.mu[r] - y_star);
    // non-finite values pass through as NaN so the caller can drop the
    // restart rather than abort the whole batch
    if (std::isfinite(err) && std::isfinite(v.b[r])) {
      v.objective[r] = weighted ? objective_given_scale(err, v.b[r]) : err;
    } else {
      v.objective[r] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return v;
}

// Backpropagates the objective through forward net, encoding, and inverse
// net. The decoded x occupies the trailing input_dim tuple columns with unit
// coefficient under every scheme, so those columns carry dJ/dx.
Eigen::MatrixXd analytic_grad_batch(const DeltaModel& fwd,
                                    const InverseModel& g, double y_star,
                                    const Eigen::MatrixXd& zs, int k,
                                    bool weighted, const BatchValues& v) {
  const auto& f_mlp = std::get<MlpLearner>(fwd.learner);
  const auto r_count = zs.rows();
  const int d = fwd.input_dim;

  Eigen::VectorXd upstream(r_count * k);
  for (Eigen::Index r = 0; r < r_count; ++r) {
    const double err = v.mu[r] - y_star;
    const double dj_dmu =
        weighted ? sign_of(err) / v.b[r] : sign_of(err);
    double dj_dvar = 0.0;
    if (weighted && std::sqrt(std::max(v.var[r], 0.0)) > kScaleFloor) {
      const double dj_db = (v.b[r] - std::abs(err)) / (v.b[r] * v.b[r]);
      dj_dvar = dj_db / (2.0 * v.b[r]);
    }
    for (int j = 0; j < k; ++j) {
      const double centered = v.per_anchor[r * k + j] - v.mu[r];
      upstream[r * k + j] =
          dj_dmu / k + dj_dvar * (2.0 / k) * centered;
    }
  }
  const Eigen::MatrixXd f_up = upstream * f_mlp.scaler.scale[0];
  const Eigen::MatrixXd d_tuples = f_mlp.net.input_gradients(v.tuples, f_up);

  Eigen::MatrixXd dx(r_count, d);
  for (Eigen::Index r = 0; r < r_count; ++r) {
    dx.row(r) = d_tuples.middleRows(r * k, k).rightCols(d).colwise().sum();
  }
  const Eigen::MatrixXd g_up =
      dx.array().rowwise() * g.learner.scaler.scale.transpose().array();
  const Eigen::MatrixXd du =
      g.learner.net.input_gradients(latent_inputs(y_star, zs), g_up);
  return du.rightCols(zs.cols());
}

Eigen::MatrixXd fd_grad_batch(const DeltaModel& fwd, const InverseModel& g,
                              double y_star, const Eigen::MatrixXd& zs,
                              const Eigen::MatrixXd& anchors, int k,
                              bool weighted) {
  Eigen::MatrixXd grad(zs.rows(), zs.cols());
  for (Eigen::Index j = 0; j < zs.cols(); ++j) {
    Eigen::MatrixXd probe = zs;
    probe.col(j).array() += kFdStep;
    const Eigen::VectorXd plus =
        eval_batch(fwd, g, y_star, probe, anchors, k, weighted).objective;
    probe.col(j).array() -= 2.0 * kFdStep;
    const Eigen::VectorXd minus =
        eval_batch(fwd, g, y_star, probe, anchors, k, weighted).objective;
    grad.col(j) = (plus - minus) / (2.0 * kFdStep);
  }
  return grad;
}

void check_anchor_block(const DeltaModel& fwd, const Eigen::MatrixXd& anchors) {
  const int expected = fwd.tuple_width() - fwd.input_dim;
  if (anchors.rows() < 1 || anchors.cols() != expected) {
    throw std::invalid_argument("anchor block must be k x " +
                                std::to_string(expected));
  }
}

}  // namespace

double MboTask::thickness(const Eigen::VectorXd& x) const {
  if (static_cast<int>(x.size()) != input_dim) {
    throw std::invalid_argument("input has the wrong dimension");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) sum += sigmoid(4.0 * x[i]);
  return sum;
}

Eigen::VectorXd MboTask::thickness_rows(const Eigen::MatrixXd& xs) const {
  Eigen::VectorXd out(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    out[i] = thickness(xs.row(i).transpose());
  }
  return out;
}

Dataset MboTask::sample_training(int n, std::uint64_t seed) const {
  if (n < 1) {
    throw std::invalid_argument("sample count must be >= 1");
  }
  if (input_dim < 1 || latent_dim < 1) {
    throw std::invalid_argument("task dimensions must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-1.0, 1.0);
  Eigen::MatrixXd xs(n, input_dim);
  Eigen::MatrixXd ys(n, 1);
  const double limit = cap();
  int collected = 0;
  long attempts = 0;
  const long max_attempts = 1000L * n + 1000L;
  Eigen::VectorXd x(input_dim);
  while (collected < n) {
    if (++attempts > max_attempts) {
      throw std::runtime_error(
          "thickness cap rejects nearly every sample; raise cap_fraction");
    }
    for (int j = 0; j < input_dim; ++j) x[j] = box(rng);
    const double y = thickness(x);
    if (y <= limit) {
      xs.row(collected) = x.transpose();
      ys(collected, 0) = y;
      ++collected;
    }
  }
  return Dataset::regression(xs, ys);
}

Eigen::MatrixXd InverseModel::generate_rows(const Eigen::VectorXd& ys,
                                            const Eigen::MatrixXd& zs) const {
  if (!trained) {
    throw std::runtime_error("inverse model is not trained");
  }
  if (static_cast<int>(zs.cols()) != latent_dim) {
    throw std::invalid_argument("latent rows have the wrong dimension");
  }
  if (ys.size() != zs.rows()) {
    throw std::invalid_argument("one target value per latent row required");
  }
  for (Eigen::Index i = 0; i < zs.rows(); ++i) {
    for (Eigen::Index j = 0; j < zs.cols(); ++j) {
      if (!(std::abs(zs(i, j)) <= 1.0)) {
        throw std::invalid_argument(
            "latent coordinate " + std::to_string(j) + " of row " +
            std::to_string(i) + " is outside the [-1,1] box");
      }
    }
  }
  Eigen::MatrixXd u(zs.rows(), 1 + latent_dim);
  u.col(0) = ys;
  u.rightCols(latent_dim) = zs;
  return learner.predict_rows(u);
}

Eigen::VectorXd InverseModel::generate(double y,
                                       const Eigen::VectorXd& z) const {
  const Eigen::VectorXd ys = Eigen::VectorXd::Constant(1, y);
  return generate_rows(ys, z.transpose()).row(0).transpose();
}

InverseModel train_inverse(const Dataset& data, int latent_dim,
                           const MlpConfig& config) {
  if (data.size() == 0) {
    throw std::invalid_argument("inverse training needs a nonempty dataset");
  }
  if (data.classification()) {
    throw std::invalid_argument("inverse training expects regression data");
  }
  if (data.target_dim() != 1) {
    throw std::invalid_argument("inverse training expects a scalar target");
  }
  if (latent_dim < 1) {
    throw std::invalid_argument("latent dimension must be >= 1");
  }
  if (config.learning_rate <= 0.0) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (config.epochs < 1 || config.batch_size < 1) {
    throw std::invalid_argument("epochs and batch size must be >= 1");
  }
  const int n = static_cast<int>(data.size());
  const int d = static_cast<int>(data.dim());
  std::mt19937_64 rng(config.seed);

  MlpLearner learner;
  learner.config = config;
  learner.net = MlpNet(1 + latent_dim, config.hidden, d, rng());
  learner.scaler = config.standardize_targets ? TargetScaler::fit(data.inputs)
                                              : TargetScaler::identity(d);
  const Eigen::MatrixXd x_std = learner.scaler.standardize(data.inputs);

  AdamState adam = AdamState::zeros_like(learner.net);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::uniform_real_distribution<double> box(-1.0, 1.0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (int begin = 0; begin < n; begin += config.batch_size) {
      const int end = std::min(begin + config.batch_size, n);
      const int b = end - begin;
      Eigen::MatrixXd u(b, 1 + latent_dim);
      Eigen::MatrixXd target(b, d);
      for (int j = 0; j < b; ++j) {
        const int row = order[static_cast<std::size_t>(begin + j)];
        u(j, 0) = data.targets(row, 0);
        for (int l = 0; l < latent_dim; ++l) u(j, 1 + l) = box(rng);
        target.row(j) = x_std.row(row);
      }
      MlpNet::Cache cache;
      const Eigen::MatrixXd out = learner.net.forward_cached(u, cache);
      const Eigen::MatrixXd diff = out - target;
      const double loss = diff.squaredNorm() / b;
      MlpNet::Grads grads;
      learner.net.backward(cache, (2.0 / b) * diff, grads);
      adam_step(learner.net, grads, adam, config.learning_rate);
      epoch_loss += loss * b;
    }
    if (!std::isfinite(epoch_loss / n)) {
      throw std::runtime_error("training diverged at epoch " +
                               std::to_string(epoch));
    }
  }

  InverseModel g;
  g.input_dim = d;
  g.latent_dim = latent_dim;
  g.learner = std::move(learner);
  g.trained = true;
  return g;
}

double objective_given_scale(double abs_error, double b) {
  if (!std::isfinite(abs_error) || abs_error < 0.0 || !std::isfinite(b)) {
    throw std::invalid_argument(
        "scale objective needs a finite nonnegative error and finite b");
  }
  const double floored = std::max(b, kScaleFloor);
  return abs_error / floored + std::log(floored);
}

ObjectiveValue evaluate_objective(const DeltaModel& fwd, const InverseModel& g,
                                  double y_star, const Eigen::VectorXd& z,
                                  const Eigen::MatrixXd& anchors,
                                  bool weighted) {
  check_models(fwd, g);
  check_latent(z, g.latent_dim);
  check_anchor_block(fwd, anchors);
  const auto v = eval_batch(fwd, g, y_star, z.transpose(), anchors,
                            static_cast<int>(anchors.rows()), weighted);
  ObjectiveValue out;
  out.objective = v.objective[0];
  out.mu = v.mu[0];
  out.b = v.b[0];
  out.x = v.x.row(0).transpose();
  return out;
}

double mbo_objective(const DeltaModel& fwd, const InverseModel& g,
                     double y_star, const Eigen::VectorXd& z,
                     const AnchorPrior& prior, int k, std::mt19937_64& rng) {
  if (k < 1) {
    throw std::invalid_argument("anchor count must be >= 1");
  }
  const Eigen::MatrixXd anchors = sample_anchor_block(prior, k, fwd.scheme, rng);
  return evaluate_objective(fwd, g, y_star, z, anchors, true).objective;
}

Eigen::VectorXd analytic_gradient(const DeltaModel& fwd, const InverseModel& g,
                                  double y_star, const Eigen::VectorXd& z,
                                  const Eigen::MatrixXd& anchors,
                                  bool weighted) {
  check_models(fwd, g);
  check_latent(z, g.latent_dim);
  check_anchor_block(fwd, anchors);
  if (!std::holds_alternative<MlpLearner>(fwd.learner)) {
    throw std::invalid_argument(
        "forward learner has no analytic input gradients");
  }
  const int k = static_cast<int>(anchors.rows());
  const auto v =
      eval_batch(fwd, g, y_star, z.transpose(), anchors, k, weighted);
  return analytic_grad_batch(fwd, g, y_star, z.transpose(), k, weighted, v)
      .row(0)
      .transpose();
}

Eigen::VectorXd finite_difference_gradient(const DeltaModel& fwd,
                                           const InverseModel& g,
                                           double y_star,
                                           const Eigen::VectorXd& z,
                                           const Eigen::MatrixXd& anchors,
                                           bool weighted) {
  check_models(fwd, g);
  check_latent(z, g.latent_dim);
  check_anchor_block(fwd, anchors);
  return fd_grad_batch(fwd, g, y_star, z.transpose(), anchors,
                       static_cast<int>(anchors.rows()), weighted)
      .row(0)
      .transpose();
}

MboOutcome optimize_latent(const DeltaModel& fwd, const InverseModel& g,
                           double y_star, const LatentSearchConfig& config) {
  check_models(fwd, g);
  if (config.restarts < 1) {
    throw std::invalid_argument("latent search needs at least one restart");
  }
  if (config.iterations < 0) {
    throw std::invalid_argument("iteration count must be >= 0");
  }
  if (config.anchors_k < 1) {
    throw std::invalid_argument("anchor count must be >= 1");
  }
  if (config.step <= 0.0) {
    throw std::invalid_argument("step size must be positive");
  }
  const int r_count = config.restarts;
  const int latent = g.latent_dim;
  const int k = config.anchors_k;
  const bool analytic = std::holds_alternative<MlpLearner>(fwd.learner);

  Eigen::MatrixXd z0(r_count, latent);
  Eigen::MatrixXd anchors(r_count * k, fwd.tuple_width() - fwd.input_dim);
  for (int r = 0; r < r_count; ++r) {
    std::mt19937_64 rng(restart_stream(config.seed, r));
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    for (int j = 0; j < latent; ++j) z0(r, j) = box(rng);
    anchors.middleRows(r * k, k) =
        sample_anchor_block(fwd.prior, k, fwd.scheme, rng);
  }

  auto solve = [&](bool weighted) -> LatentSolution {
    Eigen::MatrixXd zs = z0;
    std::vector<char> alive(static_cast<std::size_t>(r_count), 1);
    std::vector<std::vector<double>> traces(
        static_cast<std::size_t>(r_count));

    auto mark_dead = [&](int r) {
      alive[static_cast<std::size_t>(r)] = 0;
      zs.row(r) = z0.row(r);  // keep the matrix finite for the batched math
    };

    BatchValues vals;
    for (int iter = 0; iter < config.iterations; ++iter) {
      vals = eval_batch(fwd, g, y_star, zs, anchors, k, weighted);
      Eigen::MatrixXd grad =
          analytic
              ? analytic_grad_batch(fwd, g, y_star, zs, k, weighted, vals)
              : fd_grad_batch(fwd, g, y_star, zs, anchors, k, weighted);
      for (int r = 0; r < r_count; ++r) {
        if (!alive[static_cast<std::size_t>(r)]) continue;
        if (!std::isfinite(vals.objective[r]) ||
            !grad.row(r).allFinite()) {
          mark_dead(r);
          continue;
        }
        traces[static_cast<std::size_t>(r)].push_back(vals.objective[r]);
        zs.row(r) = (zs.row(r) - config.step * grad.row(r))
                        .cwiseMax(-1.0)
                        .cwiseMin(1.0);
      }
    }

    vals = eval_batch(fwd, g, y_star, zs, anchors, k, weighted);
    int winner = -1;
    for (int r = 0; r < r_count; ++r) {
      if (!alive[static_cast<std::size_t>(r)]) continue;
      if (!std::isfinite(vals.objective[r])) {
        mark_dead(r);
        continue;
      }
      traces[static_cast<std::size_t>(r)].push_back(vals.objective[r]);
      if (winner < 0 || vals.objective[r] < vals.objective[winner]) {
        winner = r;
      }
    }
    if (winner < 0) {
      throw std::runtime_error("every latent restart diverged");
    }

    LatentSolution sol;
    sol.z = zs.row(winner).transpose();
    sol.x = vals.x.row(winner).transpose();
    sol.objective = vals.objective[winner];
    sol.mu = vals.mu[winner];
    sol.b = vals.b[winner];
    sol.restart = winner;
    sol.trace = traces[static_cast<std::size_t>(winner)];
    return sol;
  };

  MboOutcome out;
  out.y_star = y_star;
  out.weighted = solve(true);
  out.vanilla = solve(false);
  return out;
}

}  // namespace auq
