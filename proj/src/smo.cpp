#include "auq/smo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace auq {
namespace {

constexpr double kSigmaFloor = 1e-9;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

}  // namespace

double expected_improvement(double mu, double sigma, double best) {
  if (!std::isfinite(mu) || !std::isfinite(sigma) || !std::isfinite(best)) {
    throw std::invalid_argument("expected improvement needs finite inputs");
  }
  if (sigma < 0.0) {
    throw std::invalid_argument("sigma must be nonnegative");
  }
  const double s = std::max(sigma, kSigmaFloor);
  const double z = (mu - best) / s;
  const double ei = (mu - best) * normal_cdf(z) + s * normal_pdf(z);
  return std::max(ei, 0.0);
}

Proposal propose_candidate(const DeltaModel& model, const AnchorPrior& prior,
                           int k, const Eigen::MatrixXd& pool, double best,
                           std::mt19937_64& rng) {
  if (pool.rows() == 0) {
    throw std::invalid_argument("candidate pool is empty");
  }
  if (k < 1) {
    throw std::invalid_argument("anchor count must be >= 1");
  }
  const Eigen::MatrixXd anchors = sample_anchor_block(prior, k, model.scheme, rng);
  const auto summaries = predict_batch_with_anchors(model, pool, anchors);

  Proposal chosen;
  chosen.index = -1;
  for (int i = 0; i < static_cast<int>(summaries.size()); ++i) {
    const double mu = summaries[static_cast<std::size_t>(i)].mean[0];
    const double sigma =
        std::sqrt(summaries[static_cast<std::size_t>(i)].total_variance);
    const double ei = expected_improvement(mu, sigma, best);
    if (chosen.index < 0 || ei > chosen.ei) {
      chosen = {i, ei, mu, sigma};
    }
  }
  return chosen;
}

Eigen::VectorXd propose(const DeltaModel& model, const AnchorPrior& prior,
                        int k, const Eigen::MatrixXd& pool, double best,
                        std::mt19937_64& rng) {
  const auto chosen = propose_candidate(model, prior, k, pool, best, rng);
  return pool.row(chosen.index).transpose();
}

double SmoTrace::best() const {
  if (records.empty()) {
    throw std::runtime_error("empty trace has no best value");
  }
  return records.back().best;
}

void SmoTrace::save_csv(const std::filesystem::path& path) const {
  if (records.empty()) {
    throw std::runtime_error("empty trace cannot be saved");
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write trace file '" + path.string() + "'");
  }
  const auto d = records.front().x.size();
  out << "iteration";
  for (Eigen::Index j = 0; j < d; ++j) out << ",x" << j;
  out << ",y,best,ei,mu,sigma\n";
  out.precision(17);
  for (const auto& r : records) {
    out << r.iteration;
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << r.x[j];
    out << ',' << r.y << ',' << r.best << ',' << r.ei << ',' << r.mu << ','
        << r.sigma << '\n';
  }
}

SmoTrace run_smo(const SmoConfig& config) {
  const Benchmark& fn = config.objective;
  if (fn.dim() < 1) {
    throw std::invalid_argument("objective has no domain box");
  }
  if (config.n_init < 2) {
    throw std::invalid_argument("initial design needs at least two samples");
  }
  if (config.n_iterations < 0) {
    throw std::invalid_argument("iteration count must be >= 0");
  }
  if (config.pool_size < 1) {
    throw std::invalid_argument("candidate pool size must be >= 1");
  }
  if (config.warm_start_after < 0) {
    throw std::invalid_argument("warm start threshold must be >= 0");
  }

  std::mt19937_64 rng(config.seed);
  const int d = fn.dim();

  Eigen::MatrixXd xs = sample_uniform_box(fn.lower, fn.upper, config.n_init, rng);
  Eigen::MatrixXd ys(config.n_init, 1);
  SmoTrace trace;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < config.n_init; ++i) {
    ys(i, 0) = eval_benchmark(fn, xs.row(i).transpose());
    best = std::max(best, ys(i, 0));
    SmoRecord rec;
    rec.iteration = 0;
    rec.x = xs.row(i).transpose();
    rec.y = ys(i, 0);
    rec.best = best;
    trace.records.push_back(std::move(rec));
  }

  MlpConfig mlp;
  mlp.hidden = {128, 128, 128};
  mlp.learning_rate = config.learning_rate;
  mlp.epochs = config.refit_epochs;
  mlp.batch_size = config.batch_size;

  DeltaModel model;
  for (int it = 1; it <= config.n_iterations; ++it) {
    const Dataset observed = Dataset::regression(xs, ys);
    const auto prior = AnchorPrior::train_distribution(xs, rng());
    mlp.seed = rng();
    const MlpNet* warm =
        (config.warm_start && it > config.warm_start_after && model.trained)
            ? &std::get<MlpLearner>(model.learner).net
            : nullptr;
    model = train_anchored_mlp(observed, mlp, EncodingScheme::SingleAnchor,
                               prior, warm);

    const Eigen::MatrixXd pool =
        sample_uniform_box(fn.lower, fn.upper, config.pool_size, rng);
    const auto chosen =
        propose_candidate(model, prior, config.anchors_k, pool, best, rng);

    SmoRecord rec;
    rec.iteration = it;
    rec.x = pool.row(chosen.index).transpose();
    rec.y = eval_benchmark(fn, rec.x);
    best = std::max(best, rec.y);
    rec.best = best;
    rec.ei = chosen.ei;
    rec.mu = chosen.mu;
    rec.sigma = chosen.sigma;
    trace.records.push_back(std::move(rec));

    const auto old_n = xs.rows();
    xs.conservativeResize(old_n + 1, d);
    ys.conservativeResize(old_n + 1, 1);
    xs.row(old_n) = trace.records.back().x.transpose();
    ys(old_n, 0) = trace.records.back().y;
  }
  return trace;
}

}  // namespace auq
