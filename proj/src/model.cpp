#include "auq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace auq {
namespace {

void check_prior(const Dataset& train, const AnchorPrior& prior) {
  if (prior.dim() != train.dim()) {
    throw std::invalid_argument(
        "anchor prior dimension " + std::to_string(prior.dim()) +
        " does not match feature dimension " + std::to_string(train.dim()));
  }
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m,
                            const std::vector<int>& idx, int begin, int end) {
  Eigen::MatrixXd out(end - begin, m.cols());
  for (int i = begin; i < end; ++i) {
    out.row(i - begin) = m.row(idx[static_cast<std::size_t>(i)]);
  }
  return out;
}

// softmax cross-entropy over logit rows; fills dloss with d(mean loss)/dlogit
double softmax_ce(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                  int begin, const std::vector<int>& order,
                  Eigen::MatrixXd& dloss) {
  const auto b = logits.rows();
  dloss.resize(b, logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const int label = labels[static_cast<std::size_t>(
        order[static_cast<std::size_t>(begin + i)])];
    const Eigen::ArrayXd shifted =
        logits.row(i).transpose().array() - logits.row(i).maxCoeff();
    const Eigen::ArrayXd e = shifted.exp();
    const Eigen::ArrayXd p = e / e.sum();
    loss -= std::log(std::max(p[label], 1e-300));
    dloss.row(i) = p.transpose();
    dloss(i, label) -= 1.0;
  }
  dloss /= static_cast<double>(b);
  return loss / static_cast<double>(b);
}

// Shared minibatch Adam loop. build_inputs maps (order, begin, end) to the
// network's input rows for that batch; it may consume rng (anchor draws).
template <typename BuildInputs>
MlpLearner fit_mlp_loop(const Dataset& train, const MlpConfig& cfg, Task task,
                        int in_dim, int out_dim, std::mt19937_64& rng,
                        BuildInputs&& build_inputs,
                        const MlpNet* warm_start = nullptr) {
  if (cfg.learning_rate <= 0.0) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (cfg.epochs < 1 || cfg.batch_size < 1) {
    throw std::invalid_argument("epochs and batch size must be >= 1");
  }
  const int n = static_cast<int>(train.size());

  MlpLearner learner;
  learner.config = cfg;
  if (warm_start != nullptr) {
    if (warm_start->weights.empty() ||
        warm_start->weights.front().rows() != in_dim ||
        warm_start->weights.back().cols() != out_dim) {
      throw std::invalid_argument(
          "warm-start network does not match the requested shape");
    }
    learner.net = *warm_start;
  } else {
    learner.net = MlpNet(in_dim, cfg.hidden, out_dim, rng());
  }
  learner.scaler = (task == Task::Regression && cfg.standardize_targets)
                       ? TargetScaler::fit(train.targets)
                       : TargetScaler::identity(out_dim);
  const Eigen::MatrixXd y_std = task == Task::Regression
                                    ? learner.scaler.standardize(train.targets)
                                    : Eigen::MatrixXd();

  AdamState adam = AdamState::zeros_like(learner.net);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (int begin = 0; begin < n; begin += cfg.batch_size) {
      const int end = std::min(begin + cfg.batch_size, n);
      const int b = end - begin;
      const Eigen::MatrixXd inputs = build_inputs(order, begin, end);

      MlpNet::Cache cache;
      const Eigen::MatrixXd out = learner.net.forward_cached(inputs, cache);
      Eigen::MatrixXd dloss;
      double loss = 0.0;
      if (task == Task::Regression) {
        const Eigen::MatrixXd diff = out - gather_rows(y_std, order, begin, end);
        loss = diff.squaredNorm() / b;
        dloss = (2.0 / b) * diff;
      } else {
        loss = softmax_ce(out, train.labels, begin, order, dloss);
      }
      MlpNet::Grads grads;
      learner.net.backward(cache, dloss, grads);
      adam_step(learner.net, grads, adam, cfg.learning_rate);
      epoch_loss += loss * b;
    }
    if (!std::isfinite(epoch_loss / n)) {
      throw std::runtime_error("training diverged at epoch " +
                               std::to_string(epoch));
    }
  }
  return learner;
}

// Reversed-batch anchor pairing with prior fallback for rows that would pair
// with themselves, plus full prior draws when one batch spans the dataset.
Eigen::MatrixXd training_anchors(const Eigen::MatrixXd& x,
                                 const std::vector<int>& order, int begin,
                                 int end, int n, int batch_size,
                                 EncodingScheme scheme,
                                 const AnchorPrior& prior,
                                 std::mt19937_64& rng) {
  const int b = end - begin;
  const int d = static_cast<int>(x.cols());
  Eigen::MatrixXd first(b, d);
  if (batch_size >= n || b == 1) {
    first = sample_anchor_matrix(prior, b, rng);
  } else {
    for (int j = 0; j < b; ++j) {
      const int partner = b - 1 - j;
      if (partner == j) {
        first.row(j) = sample_anchor_matrix(prior, 1, rng).row(0);
      } else {
        first.row(j) =
            x.row(order[static_cast<std::size_t>(begin + partner)]);
      }
    }
  }
  if (scheme != EncodingScheme::DoubleAnchor) {
    return first;
  }
  Eigen::MatrixXd block(b, 2 * d);
  block.leftCols(d) = first;
  block.rightCols(d) = sample_anchor_matrix(prior, b, rng);
  return block;
}

// A distinct anchors shared by the whole training set, so each anchor slice
// carries a complete copy of the data (repeats are accepted only if the
// prior's support is too small to avoid them).
Eigen::MatrixXd draw_anchor_set(EncodingScheme scheme, const AnchorPrior& prior,
                                int replication, std::mt19937_64& rng) {
  const int anchor_cols =
      scheme == EncodingScheme::DoubleAnchor ? 2 * prior.dim() : prior.dim();
  Eigen::MatrixXd anchors(replication, anchor_cols);
  int filled = 0;
  int attempts = 0;
  while (filled < replication) {
    const Eigen::MatrixXd draw = sample_anchor_block(prior, 1, scheme, rng);
    bool duplicate = false;
    for (int j = 0; j < filled && attempts < 20 * replication; ++j) {
      if ((anchors.row(j) - draw.row(0)).norm() == 0.0) duplicate = true;
    }
    ++attempts;
    if (duplicate) continue;
    anchors.row(filled++) = draw.row(0);
  }
  return anchors;
}

Eigen::MatrixXd replicate_with_anchors(const Eigen::MatrixXd& x,
                                       EncodingScheme scheme,
                                       const Eigen::MatrixXd& anchors) {
  const auto n = x.rows();
  const auto replication = anchors.rows();
  const int width = tuple_dim(scheme, static_cast<int>(x.cols()));
  Eigen::MatrixXd rows(n * replication, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    rows.middleRows(i * replication, replication) =
        anchored_rows(x.row(i).transpose(), anchors, scheme);
  }
  return rows;
}

template <typename Matrix>
Matrix replicate_rows(const Matrix& y, int replication) {
  Matrix out(y.rows() * replication, y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (int a = 0; a < replication; ++a) {
      out.row(i * replication + a) = y.row(i);
    }
  }
  return out;
}

bool all_rows_equal(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 1; i < m.rows(); ++i) {
    if (m.row(i) != m.row(0)) return false;
  }
  return true;
}

}  // namespace

const char* DeltaModel::learner_name() const {
  if (std::holds_alternative<MlpLearner>(learner)) return "mlp";
  if (std::holds_alternative<ForestLearner>(learner)) return "forest";
  return "ksvm";
}

Eigen::MatrixXd DeltaModel::raw_predict_rows(
    const Eigen::MatrixXd& tuple_rows) const {
  if (!trained) {
    throw std::runtime_error("model is untrained");
  }
  if (tuple_rows.cols() != tuple_width()) {
    throw std::invalid_argument("model expects tuple width " +
                                std::to_string(tuple_width()) + ", got " +
                                std::to_string(tuple_rows.cols()));
  }
  return std::visit(
      [&](const auto& l) -> Eigen::MatrixXd {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, KsvmLearner>) {
          return l.decision_rows(tuple_rows);
        } else {
          return l.predict_rows(tuple_rows);
        }
      },
      learner);
}

PredictionSummary predict_with_anchors(const DeltaModel& model,
                                       const Eigen::VectorXd& x,
                                       const Eigen::MatrixXd& anchor_block) {
  if (x.size() != model.input_dim) {
    throw std::invalid_argument("input has dimension " +
                                std::to_string(x.size()) + ", model expects " +
                                std::to_string(model.input_dim));
  }
  // a degenerate block of K copies of one anchor is a single evaluation;
  // collapsing keeps its variance exactly zero instead of GEMM-rounding noise
  if (anchor_block.rows() > 1 && all_rows_equal(anchor_block)) {
    const Eigen::MatrixXd rows =
        anchored_rows(x, anchor_block.topRows(1), model.scheme);
    const Eigen::MatrixXd one = model.raw_predict_rows(rows);
    return summarize(one.replicate(anchor_block.rows(), 1));
  }
  const Eigen::MatrixXd rows = anchored_rows(x, anchor_block, model.scheme);
  return summarize(model.raw_predict_rows(rows));
}

PredictionSummary marginalized_predict(const DeltaModel& model,
                                       const Eigen::VectorXd& x,
                                       const AnchorPrior& prior, int k,
                                       std::mt19937_64& rng) {
  if (k < 1) {
    throw std::invalid_argument("anchor count must be >= 1");
  }
  const Eigen::MatrixXd block =
      sample_anchor_block(prior, k, model.scheme, rng);
  return predict_with_anchors(model, x, block);
}

PredictionSummary marginalized_predict_proba(const DeltaModel& model,
                                             const Eigen::VectorXd& x,
                                             const AnchorPrior& prior, int k,
                                             std::mt19937_64& rng) {
  if (model.task != Task::Classification) {
    throw std::invalid_argument(
        "probability predictions need a classification model");
  }
  const Eigen::MatrixXd block =
      sample_anchor_block(prior, k, model.scheme, rng);
  const Eigen::MatrixXd rows = anchored_rows(x, block, model.scheme);
  Eigen::MatrixXd logits = model.raw_predict_rows(rows);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    logits.row(i) = softmax(logits.row(i).transpose()).transpose();
  }
  return summarize(logits);
}

std::vector<PredictionSummary> predict_batch_with_anchors(
    const DeltaModel& model, const Eigen::MatrixXd& xs,
    const Eigen::MatrixXd& anchor_block) {
  const auto n = xs.rows();
  const auto k = anchor_block.rows();
  if (n == 0 || k == 0) {
    throw std::invalid_argument("empty batch or anchor block");
  }
  Eigen::MatrixXd rows(n * k, model.tuple_width());
  for (Eigen::Index i = 0; i < n; ++i) {
    rows.middleRows(i * k, k) =
        anchored_rows(xs.row(i).transpose(), anchor_block, model.scheme);
  }
  const Eigen::MatrixXd preds = model.raw_predict_rows(rows);
  std::vector<PredictionSummary> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.push_back(summarize(preds.middleRows(i * k, k)));
  }
  return out;
}

DeltaModel train_anchored_mlp(const Dataset& train, const MlpConfig& config,
                              EncodingScheme scheme, const AnchorPrior& prior,
                              const MlpNet* warm_start) {
  check_prior(train, prior);
  const Task task =
      train.classification() ? Task::Classification : Task::Regression;
  const int d = static_cast<int>(train.dim());
  const int out_dim = task == Task::Classification
                          ? train.n_classes
                          : static_cast<int>(train.target_dim());
  if (task == Task::Classification && train.n_classes < 2) {
    throw std::invalid_argument("classification needs at least two classes");
  }
  std::mt19937_64 rng(config.seed);
  const int n = static_cast<int>(train.size());
  auto build = [&](const std::vector<int>& order, int begin, int end) {
    const Eigen::MatrixXd batch_x =
        gather_rows(train.inputs, order, begin, end);
    const Eigen::MatrixXd anchors =
        training_anchors(train.inputs, order, begin, end, n,
                         config.batch_size, scheme, prior, rng);
    return encode_rows(batch_x, anchors, scheme);
  };
  DeltaModel model;
  model.scheme = scheme;
  model.task = task;
  model.input_dim = d;
  model.output_dim = out_dim;
  model.prior = prior;
  model.learner = fit_mlp_loop(train, config, task, tuple_dim(scheme, d),
                               out_dim, rng, build, warm_start);
  model.trained = true;
  return model;
}

DeltaModel train_anchored_forest(const Dataset& train,
                                 const ForestConfig& config,
                                 EncodingScheme scheme,
                                 const AnchorPrior& prior) {
  check_prior(train, prior);
  if (train.classification()) {
    throw std::invalid_argument("forest training expects regression targets");
  }
  if (train.size() < 2) {
    throw std::invalid_argument("forest needs at least two samples to split");
  }
  if (config.anchor_replication < 1) {
    throw std::invalid_argument("anchor replication must be >= 1");
  }
  std::mt19937_64 rng(config.seed);
  const Eigen::MatrixXd anchors =
      draw_anchor_set(scheme, prior, config.anchor_replication, rng);
  const Eigen::MatrixXd rows =
      replicate_with_anchors(train.inputs, scheme, anchors);
  const Eigen::MatrixXd targets =
      replicate_rows(train.targets, config.anchor_replication);
  ForestConfig fit_cfg = config;
  fit_cfg.seed = rng();
  DeltaModel model;
  model.scheme = scheme;
  model.task = Task::Regression;
  model.input_dim = static_cast<int>(train.dim());
  model.output_dim = static_cast<int>(train.target_dim());
  model.prior = prior;
  model.training_anchors = anchors;
  model.learner = fit_forest(rows, targets, fit_cfg);
  model.trained = true;
  return model;
}

DeltaModel train_anchored_ksvm(const Dataset& train, const KsvmConfig& config,
                               EncodingScheme scheme,
                               const AnchorPrior& prior) {
  check_prior(train, prior);
  if (!train.classification()) {
    throw std::invalid_argument("svm training expects classification targets");
  }
  if (train.n_classes < 2) {
    throw std::invalid_argument("svm needs at least two classes, got " +
                                std::to_string(train.n_classes));
  }
  if (config.anchor_passes < 1) {
    throw std::invalid_argument("anchor passes must be >= 1");
  }
  std::mt19937_64 rng(config.seed);
  const Eigen::MatrixXd anchors =
      draw_anchor_set(scheme, prior, config.anchor_passes, rng);
  const Eigen::MatrixXd rows =
      replicate_with_anchors(train.inputs, scheme, anchors);
  std::vector<int> labels;
  labels.reserve(train.labels.size() *
                 static_cast<std::size_t>(config.anchor_passes));
  for (int label : train.labels) {
    for (int a = 0; a < config.anchor_passes; ++a) labels.push_back(label);
  }
  KsvmConfig fit_cfg = config;
  fit_cfg.seed = rng();
  DeltaModel model;
  model.scheme = scheme;
  model.task = Task::Classification;
  model.input_dim = static_cast<int>(train.dim());
  model.output_dim = train.n_classes;
  model.prior = prior;
  model.training_anchors = anchors;
  model.learner = fit_ksvm(rows, labels, train.n_classes, fit_cfg);
  model.trained = true;
  return model;
}

Eigen::MatrixXd PlainModel::predict_rows(const Eigen::MatrixXd& x) const {
  if (!trained) {
    throw std::runtime_error("model is untrained");
  }
  if (x.cols() != input_dim) {
    throw std::invalid_argument("model expects width " +
                                std::to_string(input_dim) + ", got " +
                                std::to_string(x.cols()));
  }
  return std::visit(
      [&](const auto& l) -> Eigen::MatrixXd {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, KsvmLearner>) {
          return l.decision_rows(x);
        } else {
          return l.predict_rows(x);
        }
      },
      learner);
}

PlainModel train_plain_mlp(const Dataset& train, const MlpConfig& config) {
  const Task task =
      train.classification() ? Task::Classification : Task::Regression;
  const int d = static_cast<int>(train.dim());
  const int out_dim = task == Task::Classification
                          ? train.n_classes
                          : static_cast<int>(train.target_dim());
  if (task == Task::Classification && train.n_classes < 2) {
    throw std::invalid_argument("classification needs at least two classes");
  }
  std::mt19937_64 rng(config.seed);
  auto build = [&](const std::vector<int>& order, int begin, int end) {
    return gather_rows(train.inputs, order, begin, end);
  };
  PlainModel model;
  model.task = task;
  model.input_dim = d;
  model.output_dim = out_dim;
  model.learner = fit_mlp_loop(train, config, task, d, out_dim, rng, build);
  model.trained = true;
  return model;
}

PlainModel train_plain_forest(const Dataset& train, const ForestConfig& config) {
  if (train.classification()) {
    throw std::invalid_argument("forest training expects regression targets");
  }
  PlainModel model;
  model.task = Task::Regression;
  model.input_dim = static_cast<int>(train.dim());
  model.output_dim = static_cast<int>(train.target_dim());
  model.learner = fit_forest(train.inputs, train.targets, config);
  model.trained = true;
  return model;
}

PlainModel train_plain_ksvm(const Dataset& train, const KsvmConfig& config) {
  if (!train.classification()) {
    throw std::invalid_argument("svm training expects classification targets");
  }
  PlainModel model;
  model.task = Task::Classification;
  model.input_dim = static_cast<int>(train.dim());
  model.output_dim = train.n_classes;
  model.learner =
      fit_ksvm(train.inputs, train.labels, train.n_classes, config);
  model.trained = true;
  return model;
}

PredictionSummary EnsembleModel::predict_summary(
    const Eigen::VectorXd& x) const {
  return predict_summaries(x.transpose())[0];
}

std::vector<PredictionSummary> EnsembleModel::predict_summaries(
    const Eigen::MatrixXd& xs) const {
  if (members.empty()) {
    throw std::runtime_error("ensemble has no members");
  }
  std::vector<Eigen::MatrixXd> per_member;
  per_member.reserve(members.size());
  for (const auto& m : members) {
    per_member.push_back(m.predict_rows(xs));
  }
  std::vector<PredictionSummary> out;
  out.reserve(static_cast<std::size_t>(xs.rows()));
  Eigen::MatrixXd stacked(static_cast<Eigen::Index>(members.size()),
                          per_member.front().cols());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    for (std::size_t m = 0; m < members.size(); ++m) {
      stacked.row(static_cast<Eigen::Index>(m)) = per_member[m].row(i);
    }
    out.push_back(summarize(stacked));
  }
  return out;
}

namespace {

template <typename Config, typename Trainer>
EnsembleModel fit_ensemble(const Dataset& train, Config config, int members,
                           Trainer&& trainer) {
  if (members < 2) {
    throw std::invalid_argument("ensemble needs at least two members, got " +
                                std::to_string(members));
  }
  EnsembleModel ensemble;
  for (int m = 0; m < members; ++m) {
    Config member_cfg = config;
    member_cfg.seed = config.seed + static_cast<std::uint64_t>(m);
    ensemble.members.push_back(trainer(train, member_cfg));
  }
  return ensemble;
}

}  // namespace

EnsembleModel train_mlp_ensemble(const Dataset& train, const MlpConfig& config,
                                 int members) {
  return fit_ensemble(train, config, members, train_plain_mlp);
}

EnsembleModel train_forest_ensemble(const Dataset& train,
                                    const ForestConfig& config, int members) {
  return fit_ensemble(train, config, members, train_plain_forest);
}

}  // namespace auq
