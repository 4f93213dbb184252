#pragma once
// Trained models over anchored tuples, the anchored training protocols for
// each learner, anchor-marginalized inference, and the plain/ensemble
// baselines used for comparisons.

#include <Eigen/Core>
#include <random>
#include <variant>
#include <vector>

#include "auq/dataset.hpp"
#include "auq/encoding.hpp"
#include "auq/forest.hpp"
#include "auq/ksvm.hpp"
#include "auq/mlp.hpp"

namespace auq {

enum class Task { Regression, Classification };

// A learner trained on [anchor | encoded] tuples. Raw outputs are target
// values for regression and per-class logits (decision values) for
// classification.
struct DeltaModel {
  EncodingScheme scheme = EncodingScheme::SingleAnchor;
  Task task = Task::Regression;
  int input_dim = 0;   // raw feature count d
  int output_dim = 0;  // target coordinates, or class count
  AnchorPrior prior;   // anchor source used during training
  // Anchor block fixed at training time (forest, svm replicate every sample
  // across exactly these rows); empty for the MLP, whose anchors churn per
  // epoch. Marginalize over these rows when present.
  Eigen::MatrixXd training_anchors;
  std::variant<MlpLearner, ForestLearner, KsvmLearner> learner;
  bool trained = false;

  int tuple_width() const { return tuple_dim(scheme, input_dim); }
  const char* learner_name() const;

  // one prediction row per tuple row; throws if untrained or mis-sized
  Eigen::MatrixXd raw_predict_rows(const Eigen::MatrixXd& tuple_rows) const;
};

// Per-anchor predictions of x against an explicit anchor block (K rows).
PredictionSummary predict_with_anchors(const DeltaModel& model,
                                       const Eigen::VectorXd& x,
                                       const Eigen::MatrixXd& anchor_block);

// Anchor-marginalized prediction: draw k anchors from the prior, predict
// once per anchor, and summarize mean/variance.
PredictionSummary marginalized_predict(const DeltaModel& model,
                                       const Eigen::VectorXd& x,
                                       const AnchorPrior& prior, int k,
                                       std::mt19937_64& rng);

// Classification variant that softmaxes each per-anchor logit row before
// summarizing, so mean/variance live in probability space.
PredictionSummary marginalized_predict_proba(const DeltaModel& model,
                                             const Eigen::VectorXd& x,
                                             const AnchorPrior& prior, int k,
                                             std::mt19937_64& rng);

// Batched form: every row of xs is scored against the same anchor block with
// a single learner call; summaries come back in row order.
std::vector<PredictionSummary> predict_batch_with_anchors(
    const DeltaModel& model, const Eigen::MatrixXd& xs,
    const Eigen::MatrixXd& anchor_block);

// Anchored trainers. The MLP pairs each batch row with the reversed batch
// (K=1 per sample per epoch), drawing from the prior when reversal cannot
// supply an anchor; forest and SVM replicate each sample across several
// prior-drawn anchors since they have no epoch structure. A warm-start
// network, when given, replaces the fresh random initialization.
DeltaModel train_anchored_mlp(const Dataset& train, const MlpConfig& config,
                              EncodingScheme scheme, const AnchorPrior& prior,
                              const MlpNet* warm_start = nullptr);
DeltaModel train_anchored_forest(const Dataset& train,
                                 const ForestConfig& config,
                                 EncodingScheme scheme,
                                 const AnchorPrior& prior);
DeltaModel train_anchored_ksvm(const Dataset& train, const KsvmConfig& config,
                               EncodingScheme scheme, const AnchorPrior& prior);

// Baseline trained on raw inputs, no tuples.
struct PlainModel {
  Task task = Task::Regression;
  int input_dim = 0;
  int output_dim = 0;
  std::variant<MlpLearner, ForestLearner, KsvmLearner> learner;
  bool trained = false;

  Eigen::MatrixXd predict_rows(const Eigen::MatrixXd& x) const;
};

PlainModel train_plain_mlp(const Dataset& train, const MlpConfig& config);
PlainModel train_plain_forest(const Dataset& train, const ForestConfig& config);
PlainModel train_plain_ksvm(const Dataset& train, const KsvmConfig& config);

// Members differ only in seed (config.seed + member index); uncertainty is
// the cross-member spread of predictions.
struct EnsembleModel {
  std::vector<PlainModel> members;

  PredictionSummary predict_summary(const Eigen::VectorXd& x) const;
  std::vector<PredictionSummary> predict_summaries(
      const Eigen::MatrixXd& xs) const;
};

EnsembleModel train_mlp_ensemble(const Dataset& train, const MlpConfig& config,
                                 int members);
EnsembleModel train_forest_ensemble(const Dataset& train,
                                    const ForestConfig& config, int members);

}  // namespace auq
