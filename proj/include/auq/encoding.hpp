#pragma once
// Anchoring machinery: pretext encodings, anchor priors, tuple construction,
// and the anchor-marginalized prediction summary.
//
// A model never sees a raw input x. It sees the tuple [anchor | encoded]
// where `encoded` is a fixed transform of (x, anchor) from which x is exactly
// recoverable. Averaging predictions over several anchors for the same x
// yields a mean and a variance; the variance is the uncertainty estimate.

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "auq/dataset.hpp"

namespace auq {

// Identity:     encoded = x          (anchor is a distractor)
// SingleAnchor: encoded = x - r      (decode: r + encoded)
// DoubleAnchor: encoded = x - r1 - r2 (both anchors kept, tuple is 3d wide)
enum class EncodingScheme { Identity, SingleAnchor, DoubleAnchor };

const char* scheme_name(EncodingScheme scheme);
EncodingScheme scheme_from_name(std::string_view name);

// Width of the flattened tuple a model consumes for raw inputs of dim d.
int tuple_dim(EncodingScheme scheme, int d);

// Number of raw anchor vectors consumed per encoded tuple (2 for DoubleAnchor).
int anchors_per_tuple(EncodingScheme scheme);

// One encoded tuple. For DoubleAnchor `anchor` holds both anchors stacked
// [r1 ; r2]; `encoded` is always d wide. Concatenation order in flat() is
// fixed: [anchor | encoded].
struct AnchoredInput {
  Eigen::VectorXd anchor;
  Eigen::VectorXd encoded;

  Eigen::VectorXd flat() const;
};

// One AnchoredInput per anchor (per anchor pair for DoubleAnchor, consumed
// pairwise in list order). Throws on dimension mismatch (names the offending
// anchor index), empty anchor list, or an odd pair count for DoubleAnchor.
std::vector<AnchoredInput> encode(const Eigen::VectorXd& x,
                                  const std::vector<Eigen::VectorXd>& anchors,
                                  EncodingScheme scheme);

// Inverse of encode for a single tuple; exact up to floating-point addition.
Eigen::VectorXd decode(const AnchoredInput& input, EncodingScheme scheme);

// Batch form used on hot paths: one row [anchor | encoded] per anchor row.
// `anchors` is k x d, or k x 2d for DoubleAnchor (pairs pre-stacked per row).
Eigen::MatrixXd anchored_rows(const Eigen::VectorXd& x,
                              const Eigen::MatrixXd& anchors,
                              EncodingScheme scheme);

// Row-paired form: sample row i is encoded against anchor row i. Shapes as in
// anchored_rows but with one x per row.
Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& xs,
                            const Eigen::MatrixXd& anchors,
                            EncodingScheme scheme);

// Sampling source for anchors. TrainDistribution and External draw rows
// uniformly with replacement from a stored sample matrix; StandardNormal
// draws N(0, I) of the given dimension.
class AnchorPrior {
 public:
  enum class Kind { TrainDistribution, StandardNormal, External };

  AnchorPrior() = default;

  static AnchorPrior train_distribution(Eigen::MatrixXd samples,
                                        std::uint64_t seed = 0);
  static AnchorPrior standard_normal(int dim, std::uint64_t seed = 0);
  static AnchorPrior external(Eigen::MatrixXd samples, std::uint64_t seed = 0);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& samples() const { return samples_; }

  std::mt19937_64 make_rng() const { return std::mt19937_64(seed_); }

  // Stable content hash (kind, dim, backing samples); stored in model files.
  std::uint64_t fingerprint() const;

 private:
  Kind kind_ = Kind::StandardNormal;
  int dim_ = 0;
  std::uint64_t seed_ = 0;
  Eigen::MatrixXd samples_;  // empty for StandardNormal
};

// k anchor vectors of the prior's dimension; deterministic given the rng state.
std::vector<Eigen::VectorXd> sample_anchors(const AnchorPrior& prior, int k,
                                            std::mt19937_64& rng);

// Matrix form, k x d.
Eigen::MatrixXd sample_anchor_matrix(const AnchorPrior& prior, int k,
                                     std::mt19937_64& rng);

// k x d (or k x 2d for DoubleAnchor) block ready for anchored_rows().
Eigen::MatrixXd sample_anchor_block(const AnchorPrior& prior, int k,
                                    EncodingScheme scheme, std::mt19937_64& rng);

// Anchor-marginalized prediction for one input: mean and per-coordinate
// population variance (divide by K, no Bessel correction) over the K
// per-anchor raw predictions, kept in anchor order.
struct PredictionSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  Eigen::MatrixXd per_anchor;  // K x k
  double total_variance = 0.0;

  int anchor_count() const { return static_cast<int>(per_anchor.rows()); }
};

// Build a summary from per-anchor prediction rows (K x k, K >= 1).
PredictionSummary summarize(const Eigen::MatrixXd& per_anchor);

// Down-weight logits by predicted uncertainty: out_i = mean_i * t_i with
// t_i = clamp(0.5 - variance_i, t_min, 0.5). Variance must be nonnegative.
Eigen::VectorXd scale_logits(const Eigen::VectorXd& mean_logits,
                             const Eigen::VectorXd& variance,
                             double t_min = 0.05);

// Collapsed variant: a single t = clamp(0.5 - total_variance / k, t_min, 0.5)
// applied to every logit.
Eigen::VectorXd scale_logits_scalar(const Eigen::VectorXd& mean_logits,
                                    double total_variance, double t_min = 0.05);

// -sum p_i ln p_i in nats, with 0 ln 0 := 0. Input must be a distribution
// (nonnegative, sum within 1e-6 of 1).
double predictive_entropy(const Eigen::VectorXd& probs);

// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

}  // namespace auq
