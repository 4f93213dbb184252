#include "auq/encoding.hpp"

#include <cmath>
#include <stdexcept>

namespace auq {
namespace {

void check_anchor_dim(const Eigen::VectorXd& x, const Eigen::VectorXd& anchor,
                      std::size_t index) {
  if (anchor.size() != x.size()) {
    throw std::invalid_argument(
        "anchor " + std::to_string(index) + " has dimension " +
        std::to_string(anchor.size()) + ", expected " +
        std::to_string(x.size()));
  }
}

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    hash ^= p[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace

const char* scheme_name(EncodingScheme scheme) {
  switch (scheme) {
    case EncodingScheme::Identity:
      return "identity";
    case EncodingScheme::SingleAnchor:
      return "single_anchor";
    case EncodingScheme::DoubleAnchor:
      return "double_anchor";
  }
  throw std::invalid_argument("unknown encoding scheme");
}

EncodingScheme scheme_from_name(std::string_view name) {
  if (name == "identity") return EncodingScheme::Identity;
  if (name == "single_anchor") return EncodingScheme::SingleAnchor;
  if (name == "double_anchor") return EncodingScheme::DoubleAnchor;
  throw std::invalid_argument("unknown encoding scheme '" + std::string(name) +
                              "'");
}

int tuple_dim(EncodingScheme scheme, int d) {
  if (d < 1) {
    throw std::invalid_argument("input dimension must be positive, got " +
                                std::to_string(d));
  }
  return scheme == EncodingScheme::DoubleAnchor ? 3 * d : 2 * d;
}

int anchors_per_tuple(EncodingScheme scheme) {
  return scheme == EncodingScheme::DoubleAnchor ? 2 : 1;
}

Eigen::VectorXd AnchoredInput::flat() const {
  Eigen::VectorXd out(anchor.size() + encoded.size());
  out << anchor, encoded;
  return out;
}

std::vector<AnchoredInput> encode(const Eigen::VectorXd& x,
                                  const std::vector<Eigen::VectorXd>& anchors,
                                  EncodingScheme scheme) {
  if (x.size() == 0) {
    throw std::invalid_argument("input vector is empty");
  }
  if (anchors.empty()) {
    throw std::invalid_argument("anchor list is empty");
  }
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    check_anchor_dim(x, anchors[i], i);
  }

  std::vector<AnchoredInput> out;
  if (scheme == EncodingScheme::DoubleAnchor) {
    if (anchors.size() % 2 != 0) {
      throw std::invalid_argument(
          "double-anchor encoding consumes anchors in pairs, got " +
          std::to_string(anchors.size()));
    }
    out.reserve(anchors.size() / 2);
    for (std::size_t i = 0; i < anchors.size(); i += 2) {
      AnchoredInput input;
      input.anchor.resize(2 * x.size());
      input.anchor << anchors[i], anchors[i + 1];
      input.encoded = x - anchors[i] - anchors[i + 1];
      out.push_back(std::move(input));
    }
    return out;
  }

  out.reserve(anchors.size());
  for (const auto& r : anchors) {
    AnchoredInput input;
    input.anchor = r;
    input.encoded = scheme == EncodingScheme::Identity ? x : (x - r).eval();
    out.push_back(std::move(input));
  }
  return out;
}

Eigen::VectorXd decode(const AnchoredInput& input, EncodingScheme scheme) {
  const auto d = input.encoded.size();
  if (d == 0) {
    throw std::invalid_argument("encoded vector is empty");
  }
  switch (scheme) {
    case EncodingScheme::Identity:
      if (input.anchor.size() != d) {
        throw std::invalid_argument("anchor/encoded dimension mismatch");
      }
      return input.encoded;
    case EncodingScheme::SingleAnchor:
      if (input.anchor.size() != d) {
        throw std::invalid_argument("anchor/encoded dimension mismatch");
      }
      return input.anchor + input.encoded;
    case EncodingScheme::DoubleAnchor: {
      if (input.anchor.size() != 2 * d) {
        throw std::invalid_argument(
            "double-anchor tuple must carry two stacked anchors");
      }
      return input.anchor.head(d) + input.anchor.tail(d) + input.encoded;
    }
  }
  throw std::invalid_argument("unknown encoding scheme");
}

Eigen::MatrixXd anchored_rows(const Eigen::VectorXd& x,
                              const Eigen::MatrixXd& anchors,
                              EncodingScheme scheme) {
  const auto d = x.size();
  if (d == 0) {
    throw std::invalid_argument("input vector is empty");
  }
  if (anchors.rows() == 0) {
    throw std::invalid_argument("anchor block is empty");
  }
  const auto k = anchors.rows();
  Eigen::MatrixXd out(k, tuple_dim(scheme, static_cast<int>(d)));
  if (scheme == EncodingScheme::DoubleAnchor) {
    if (anchors.cols() != 2 * d) {
      throw std::invalid_argument(
          "double-anchor block must be k x 2d, got k x " +
          std::to_string(anchors.cols()));
    }
    out.leftCols(2 * d) = anchors;
    out.rightCols(d) =
        ((-anchors.leftCols(d) - anchors.rightCols(d)).rowwise() +
         x.transpose());
    return out;
  }
  if (anchors.cols() != d) {
    throw std::invalid_argument("anchor block must be k x d, got k x " +
                                std::to_string(anchors.cols()));
  }
  out.leftCols(d) = anchors;
  if (scheme == EncodingScheme::Identity) {
    out.rightCols(d).rowwise() = x.transpose();
  } else {
    out.rightCols(d) = (-anchors).rowwise() + x.transpose();
  }
  return out;
}

Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& xs,
                            const Eigen::MatrixXd& anchors,
                            EncodingScheme scheme) {
  const auto n = xs.rows();
  const auto d = xs.cols();
  if (n == 0 || d == 0) {
    throw std::invalid_argument("sample matrix is empty");
  }
  if (anchors.rows() != n) {
    throw std::invalid_argument("need one anchor row per sample, got " +
                                std::to_string(anchors.rows()) + " for " +
                                std::to_string(n));
  }
  Eigen::MatrixXd out(n, tuple_dim(scheme, static_cast<int>(d)));
  if (scheme == EncodingScheme::DoubleAnchor) {
    if (anchors.cols() != 2 * d) {
      throw std::invalid_argument(
          "double-anchor block must be n x 2d, got n x " +
          std::to_string(anchors.cols()));
    }
    out.leftCols(2 * d) = anchors;
    out.rightCols(d) = xs - anchors.leftCols(d) - anchors.rightCols(d);
    return out;
  }
  if (anchors.cols() != d) {
    throw std::invalid_argument("anchor block must be n x d, got n x " +
                                std::to_string(anchors.cols()));
  }
  out.leftCols(d) = anchors;
  out.rightCols(d) = scheme == EncodingScheme::Identity ? xs : (xs - anchors);
  return out;
}

AnchorPrior AnchorPrior::train_distribution(Eigen::MatrixXd samples,
                                            std::uint64_t seed) {
  if (samples.rows() == 0 || samples.cols() == 0) {
    throw std::invalid_argument("anchor prior needs a nonempty sample matrix");
  }
  if (!samples.allFinite()) {
    throw std::invalid_argument("anchor prior samples contain NaN or Inf");
  }
  AnchorPrior p;
  p.kind_ = Kind::TrainDistribution;
  p.dim_ = static_cast<int>(samples.cols());
  p.seed_ = seed;
  p.samples_ = std::move(samples);
  return p;
}

AnchorPrior AnchorPrior::standard_normal(int dim, std::uint64_t seed) {
  if (dim < 1) {
    throw std::invalid_argument("anchor prior dimension must be positive");
  }
  AnchorPrior p;
  p.kind_ = Kind::StandardNormal;
  p.dim_ = dim;
  p.seed_ = seed;
  return p;
}

AnchorPrior AnchorPrior::external(Eigen::MatrixXd samples, std::uint64_t seed) {
  AnchorPrior p = train_distribution(std::move(samples), seed);
  p.kind_ = Kind::External;
  return p;
}

std::uint64_t AnchorPrior::fingerprint() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  const int kind = static_cast<int>(kind_);
  hash = fnv1a(hash, &kind, sizeof(kind));
  hash = fnv1a(hash, &dim_, sizeof(dim_));
  if (samples_.size() > 0) {
    // column-major contiguous storage
    hash = fnv1a(hash, samples_.data(),
                 sizeof(double) * static_cast<std::size_t>(samples_.size()));
  }
  return hash;
}

Eigen::MatrixXd sample_anchor_matrix(const AnchorPrior& prior, int k,
                                     std::mt19937_64& rng) {
  if (k < 1) {
    throw std::invalid_argument("anchor count must be positive, got " +
                                std::to_string(k));
  }
  if (prior.dim() < 1) {
    throw std::invalid_argument("anchor prior is uninitialized");
  }
  Eigen::MatrixXd out(k, prior.dim());
  if (prior.kind() == AnchorPrior::Kind::StandardNormal) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < prior.dim(); ++j) {
        out(i, j) = normal(rng);
      }
    }
    return out;
  }
  const auto& samples = prior.samples();
  std::uniform_int_distribution<Eigen::Index> pick(0, samples.rows() - 1);
  for (int i = 0; i < k; ++i) {
    out.row(i) = samples.row(pick(rng));
  }
  return out;
}

std::vector<Eigen::VectorXd> sample_anchors(const AnchorPrior& prior, int k,
                                            std::mt19937_64& rng) {
  const Eigen::MatrixXd block = sample_anchor_matrix(prior, k, rng);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    out.push_back(block.row(i).transpose());
  }
  return out;
}

Eigen::MatrixXd sample_anchor_block(const AnchorPrior& prior, int k,
                                    EncodingScheme scheme,
                                    std::mt19937_64& rng) {
  if (scheme != EncodingScheme::DoubleAnchor) {
    return sample_anchor_matrix(prior, k, rng);
  }
  const Eigen::MatrixXd raw = sample_anchor_matrix(prior, 2 * k, rng);
  Eigen::MatrixXd out(k, 2 * prior.dim());
  for (int i = 0; i < k; ++i) {
    out.row(i) << raw.row(2 * i), raw.row(2 * i + 1);
  }
  return out;
}

PredictionSummary summarize(const Eigen::MatrixXd& per_anchor) {
  if (per_anchor.rows() == 0 || per_anchor.cols() == 0) {
    throw std::invalid_argument("per-anchor prediction matrix is empty");
  }
  if (!per_anchor.allFinite()) {
    throw std::invalid_argument("per-anchor predictions contain NaN or Inf");
  }
  PredictionSummary s;
  s.per_anchor = per_anchor;
  s.mean = per_anchor.colwise().mean();
  const Eigen::MatrixXd centered = per_anchor.rowwise() - s.mean.transpose();
  s.variance =
      centered.array().square().colwise().mean().matrix().transpose();
  // constant columns have zero spread by definition; keep that exact even
  // when the averaged mean rounds away from the shared value
  for (Eigen::Index j = 0; j < per_anchor.cols(); ++j) {
    if (per_anchor.col(j).minCoeff() == per_anchor.col(j).maxCoeff()) {
      s.mean[j] = per_anchor(0, j);
      s.variance[j] = 0.0;
    }
  }
  s.total_variance = s.variance.sum();
  return s;
}

Eigen::VectorXd scale_logits(const Eigen::VectorXd& mean_logits,
                             const Eigen::VectorXd& variance, double t_min) {
  if (mean_logits.size() != variance.size()) {
    throw std::invalid_argument("logit/variance dimension mismatch");
  }
  if ((variance.array() < 0.0).any()) {
    throw std::invalid_argument("variance must be nonnegative");
  }
  if (!(t_min > 0.0) || t_min > 0.5) {
    throw std::invalid_argument("t_min must lie in (0, 0.5]");
  }
  const Eigen::ArrayXd t =
      (0.5 - variance.array()).cwiseMax(t_min).cwiseMin(0.5);
  return mean_logits.array() * t;
}

Eigen::VectorXd scale_logits_scalar(const Eigen::VectorXd& mean_logits,
                                    double total_variance, double t_min) {
  if (mean_logits.size() == 0) {
    throw std::invalid_argument("logit vector is empty");
  }
  if (!(total_variance >= 0.0)) {
    throw std::invalid_argument("variance must be nonnegative");
  }
  if (!(t_min > 0.0) || t_min > 0.5) {
    throw std::invalid_argument("t_min must lie in (0, 0.5]");
  }
  const double spread = total_variance / static_cast<double>(mean_logits.size());
  const double t = std::min(0.5, std::max(t_min, 0.5 - spread));
  return mean_logits * t;
}

double predictive_entropy(const Eigen::VectorXd& probs) {
  if (probs.size() == 0) {
    throw std::invalid_argument("probability vector is empty");
  }
  if ((probs.array() < 0.0).any()) {
    throw std::invalid_argument("probabilities must be nonnegative");
  }
  if (std::abs(probs.sum() - 1.0) > 1e-6) {
    throw std::invalid_argument("probabilities must sum to 1, got " +
                                std::to_string(probs.sum()));
  }
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) {
      h -= probs[i] * std::log(probs[i]);
    }
  }
  return h;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) {
    throw std::invalid_argument("logit vector is empty");
  }
  const Eigen::ArrayXd shifted = logits.array() - logits.maxCoeff();
  const Eigen::ArrayXd e = shifted.exp();
  return e / e.sum();
}

}  // namespace auq
