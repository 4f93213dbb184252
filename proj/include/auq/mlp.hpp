#pragma once
// Minimal fully connected network: ReLU hidden layers, linear head, trained
// with Adam-style adaptive moments. All forwards and backwards are batched
// (one sample per row).

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace auq {

struct MlpConfig {
  std::vector<int> hidden = {128, 128, 128};
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 64;
  std::uint64_t seed = 0;
  // regression only: train on zero-mean/unit-variance targets, invert at
  // prediction time
  bool standardize_targets = true;
};

class MlpNet {
 public:
  MlpNet() = default;
  // uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases
  MlpNet(int input_dim, const std::vector<int>& hidden, int output_dim,
         std::uint64_t seed);

  int input_dim() const;
  int output_dim() const;
  int layer_count() const { return static_cast<int>(weights.size()); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  // post-activation values per layer; activations[0] is the input batch
  struct Cache {
    std::vector<Eigen::MatrixXd> activations;
  };
  Eigen::MatrixXd forward_cached(const Eigen::MatrixXd& x, Cache& cache) const;

  struct Grads {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
  };
  // given dL/d(output), fills parameter grads and returns dL/d(input)
  Eigen::MatrixXd backward(const Cache& cache,
                           const Eigen::MatrixXd& dloss_dout,
                           Grads& grads) const;

  // dL/d(input) only, for gradient-based search over inputs
  Eigen::MatrixXd input_gradients(const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& dloss_dout) const;

  std::vector<Eigen::MatrixXd> weights;  // layer l maps in x out
  std::vector<Eigen::VectorXd> biases;
};

struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  long step = 0;

  static AdamState zeros_like(const MlpNet& net);
};

// one update with beta1 = 0.9, beta2 = 0.999, eps = 1e-8, bias-corrected
void adam_step(MlpNet& net, const MlpNet::Grads& grads, AdamState& state,
               double learning_rate);

// Affine de-standardization applied to network outputs (identity when the
// scale is 1 and the shift 0).
struct TargetScaler {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;

  static TargetScaler identity(int dim);
  static TargetScaler fit(const Eigen::MatrixXd& targets);  // zero-sd -> scale 1
  Eigen::MatrixXd apply(const Eigen::MatrixXd& standardized) const;
  Eigen::MatrixXd standardize(const Eigen::MatrixXd& raw) const;
};

// A trained network plus everything needed to map outputs back to target
// units.
struct MlpLearner {
  MlpConfig config;
  MlpNet net;
  TargetScaler scaler;

  Eigen::MatrixXd predict_rows(const Eigen::MatrixXd& rows) const;
};

}  // namespace auq
