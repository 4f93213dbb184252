#include "auq/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace auq {

MlpNet::MlpNet(int input_dim, const std::vector<int>& hidden, int output_dim,
               std::uint64_t seed) {
  if (input_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("network needs positive input/output widths");
  }
  for (int w : hidden) {
    if (w < 1) {
      throw std::invalid_argument("hidden widths must be >= 1");
    }
  }
  std::vector<int> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);

  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Eigen::MatrixXd w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = u(rng);
    }
    weights.push_back(std::move(w));
    biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
}

int MlpNet::input_dim() const {
  return weights.empty() ? 0 : static_cast<int>(weights.front().rows());
}

int MlpNet::output_dim() const {
  return weights.empty() ? 0 : static_cast<int>(weights.back().cols());
}

Eigen::MatrixXd MlpNet::forward(const Eigen::MatrixXd& x) const {
  if (weights.empty()) {
    throw std::runtime_error("network is uninitialized");
  }
  if (x.cols() != input_dim()) {
    throw std::invalid_argument("network expects width " +
                                std::to_string(input_dim()) + ", got " +
                                std::to_string(x.cols()));
  }
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::MatrixXd z = a * weights[l];
    z.rowwise() += biases[l].transpose();
    a = (l + 1 < weights.size()) ? z.cwiseMax(0.0).eval() : std::move(z);
  }
  return a;
}

Eigen::MatrixXd MlpNet::forward_cached(const Eigen::MatrixXd& x,
                                       Cache& cache) const {
  if (weights.empty()) {
    throw std::runtime_error("network is uninitialized");
  }
  cache.activations.assign(1, x);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::MatrixXd z = cache.activations.back() * weights[l];
    z.rowwise() += biases[l].transpose();
    if (l + 1 < weights.size()) z = z.cwiseMax(0.0);
    cache.activations.push_back(std::move(z));
  }
  return cache.activations.back();
}

Eigen::MatrixXd MlpNet::backward(const Cache& cache,
                                 const Eigen::MatrixXd& dloss_dout,
                                 Grads& grads) const {
  const auto layers = weights.size();
  if (cache.activations.size() != layers + 1) {
    throw std::invalid_argument("cache does not match this network");
  }
  grads.w.assign(layers, Eigen::MatrixXd());
  grads.b.assign(layers, Eigen::VectorXd());

  Eigen::MatrixXd grad = dloss_dout;  // dL/d(activation at current level)
  for (std::size_t l = layers; l-- > 0;) {
    grads.w[l].noalias() = cache.activations[l].transpose() * grad;
    grads.b[l] = grad.colwise().sum();
    Eigen::MatrixXd prev;
    prev.noalias() = grad * weights[l].transpose();
    if (l > 0) {
      // hidden activations are post-ReLU: zero slope where they clipped
      prev = (cache.activations[l].array() > 0.0)
                 .select(prev, Eigen::MatrixXd::Zero(prev.rows(), prev.cols()));
    }
    grad = std::move(prev);
  }
  return grad;
}

Eigen::MatrixXd MlpNet::input_gradients(const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& dloss_dout) const {
  Cache cache;
  forward_cached(x, cache);
  Grads grads;
  return backward(cache, dloss_dout, grads);
}

AdamState AdamState::zeros_like(const MlpNet& net) {
  AdamState s;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    s.m_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                          net.weights[l].cols()));
    s.v_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(),
                                          net.weights[l].cols()));
    s.m_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    s.v_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return s;
}

void adam_step(MlpNet& net, const MlpNet::Grads& grads, AdamState& state,
               double learning_rate) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  if (grads.w.size() != net.weights.size()) {
    throw std::invalid_argument("gradient layout does not match the network");
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    state.m_w[l] = b1 * state.m_w[l] + (1.0 - b1) * grads.w[l];
    state.v_w[l] =
        b2 * state.v_w[l].array() + (1.0 - b2) * grads.w[l].array().square();
    net.weights[l].array() -=
        learning_rate * (state.m_w[l].array() / c1) /
        ((state.v_w[l].array() / c2).sqrt() + eps);

    state.m_b[l] = b1 * state.m_b[l] + (1.0 - b1) * grads.b[l];
    state.v_b[l] =
        b2 * state.v_b[l].array() + (1.0 - b2) * grads.b[l].array().square();
    net.biases[l].array() -= learning_rate * (state.m_b[l].array() / c1) /
                             ((state.v_b[l].array() / c2).sqrt() + eps);
  }
}

TargetScaler TargetScaler::identity(int dim) {
  TargetScaler t;
  t.shift = Eigen::VectorXd::Zero(dim);
  t.scale = Eigen::VectorXd::Ones(dim);
  return t;
}

TargetScaler TargetScaler::fit(const Eigen::MatrixXd& targets) {
  if (targets.rows() == 0) {
    throw std::invalid_argument("cannot fit a scaler to zero rows");
  }
  TargetScaler t;
  t.shift = targets.colwise().mean();
  const Eigen::MatrixXd centered = targets.rowwise() - t.shift.transpose();
  t.scale = centered.array().square().colwise().mean().sqrt();
  for (Eigen::Index i = 0; i < t.scale.size(); ++i) {
    if (t.scale[i] == 0.0) t.scale[i] = 1.0;
  }
  return t;
}

Eigen::MatrixXd TargetScaler::apply(const Eigen::MatrixXd& standardized) const {
  return (standardized.array().rowwise() * scale.transpose().array())
             .rowwise() +
         shift.transpose().array();
}

Eigen::MatrixXd TargetScaler::standardize(const Eigen::MatrixXd& raw) const {
  return (raw.rowwise() - shift.transpose()).array().rowwise() /
         scale.transpose().array();
}

Eigen::MatrixXd MlpLearner::predict_rows(const Eigen::MatrixXd& rows) const {
  return scaler.apply(net.forward(rows));
}

}  // namespace auq
