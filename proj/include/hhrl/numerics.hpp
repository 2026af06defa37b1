#pragma once

#include <Eigen/Core>
#include <random>
#include <string>
#include <vector>

namespace hhrl {

// Plain feedforward net: tanh hidden layers, linear output. Batched calls
// take one sample per column.
struct Mlp {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: (sizes[l+1] x sizes[l])
  std::vector<Eigen::VectorXd> biases;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
};

// Uniform fan-in initialization: U(-1/sqrt(n_in), +1/sqrt(n_in)).
Mlp make_mlp(const std::vector<int>& layer_sizes, std::mt19937_64& rng);

struct ForwardTrace {
  // acts[0] = input, acts[l] = post-activation output of layer l-1;
  // the last entry is the (linear) network output.
  std::vector<Eigen::MatrixXd> acts;
  const Eigen::MatrixXd& output() const { return acts.back(); }
};

ForwardTrace forward_trace(const Mlp& net, const Eigen::MatrixXd& input);
Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& input);
Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input);

// Gradients of sum_b upstream_b . output_b, summed over batch columns.
struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::MatrixXd input;  // same shape as the forward input
  bool finite() const;
};

Gradients backward_trace(const Mlp& net, const ForwardTrace& trace,
                         const Eigen::MatrixXd& upstream);
Gradients backward(const Mlp& net, const Eigen::VectorXd& input,
                   const Eigen::VectorXd& upstream);

struct AdamState {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
};

AdamState make_adam(const Mlp& net, double alpha);

// Standard bias-corrected Adam. Throws std::runtime_error on non-finite
// gradients so training aborts with diagnostics instead of poisoning nets.
void adam_step(Mlp& net, const Gradients& grads, AdamState& state);

// target <- tau * online + (1 - tau) * target
void soft_update(Mlp& target, const Mlp& online, double tau);

// -------- checkpoint I/O --------
// Portable text format: per network, layer sizes followed by row-major
// parameter arrays at full decimal precision (round-trips doubles exactly
// on one platform).

struct NamedNet {
  std::string name;
  const Mlp* net;
};

void save_checkpoint(const std::string& path, const std::vector<NamedNet>& nets);

struct LoadedNet {
  std::string name;
  Mlp net;
};

std::vector<LoadedNet> load_checkpoint(const std::string& path);

}  // namespace hhrl
