#include "hhrl/numerics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hhrl/rng.hpp"

namespace hhrl {

Mlp make_mlp(const std::vector<int>& layer_sizes, std::mt19937_64& rng) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("mlp: need at least two layer sizes");
  Mlp net;
  net.layer_sizes = layer_sizes;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    int in = layer_sizes[l], out = layer_sizes[l + 1];
    if (in <= 0 || out <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Eigen::MatrixXd w(out, in);
    Eigen::VectorXd b(out);
    for (int i = 0; i < out; ++i) {
      for (int j = 0; j < in; ++j) w(i, j) = uniform(rng, -bound, bound);
    }
    for (int i = 0; i < out; ++i) b[i] = uniform(rng, -bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

ForwardTrace forward_trace(const Mlp& net, const Eigen::MatrixXd& input) {
  if (input.rows() != net.input_size()) throw std::invalid_argument("mlp: input size mismatch");
  ForwardTrace trace;
  trace.acts.reserve(net.layer_count() + 1);
  trace.acts.push_back(input);
  for (int l = 0; l < net.layer_count(); ++l) {
    Eigen::MatrixXd z = (net.weights[l] * trace.acts.back()).colwise() + net.biases[l];
    if (l + 1 < net.layer_count()) z = z.array().tanh();
    trace.acts.push_back(std::move(z));
  }
  return trace;
}

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& input) {
  if (input.rows() != net.input_size()) throw std::invalid_argument("mlp: input size mismatch");
  Eigen::MatrixXd h = input;
  for (int l = 0; l < net.layer_count(); ++l) {
    Eigen::MatrixXd z = (net.weights[l] * h).colwise() + net.biases[l];
    if (l + 1 < net.layer_count()) z = z.array().tanh();
    h = std::move(z);
  }
  return h;
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input) {
  return forward_batch(net, input);
}

bool Gradients::finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases) {
    if (!b.allFinite()) return false;
  }
  return input.allFinite();
}

Gradients backward_trace(const Mlp& net, const ForwardTrace& trace,
                         const Eigen::MatrixXd& upstream) {
  if (upstream.rows() != net.output_size() || upstream.cols() != trace.acts.front().cols()) {
    throw std::invalid_argument("mlp: upstream gradient shape mismatch");
  }
  Gradients grads;
  grads.weights.resize(net.layer_count());
  grads.biases.resize(net.layer_count());
  Eigen::MatrixXd delta = upstream;
  for (int l = net.layer_count() - 1; l >= 0; --l) {
    grads.weights[l] = delta * trace.acts[l].transpose();
    grads.biases[l] = delta.rowwise().sum();
    Eigen::MatrixXd prev = net.weights[l].transpose() * delta;
    if (l > 0) prev.array() *= 1.0 - trace.acts[l].array().square();  // through tanh
    delta = std::move(prev);
  }
  grads.input = std::move(delta);
  return grads;
}

Gradients backward(const Mlp& net, const Eigen::VectorXd& input,
                   const Eigen::VectorXd& upstream) {
  return backward_trace(net, forward_trace(net, input), upstream);
}

AdamState make_adam(const Mlp& net, double alpha) {
  AdamState st;
  st.alpha = alpha;
  for (int l = 0; l < net.layer_count(); ++l) {
    st.m_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    st.v_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    st.m_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    st.v_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return st;
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& state) {
  if (static_cast<int>(grads.weights.size()) != net.layer_count()) {
    throw std::invalid_argument("adam: gradient layer count mismatch");
  }
  for (int l = 0; l < net.layer_count(); ++l) {
    if (grads.weights[l].rows() != net.weights[l].rows() ||
        grads.weights[l].cols() != net.weights[l].cols() ||
        grads.biases[l].size() != net.biases[l].size()) {
      throw std::invalid_argument("adam: gradient shape mismatch");
    }
    if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite()) {
      throw std::runtime_error("adam: non-finite gradient at layer " + std::to_string(l));
    }
  }
  ++state.step;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (int l = 0; l < net.layer_count(); ++l) {
    state.m_w[l] = state.beta1 * state.m_w[l] + (1.0 - state.beta1) * grads.weights[l];
    state.v_w[l] = state.beta2 * state.v_w[l].array() +
                   (1.0 - state.beta2) * grads.weights[l].array().square();
    net.weights[l].array() -= state.alpha * (state.m_w[l].array() / bc1) /
                              ((state.v_w[l].array() / bc2).sqrt() + state.eps);
    state.m_b[l] = state.beta1 * state.m_b[l] + (1.0 - state.beta1) * grads.biases[l];
    state.v_b[l] = state.beta2 * state.v_b[l].array() +
                   (1.0 - state.beta2) * grads.biases[l].array().square();
    net.biases[l].array() -= state.alpha * (state.m_b[l].array() / bc1) /
                             ((state.v_b[l].array() / bc2).sqrt() + state.eps);
  }
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (target.layer_sizes != online.layer_sizes) {
    throw std::invalid_argument("soft_update: shape mismatch");
  }
  for (int l = 0; l < target.layer_count(); ++l) {
    target.weights[l] = tau * online.weights[l] + (1.0 - tau) * target.weights[l];
    target.biases[l] = tau * online.biases[l] + (1.0 - tau) * target.biases[l];
  }
}

namespace {

void write_value(std::ostream& os, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedNet>& nets) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os << "mlpckpt v1\n";
  os << "nets " << nets.size() << "\n";
  for (const auto& [name, net] : nets) {
    os << "net " << name << "\n";
    os << "layers " << net->layer_sizes.size();
    for (int s : net->layer_sizes) os << " " << s;
    os << "\n";
    for (int l = 0; l < net->layer_count(); ++l) {
      os << "W " << l << " " << net->weights[l].rows() << " " << net->weights[l].cols() << "\n";
      for (int i = 0; i < net->weights[l].rows(); ++i) {
        for (int j = 0; j < net->weights[l].cols(); ++j) {
          if (j > 0) os << " ";
          write_value(os, net->weights[l](i, j));
        }
        os << "\n";
      }
      os << "b " << l << " " << net->biases[l].size() << "\n";
      for (int i = 0; i < net->biases[l].size(); ++i) {
        if (i > 0) os << " ";
        write_value(os, net->biases[l][i]);
      }
      os << "\n";
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

std::vector<LoadedNet> load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string tag, version;
  is >> tag >> version;
  if (tag != "mlpckpt" || version != "v1") {
    throw std::runtime_error("checkpoint: bad header in " + path);
  }
  std::size_t count = 0;
  is >> tag >> count;
  if (tag != "nets") throw std::runtime_error("checkpoint: missing net count");

  std::vector<LoadedNet> nets;
  for (std::size_t n = 0; n < count; ++n) {
    LoadedNet loaded;
    std::size_t sizes = 0;
    is >> tag >> loaded.name;
    if (tag != "net") throw std::runtime_error("checkpoint: expected net record");
    is >> tag >> sizes;
    if (tag != "layers" || sizes < 2) throw std::runtime_error("checkpoint: bad layer record");
    loaded.net.layer_sizes.resize(sizes);
    for (auto& s : loaded.net.layer_sizes) is >> s;
    for (std::size_t l = 0; l + 1 < sizes; ++l) {
      int idx = 0;
      Eigen::Index rows = 0, cols = 0;
      is >> tag >> idx >> rows >> cols;
      if (tag != "W" || rows != loaded.net.layer_sizes[l + 1] ||
          cols != loaded.net.layer_sizes[l]) {
        throw std::runtime_error("checkpoint: bad weight record");
      }
      Eigen::MatrixXd w(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) is >> w(i, j);
      }
      Eigen::Index blen = 0;
      is >> tag >> idx >> blen;
      if (tag != "b" || blen != rows) throw std::runtime_error("checkpoint: bad bias record");
      Eigen::VectorXd b(blen);
      for (Eigen::Index i = 0; i < blen; ++i) is >> b[i];
      loaded.net.weights.push_back(std::move(w));
      loaded.net.biases.push_back(std::move(b));
    }
    if (!is) throw std::runtime_error("checkpoint: truncated file " + path);
    nets.push_back(std::move(loaded));
  }
  return nets;
}

}  // namespace hhrl
