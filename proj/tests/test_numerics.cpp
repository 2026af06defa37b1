#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "hhrl/numerics.hpp"
#include "hhrl/rng.hpp"
#include "oracles.hpp"

using namespace hhrl;

namespace {

Eigen::VectorXd random_vec(int n, std::mt19937_64& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng, -1.0, 1.0);
  return v;
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("forward: zero parameters give a zero output") {
  std::mt19937_64 rng(1);
  Mlp net = make_mlp({4, 8, 2}, rng);
  for (auto& w : net.weights) w.setZero();
  for (auto& b : net.biases) b.setZero();
  Eigen::VectorXd out = forward(net, random_vec(4, rng));
  CHECK(out.norm() == 0.0);
}

TEST_CASE("forward: identity single layer passes the input through") {
  std::mt19937_64 rng(2);
  Mlp net = make_mlp({3, 3}, rng);
  net.weights[0].setIdentity();
  net.biases[0].setZero();
  Eigen::VectorXd in = random_vec(3, rng);
  CHECK((forward(net, in) - in).norm() == 0.0);
}

TEST_CASE("forward: matches an independent layer-by-layer recomputation") {
  std::mt19937_64 rng(3);
  Mlp net = make_mlp({5, 7, 7, 2}, rng);
  Eigen::VectorXd in = random_vec(5, rng);
  Eigen::VectorXd h = in;
  for (int l = 0; l < net.layer_count(); ++l) {
    Eigen::VectorXd z = net.weights[l] * h + net.biases[l];
    if (l + 1 < net.layer_count()) {
      for (int i = 0; i < z.size(); ++i) z[i] = std::tanh(z[i]);
    }
    h = z;
  }
  CHECK((forward(net, in) - h).norm() < 1e-14);
}

TEST_CASE("forward: shape mismatch throws") {
  std::mt19937_64 rng(4);
  Mlp net = make_mlp({4, 8, 2}, rng);
  CHECK_THROWS_AS(forward(net, random_vec(5, rng)), std::invalid_argument);
}

TEST_CASE("backward: zero upstream zeroes every gradient") {
  std::mt19937_64 rng(5);
  Mlp net = make_mlp({4, 8, 2}, rng);
  Gradients g = backward(net, random_vec(4, rng), Eigen::VectorXd::Zero(2));
  for (const auto& w : g.weights) CHECK(w.norm() == 0.0);
  for (const auto& b : g.biases) CHECK(b.norm() == 0.0);
  CHECK(g.input.norm() == 0.0);
}

TEST_CASE("backward: parameter gradients match central finite differences") {
  const std::vector<std::vector<int>> shapes = {{4, 8, 2}, {10, 32, 32, 3}};
  for (const auto& shape : shapes) {
    for (int seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(1000 + seed);
      Mlp net = make_mlp(shape, rng);
      Eigen::VectorXd in = random_vec(shape.front(), rng);
      Eigen::VectorXd upstream = random_vec(shape.back(), rng);
      Gradients analytic = backward(net, in, upstream);
      auto loss = [&]() { return upstream.dot(forward(net, in)); };
      oracle::FdCheck check = oracle::check_param_gradients(net, analytic, loss);
      CHECK_MESSAGE(check.ok, "shape[0]=", shape[0], " seed=", seed,
                    " max_rel_err=", check.max_rel_err);
    }
  }
}

TEST_CASE("backward: input gradient matches central finite differences") {
  std::mt19937_64 rng(7);
  Mlp net = make_mlp({6, 16, 3}, rng);
  Eigen::VectorXd in = random_vec(6, rng);
  Eigen::VectorXd upstream = random_vec(3, rng);
  Gradients analytic = backward(net, in, upstream);
  const double h = 1e-5;
  for (int i = 0; i < in.size(); ++i) {
    Eigen::VectorXd up = in, down = in;
    up[i] += h;
    down[i] -= h;
    double numeric = (upstream.dot(forward(net, up)) - upstream.dot(forward(net, down))) / (2 * h);
    CHECK(oracle::fd_error(analytic.input(i, 0), numeric) < 1e-4);
  }
}

TEST_CASE("adam: zero gradients leave parameters fixed") {
  std::mt19937_64 rng(8);
  Mlp net = make_mlp({3, 5, 1}, rng);
  Mlp before = net;
  AdamState st = make_adam(net, 1e-3);
  Gradients zero;
  for (int l = 0; l < net.layer_count(); ++l) {
    zero.weights.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    zero.biases.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  adam_step(net, zero, st);
  CHECK(st.step == 1);
  for (int l = 0; l < net.layer_count(); ++l) {
    CHECK((net.weights[l] - before.weights[l]).norm() == 0.0);
    CHECK((net.biases[l] - before.biases[l]).norm() == 0.0);
  }
}

TEST_CASE("adam: first unit-gradient step is one bias-corrected alpha") {
  std::mt19937_64 rng(9);
  Mlp net = make_mlp({1, 1}, rng);
  net.weights[0](0, 0) = 0.5;
  AdamState st = make_adam(net, 1e-3);
  Gradients g;
  g.weights.push_back(Eigen::MatrixXd::Ones(1, 1));
  g.biases.push_back(Eigen::VectorXd::Zero(1));
  adam_step(net, g, st);
  // m_hat = 1, v_hat = 1: the step is exactly -alpha / (1 + eps).
  CHECK(net.weights[0](0, 0) == doctest::Approx(0.5 - 1e-3).epsilon(1e-6));
}

TEST_CASE("adam: identical runs stay identical") {
  auto run = [] {
    std::mt19937_64 rng(10);
    Mlp net = make_mlp({4, 8, 2}, rng);
    AdamState st = make_adam(net, 1e-3);
    for (int k = 0; k < 25; ++k) {
      Eigen::VectorXd in = random_vec(4, rng);
      Gradients g = backward(net, in, Eigen::VectorXd::Ones(2));
      adam_step(net, g, st);
    }
    return net;
  };
  Mlp a = run(), b = run();
  for (int l = 0; l < a.layer_count(); ++l) {
    CHECK((a.weights[l] - b.weights[l]).norm() == 0.0);
  }
}

TEST_CASE("adam: non-finite gradients abort") {
  std::mt19937_64 rng(11);
  Mlp net = make_mlp({2, 2}, rng);
  AdamState st = make_adam(net, 1e-3);
  Gradients g;
  g.weights.push_back(Eigen::MatrixXd::Constant(2, 2, std::nan("")));
  g.biases.push_back(Eigen::VectorXd::Zero(2));
  CHECK_THROWS_AS(adam_step(net, g, st), std::runtime_error);
}

TEST_CASE("soft_update: endpoint taus copy or keep") {
  std::mt19937_64 rng(12);
  Mlp online = make_mlp({3, 4, 2}, rng);
  Mlp target = make_mlp({3, 4, 2}, rng);
  Mlp kept = target;
  soft_update(target, online, 0.0);
  for (int l = 0; l < target.layer_count(); ++l) {
    CHECK((target.weights[l] - kept.weights[l]).norm() == 0.0);
  }
  soft_update(target, online, 1.0);
  for (int l = 0; l < target.layer_count(); ++l) {
    CHECK((target.weights[l] - online.weights[l]).norm() == 0.0);
  }
}

TEST_CASE("soft_update: scalar blend and two-step composition") {
  std::mt19937_64 rng(13);
  Mlp online = make_mlp({1, 1}, rng);
  Mlp target = online;
  target.weights[0](0, 0) = 0.0;
  online.weights[0](0, 0) = 1.0;
  soft_update(target, online, 0.005);
  CHECK(target.weights[0](0, 0) == doctest::Approx(0.005));

  // tau1 then tau2 equals a single blend with 1 - (1-tau1)(1-tau2).
  Mlp two = online;
  two.weights[0](0, 0) = 0.0;
  soft_update(two, online, 0.1);
  soft_update(two, online, 0.25);
  Mlp one = online;
  one.weights[0](0, 0) = 0.0;
  soft_update(one, online, 1.0 - 0.9 * 0.75);
  CHECK(two.weights[0](0, 0) == doctest::Approx(one.weights[0](0, 0)).epsilon(1e-12));
}

TEST_CASE("checkpoint: reload reproduces forward outputs bit-exactly") {
  std::mt19937_64 rng(14);
  Mlp a = make_mlp({6, 16, 16, 2}, rng);
  Mlp b = make_mlp({4, 8, 1}, rng);
  std::string path = (std::filesystem::temp_directory_path() / "hhrl_ckpt_test.txt").string();
  save_checkpoint(path, {{"alpha", &a}, {"beta", &b}});
  auto loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].name == "alpha");
  CHECK(loaded[1].name == "beta");
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd in = random_vec(6, rng);
    Eigen::VectorXd expect = forward(a, in);
    Eigen::VectorXd got = forward(loaded[0].net, in);
    CHECK((expect - got).norm() == 0.0);  // bit-exact on this platform
  }
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: corrupt files are rejected") {
  std::string path = (std::filesystem::temp_directory_path() / "hhrl_ckpt_bad.txt").string();
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("not a checkpoint\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/nowhere.txt"), std::runtime_error);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
