#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "cea/nn.hpp"
#include "cea/rng.hpp"

using namespace cea;
using nn::Activation;
using nn::DenseNet;
using nn::Vector;

namespace {

// independent straight-line oracle: plain nested loops, no shared code path
Vector oracle_forward(const DenseNet& net, const Vector& x) {
  Vector cur = x;
  for (const nn::Layer& l : net.layers()) {
    Vector next(static_cast<std::size_t>(l.w.rows), 0.0);
    for (int r = 0; r < l.w.rows; ++r) {
      double acc = l.b[static_cast<std::size_t>(r)];
      for (int c = 0; c < l.w.cols; ++c)
        acc += l.w.at(r, c) * cur[static_cast<std::size_t>(c)];
      switch (l.act) {
        case Activation::Identity: next[static_cast<std::size_t>(r)] = acc; break;
        case Activation::Relu:
          next[static_cast<std::size_t>(r)] = acc > 0 ? acc : 0;
          break;
        case Activation::Tanh:
          next[static_cast<std::size_t>(r)] = std::tanh(acc);
          break;
      }
    }
    cur = next;
  }
  return cur;
}

// scalar loss used by the finite-difference checks: weighted sum of outputs
double probe_loss(const DenseNet& net, const Vector& x, const Vector& w) {
  const Vector y = net.forward(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += w[i] * y[i];
  return acc;
}

double& param_ref(DenseNet& net, std::size_t flat) {
  for (nn::Layer& l : net.layers()) {
    if (flat < l.w.data.size()) return l.w.data[flat];
    flat -= l.w.data.size();
    if (flat < l.b.size()) return l.b[flat];
    flat -= l.b.size();
  }
  throw std::out_of_range("param index");
}

double tape_value(const nn::GradientTape& tape, std::size_t flat) {
  for (std::size_t l = 0; l < tape.dw.size(); ++l) {
    if (flat < tape.dw[l].data.size()) return tape.dw[l].data[flat];
    flat -= tape.dw[l].data.size();
    if (flat < tape.db[l].size()) return tape.db[l][flat];
    flat -= tape.db[l].size();
  }
  throw std::out_of_range("tape index");
}

}  // namespace

TEST_CASE("forward: identity and relu base cases") {
  nn::Layer l;
  l.w = nn::Matrix(2, 2);
  l.w.at(0, 0) = 1.0;
  l.w.at(1, 1) = 1.0;
  l.b = {0.0, 0.0};
  l.act = Activation::Identity;
  DenseNet id_net(2, {l});
  CHECK(id_net.forward(Vector{1, 2}) == Vector{1, 2});

  l.act = Activation::Relu;
  DenseNet relu_net(2, {l});
  CHECK(relu_net.forward(Vector{-1, 2}) == Vector{0, 2});
}

TEST_CASE("forward: matches the straight-line matrix oracle") {
  Rng rng(1);
  for (int round = 0; round < 10; ++round) {
    DenseNet net = DenseNet::make_mlp(5, {11, 7}, 3, Activation::Relu,
                                      Activation::Tanh, rng);
    Vector x(5);
    for (double& v : x) v = rng.uniform(-2, 2);
    const Vector got = net.forward(x);
    const Vector want = oracle_forward(net, x);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("forward: pure function of parameters and input") {
  Rng rng(2);
  DenseNet net = DenseNet::make_mlp(3, {8}, 2, Activation::Tanh,
                                    Activation::Identity, rng);
  const Vector x = {0.3, -0.7, 1.1};
  CHECK(net.forward(x) == net.forward(x));
  CHECK_THROWS_AS((void)net.forward(Vector{1.0}), std::invalid_argument);
}

TEST_CASE("backward: scalar linear derivative") {
  // y = w*x, loss = y  =>  dloss/dw = x
  nn::Layer l;
  l.w = nn::Matrix(1, 1);
  l.w.at(0, 0) = 2.0;
  l.b = {0.0};
  l.act = Activation::Identity;
  DenseNet net(1, {l});

  nn::ForwardCache cache;
  net.forward(Vector{3.0}, cache);
  nn::GradientTape tape(net);
  const Vector in_grad = net.backward(cache, Vector{1.0}, tape);
  CHECK(tape.dw[0].at(0, 0) == doctest::Approx(3.0));
  CHECK(tape.db[0][0] == doctest::Approx(1.0));
  CHECK(in_grad[0] == doctest::Approx(2.0));
}

TEST_CASE("backward: zero loss gradient gives an all-zero tape") {
  Rng rng(3);
  DenseNet net = DenseNet::make_mlp(4, {6}, 3, Activation::Relu,
                                    Activation::Identity, rng);
  nn::ForwardCache cache;
  net.forward(Vector{0.1, 0.2, 0.3, 0.4}, cache);
  nn::GradientTape tape(net);
  net.backward(cache, Vector{0, 0, 0}, tape);
  CHECK(tape.global_norm() == 0.0);
}

TEST_CASE("backward: missing cache is a state error") {
  Rng rng(4);
  DenseNet net = DenseNet::make_mlp(2, {4}, 1, Activation::Relu,
                                    Activation::Identity, rng);
  nn::ForwardCache cache;  // never filled
  nn::GradientTape tape(net);
  CHECK_THROWS_AS(net.backward(cache, Vector{1.0}, tape), std::logic_error);
}

TEST_CASE("backward: matches central finite differences on random nets") {
  Rng rng(5);
  int checked = 0;
  for (int round = 0; round < 6; ++round) {
    const Activation hidden = round % 3 == 0   ? Activation::Relu
                              : round % 3 == 1 ? Activation::Tanh
                                               : Activation::Identity;
    DenseNet net = DenseNet::make_mlp(4, {9, 8}, 3, hidden, Activation::Tanh, rng);
    Vector x(4), lw(3);
    for (double& v : x) v = rng.uniform(-1.5, 1.5);
    for (double& v : lw) v = rng.uniform(-1, 1);

    nn::ForwardCache cache;
    net.forward(x, cache);
    nn::GradientTape tape(net);
    net.backward(cache, lw, tape);

    const std::size_t n_params = net.param_count();
    for (int probe = 0; probe < 20; ++probe, ++checked) {
      const std::size_t idx = rng.uniform_index(n_params);
      const double eps = 1e-5;
      double& p = param_ref(net, idx);
      const double saved = p;
      p = saved + eps;
      const double up = probe_loss(net, x, lw);
      p = saved - eps;
      const double down = probe_loss(net, x, lw);
      p = saved;
      const double fd = (up - down) / (2 * eps);
      const double an = tape_value(tape, idx);
      const double scale = std::max({std::fabs(fd), std::fabs(an), 1e-6});
      CHECK(std::fabs(fd - an) / scale < 1e-4);
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  Rng rng(6);
  DenseNet net = DenseNet::make_mlp(3, {5}, 2, Activation::Relu,
                                    Activation::Identity, rng);
  const DenseNet before = net;
  nn::AdamState opt(net, {});
  nn::GradientTape tape(net);  // zeroed
  CHECK(opt.step(net, tape));
  for (std::size_t l = 0; l < net.layers().size(); ++l)
    CHECK(net.layers()[l].w.data == before.layers()[l].w.data);
}

TEST_CASE("adam: descent on w^2 and convergence on a convex quadratic") {
  // single weight, loss f(w) = w^2, df/dw = 2w
  nn::Layer l;
  l.w = nn::Matrix(1, 1);
  l.w.at(0, 0) = 1.0;
  l.b = {0.0};
  l.act = Activation::Identity;
  DenseNet net(1, {l});
  nn::AdamState opt(net, {.lr = 0.1});
  nn::GradientTape tape(net);
  tape.dw[0].at(0, 0) = 2.0 * net.layers()[0].w.at(0, 0);
  CHECK(opt.step(net, tape));
  CHECK(std::fabs(net.layers()[0].w.at(0, 0)) < 1.0);

  // full quadratic: 200 steps drive the loss below 1e-3 of the start
  Rng rng(7);
  DenseNet q = DenseNet::make_mlp(1, {}, 4, Activation::Identity,
                                  Activation::Identity, rng);
  for (double& w : q.layers()[0].w.data) w = rng.uniform(-1, 1);
  for (double& b : q.layers()[0].b) b = rng.uniform(-1, 1);
  nn::AdamState qopt(q, {.lr = 0.05});
  auto loss_of = [&] {
    double acc = 0.0;
    for (double w : q.layers()[0].w.data) acc += w * w;
    for (double b : q.layers()[0].b) acc += b * b;
    return acc;
  };
  const double start = loss_of();
  for (int step = 0; step < 200; ++step) {
    nn::GradientTape t(q);
    for (std::size_t i = 0; i < q.layers()[0].w.data.size(); ++i)
      t.dw[0].data[i] = 2.0 * q.layers()[0].w.data[i];
    for (std::size_t i = 0; i < q.layers()[0].b.size(); ++i)
      t.db[0][i] = 2.0 * q.layers()[0].b[i];
    REQUIRE(qopt.step(q, t));
  }
  CHECK(loss_of() < 1e-3 * start);
}

TEST_CASE("adam: non-finite gradients refuse the step") {
  Rng rng(8);
  DenseNet net = DenseNet::make_mlp(2, {3}, 1, Activation::Relu,
                                    Activation::Identity, rng);
  const DenseNet before = net;
  nn::AdamState opt(net, {});
  nn::GradientTape tape(net);
  tape.dw[0].at(0, 0) = std::nan("");
  CHECK_FALSE(opt.step(net, tape));
  CHECK(net.layers()[0].w.data == before.layers()[0].w.data);
}

TEST_CASE("hard_update: exact copy, idempotent, then independent") {
  Rng rng(9);
  DenseNet src = DenseNet::make_mlp(3, {4}, 2, Activation::Relu,
                                    Activation::Identity, rng);
  DenseNet dst = DenseNet::make_mlp(3, {4}, 2, Activation::Relu,
                                    Activation::Identity, rng);
  nn::hard_update(src, dst);
  CHECK(dst.layers()[0].w.data == src.layers()[0].w.data);
  nn::hard_update(src, dst);  // idempotent
  CHECK(dst.layers()[1].b == src.layers()[1].b);

  src.layers()[0].w.at(0, 0) += 5.0;  // copy semantics
  CHECK(dst.layers()[0].w.at(0, 0) != src.layers()[0].w.at(0, 0));
}

TEST_CASE("soft_update: blend math and tau=1 bit-equality with hard_update") {
  Rng rng(10);
  DenseNet src = DenseNet::make_mlp(2, {3}, 2, Activation::Tanh,
                                    Activation::Identity, rng);
  DenseNet a = DenseNet::make_mlp(2, {3}, 2, Activation::Tanh,
                                  Activation::Identity, rng);
  DenseNet b = a;

  nn::soft_update(src, a, 1.0);
  nn::hard_update(src, b);
  CHECK(a.layers()[0].w.data == b.layers()[0].w.data);
  CHECK(a.layers()[1].b == b.layers()[1].b);

  // scalar case: source 1, target 0, tau = 0.005 -> 0.005
  nn::Layer l;
  l.w = nn::Matrix(1, 1);
  l.b = {0.0};
  l.act = Activation::Identity;
  DenseNet s1(1, {l}), t1(1, {l});
  s1.layers()[0].w.at(0, 0) = 1.0;
  nn::soft_update(s1, t1, 0.005);
  CHECK(t1.layers()[0].w.at(0, 0) == doctest::Approx(0.005));
  // second update with a frozen source: 1 - (1 - tau)^2
  nn::soft_update(s1, t1, 0.005);
  CHECK(t1.layers()[0].w.at(0, 0) == doctest::Approx(1.0 - 0.995 * 0.995));

  CHECK_THROWS_AS(nn::soft_update(s1, t1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(nn::soft_update(s1, t1, 1.5), std::invalid_argument);
}

TEST_CASE("snapshot: round trip preserves parameters exactly") {
  Rng rng(11);
  DenseNet net = DenseNet::make_mlp(4, {7, 5}, 3, Activation::Relu,
                                    Activation::Tanh, rng);
  const auto path = std::filesystem::temp_directory_path() / "cea_nn_test.bin";
  nn::save_snapshot(net, path.string());
  const DenseNet back = nn::load_snapshot(path.string());
  REQUIRE(back.layers().size() == net.layers().size());
  CHECK(back.input_dim() == net.input_dim());
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    CHECK(back.layers()[l].w.data == net.layers()[l].w.data);
    CHECK(back.layers()[l].b == net.layers()[l].b);
    CHECK(back.layers()[l].act == net.layers()[l].act);
  }
  std::filesystem::remove(path);
}
