#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "inl/errors.hpp"
#include "inl/nn.hpp"
#include "inl/verify/oracles.hpp"

using namespace inl;

namespace {

DenseLayer layer(std::initializer_list<std::initializer_list<double>> w, std::vector<double> b, Activation a) {
  return {Tensor::from_rows(w), std::move(b), a};
}

// Plain-loop forward pass written independently of the engine.
std::vector<double> scalar_forward(const FeedForwardNet& net, std::vector<double> x) {
  for (const auto& l : net.layers()) {
    std::vector<double> z(l.out_dim());
    for (std::size_t o = 0; o < l.out_dim(); ++o) {
      double acc = l.biases[o];
      for (std::size_t i = 0; i < l.in_dim(); ++i) acc += l.weights(o, i) * x[i];
      z[o] = acc;
    }
    switch (l.activation) {
      case Activation::linear: break;
      case Activation::relu:
        for (double& v : z) v = v > 0 ? v : 0;
        break;
      case Activation::sigmoid:
        for (double& v : z) v = 1 / (1 + std::exp(-v));
        break;
      case Activation::tanh:
        for (double& v : z) v = std::tanh(v);
        break;
      case Activation::softmax: {
        double m = z[0];
        for (double v : z) m = std::max(m, v);
        double s = 0;
        for (double& v : z) s += (v = std::exp(v - m));
        for (double& v : z) v /= s;
        break;
      }
    }
    x = z;
  }
  return x;
}

}  // namespace

TEST(Tensor, ShapeInvariantAndErrors) {
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  const Tensor a = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}});
  const auto parts = split_cols(a, std::vector<std::size_t>{2, 1});
  EXPECT_EQ(parts[0], Tensor::from_rows({{1, 2}, {4, 5}}));
  EXPECT_EQ(concat_cols({&parts[0], &parts[1]}), a);
}

TEST(Forward, IdentityLinear) {
  FeedForwardNet net({layer({{1, 0}, {0, 1}}, {0, 0}, Activation::linear)});
  EXPECT_EQ(net.forward(Tensor::from_rows({{1, 2}})), Tensor::from_rows({{1, 2}}));
}

TEST(Forward, ReluClamps) {
  FeedForwardNet net({layer({{1, -1}}, {0}, Activation::relu)});
  EXPECT_EQ(net.forward(Tensor::from_rows({{-3, 2}})), Tensor::from_rows({{0}}));
}

TEST(Forward, ShapeMismatchRejected) {
  FeedForwardNet net({layer({{1, -1}}, {0}, Activation::relu)});
  EXPECT_THROW(net.forward(Tensor::from_rows({{1, 2, 3}})), ShapeError);
}

TEST(Forward, MatchesScalarLoops) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng = make_rng(seed, "test-forward");
    const std::vector<LayerSpec> specs{{5, Activation::tanh}, {3, static_cast<Activation>(seed % 5)}};
    FeedForwardNet net(4, specs, rng);
    for (auto& l : net.layers()) {
      for (double& b : l.biases) b = std::uniform_real_distribution<double>(-1, 1)(rng);
    }
    const std::vector<double> x{0.3, -1.2, 2.0, 0.5};
    const Tensor out = net.forward(Tensor({1, 4}, x));
    const auto want = scalar_forward(net, x);
    for (std::size_t k = 0; k < want.size(); ++k) EXPECT_NEAR(out[k], want[k], 1e-12);
  }
}

TEST(Init, GlorotRangeZeroBias) {
  Rng rng = make_rng(3, "init");
  const std::vector<LayerSpec> specs{{7, Activation::relu}};
  FeedForwardNet net(5, specs, rng);
  const double lim = std::sqrt(6.0 / 12.0);
  for (double w : net.layers()[0].weights.data()) EXPECT_LE(std::abs(w), lim);
  for (double b : net.layers()[0].biases) EXPECT_EQ(b, 0.0);
}

TEST(Backward, ZeroDeltaGivesZero) {
  Rng rng = make_rng(1, "zero");
  const std::vector<LayerSpec> specs{{4, Activation::sigmoid}, {2, Activation::linear}};
  FeedForwardNet net(3, specs, rng);
  net.forward(Tensor::from_rows({{1, 2, 3}, {0, 1, 0}}));
  const auto r = net.backward_from_delta(Tensor::matrix(2, 2));
  for (const auto& g : r.grads) {
    for (double v : g.weights.data()) EXPECT_EQ(v, 0.0);
    for (double v : g.biases) EXPECT_EQ(v, 0.0);
  }
  for (double v : r.delta_in.data()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, SingleLinearSubstitution) {
  FeedForwardNet net({layer({{0.5, -2}}, {0.1}, Activation::linear)});
  net.forward(Tensor::from_rows({{2, 3}}));
  const auto r = net.backward_from_delta(Tensor::from_rows({{1}}));
  EXPECT_EQ(r.grads[0].weights, Tensor::from_rows({{2, 3}}));
  EXPECT_EQ(r.grads[0].biases, std::vector<double>{1});
  EXPECT_EQ(r.delta_in, Tensor::from_rows({{0.5, -2}}));
}

TEST(Backward, MissingCacheAndShape) {
  FeedForwardNet net({layer({{0.5, -2}}, {0.1}, Activation::linear)});
  EXPECT_THROW(net.backward_from_delta(Tensor::from_rows({{1}})), ProtocolError);
  net.forward(Tensor::from_rows({{2, 3}}));
  EXPECT_THROW(net.backward_from_delta(Tensor::from_rows({{1, 1}})), ShapeError);
}

TEST(Backward, ReluDerivativeAtZeroIsZero) {
  FeedForwardNet net({layer({{1}}, {0}, Activation::relu)});
  net.forward(Tensor::from_rows({{0}}));
  const auto r = net.backward_from_delta(Tensor::from_rows({{1}}));
  EXPECT_EQ(r.grads[0].biases[0], 0.0);
}

TEST(Backward, FiniteDifferencesOverRandomNets) {
  double worst = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    Rng rng = make_rng(k, "test-fd");
    const std::size_t in = 1 + rng() % 4;
    const FeedForwardNet net = verify::random_net(rng, in);
    Tensor x = Tensor::matrix(2, in);
    for (double& v : x.data()) v = std::normal_distribution<double>(0, 1)(rng);
    worst = std::max(worst, verify::fd_check_net(net, x, k));
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(Backward, BlockDiagonalSplitMatchesMonolith) {
  // Two linear encoders feeding a head vs one block-diagonal net.
  FeedForwardNet a({layer({{1, 2}}, {0.1}, Activation::linear)});
  FeedForwardNet b({layer({{-1}, {3}}, {0.2, -0.3}, Activation::linear)});
  FeedForwardNet head({layer({{0.5, -1, 2}, {1, 1, 1}}, {0, 0}, Activation::softmax)});
  FeedForwardNet mono({layer({{1, 2, 0}, {0, 0, -1}, {0, 0, 3}}, {0.1, 0.2, -0.3}, Activation::linear),
                       layer({{0.5, -1, 2}, {1, 1, 1}}, {0, 0}, Activation::softmax)});
  const Tensor xa = Tensor::from_rows({{0.3, -0.7}, {1, 2}}), xb = Tensor::from_rows({{0.4}, {-1}});
  const Tensor ua = a.forward(xa), ub = b.forward(xb);
  const Tensor p = head.forward(concat_cols({&ua, &ub}));
  const Tensor x = concat_cols({&xa, &xb});
  EXPECT_EQ(mono.forward(x), p);
  const Tensor delta = Tensor::from_rows({{0.2, -1}, {-0.5, 0.4}});
  const auto hr = head.backward_from_delta(delta);
  const auto parts = split_cols(hr.delta_in, std::vector<std::size_t>{1, 2});
  const auto ga = a.backward_from_delta(parts[0]);
  const auto gb = b.backward_from_delta(parts[1]);
  const auto gm = mono.backward_from_delta(delta);
  EXPECT_NEAR(ga.grads[0].weights(0, 1), gm.grads[0].weights(0, 1), 1e-12);
  EXPECT_NEAR(gb.grads[0].weights(1, 0), gm.grads[0].weights(2, 2), 1e-12);
  EXPECT_NEAR(gb.grads[0].biases[0], gm.grads[0].biases[1], 1e-12);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(hr.grads[0].weights[i], gm.grads[1].weights[i], 1e-12);
}

TEST(Sgd, Rules) {
  FeedForwardNet net({layer({{1.0}}, {0}, Activation::linear)});
  NetGrad g{{Tensor::from_rows({{0.5}}), {0.0}}};
  const auto before = net.flat_params();
  net.apply_sgd(g, 0.0);
  EXPECT_EQ(net.flat_params(), before);
  net.apply_sgd(g, 0.1);
  EXPECT_EQ(net.layers()[0].weights(0, 0), 0.95);
  EXPECT_THROW(net.apply_sgd(g, -0.1), ValidationError);
}

TEST(Sgd, TwoStepsEqualSummedStep) {
  FeedForwardNet n1({layer({{0.25, -1}}, {0.5}, Activation::linear)});
  FeedForwardNet n2 = n1;
  NetGrad g1{{Tensor::from_rows({{0.5, 0.25}}), {0.125}}}, g2{{Tensor::from_rows({{-0.25, 1}}), {0.5}}};
  n1.apply_sgd(g1, 0.5);
  n1.apply_sgd(g2, 0.5);
  NetGrad sum = g1;
  add_scaled(sum, g2);
  n2.apply_sgd(sum, 0.5);
  EXPECT_EQ(n1.flat_params(), n2.flat_params());
}

TEST(Latent, Reparametrisation) {
  const GaussianHead h{1};
  const std::vector<double> mu{0.7}, lv{0.0};
  EXPECT_EQ(sample_latent(h, mu, lv, std::vector<double>{0.0})[0], 0.7);
  EXPECT_EQ(sample_latent(h, mu, lv, std::vector<double>{1.0})[0], 1.7);
  EXPECT_THROW(sample_latent(GaussianHead{2}, mu, lv, std::vector<double>{1.0}), ShapeError);
}

TEST(Latent, MonteCarloMean) {
  Rng rng = make_rng(11, "mc-mean");
  const std::vector<double> mu{0.5, -1}, lv{0.3, -0.8};
  std::normal_distribution<double> n(0, 1);
  std::vector<double> sum(2, 0.0);
  const int N = 100000;
  for (int t = 0; t < N; ++t) {
    const auto u = sample_latent(GaussianHead{2}, mu, lv, std::vector<double>{n(rng), n(rng)});
    sum[0] += u[0];
    sum[1] += u[1];
  }
  for (int i = 0; i < 2; ++i) EXPECT_LE(std::abs(sum[i] / N - mu[i]), 4 * std::exp(lv[i] / 2) / std::sqrt(double(N)));
}

TEST(LogRatio, Examples) {
  const std::vector<double> zero{0, 0};
  EXPECT_EQ(gaussian_log_ratio(std::vector<double>{0.3, -2}, zero, zero), 0.0);
  const std::vector<double> mu{1, -2};
  EXPECT_NEAR(gaussian_log_ratio(mu, mu, zero), 0.5 * 5, 1e-14);
  EXPECT_THROW(gaussian_log_ratio(std::vector<double>{NAN, 0}, zero, zero), ValidationError);
}

TEST(LogRatio, MonteCarloMatchesClosedFormKl) {
  Rng rng = make_rng(5, "mc-kl");
  std::normal_distribution<double> n(0, 1);
  const std::vector<double> mu{1}, lv{0};
  double acc = 0;
  const int N = 100000;
  for (int t = 0; t < N; ++t) {
    const auto u = sample_latent(GaussianHead{1}, mu, lv, std::vector<double>{n(rng)});
    acc += gaussian_log_ratio(u, mu, lv);
  }
  // Closed form 1/2 sum(mu^2 + sigma^2 - 1 - logvar) = 0.5.
  EXPECT_NEAR(acc / N, 0.5, 0.01);
  EXPECT_NEAR(gaussian_kl_standard(mu, lv), 0.5, 1e-15);
}

TEST(LogLoss, Examples) {
  EXPECT_EQ(log_loss(0, std::vector<double>{1, 0}), 0.0);
  EXPECT_NEAR(log_loss(1, std::vector<double>{0.5, 0.5}), std::log(2.0), 1e-15);
  EXPECT_NEAR(log_loss(3, std::vector<double>(10, 0.1)), std::log(10.0), 1e-12);
  EXPECT_NEAR(log_loss(1, std::vector<double>{1, 0}), -std::log(kLogLossFloor), 1e-9);
  EXPECT_THROW(log_loss(0, std::vector<double>{0.5, 0.4}), ValidationError);
  EXPECT_THROW(log_loss(0, std::vector<double>{1.5, -0.5}), ValidationError);
}

TEST(Average, IdenticalNetsAreFixedPoint) {
  Rng rng = make_rng(9, "avg");
  const std::vector<LayerSpec> specs{{3, Activation::relu}};
  const FeedForwardNet n(4, specs, rng);
  const FeedForwardNet* all[] = {&n, &n, &n};
  EXPECT_EQ(average_nets(all).flat_params(), n.flat_params());
}
