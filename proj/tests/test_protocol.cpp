#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "inl/errors.hpp"
#include "inl/experiment.hpp"
#include "inl/info.hpp"
#include "inl/io.hpp"
#include "inl/protocol.hpp"
#include "inl/verify/oracles.hpp"

using namespace inl;

namespace {

NodeModel node(NodeId id, NodeRole role, std::vector<DenseLayer> layers, std::optional<GaussianHead> head = {}) {
  return {id, role, FeedForwardNet(std::move(layers)), head};
}

DenseLayer eye(std::size_t n, Activation a) {
  Tensor w = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) w(i, i) = 1;
  return {w, std::vector<double>(n, 0.0), a};
}

std::vector<double> softmax(std::vector<double> z) {
  double m = *std::max_element(z.begin(), z.end()), s = 0;
  for (double& v : z) s += (v = std::exp(v - m));
  for (double& v : z) v /= s;
  return z;
}

InlModel small_star(std::uint64_t seed, bool with_aux) {
  const DagNetwork dag = make_star(2);
  return build_model(dag, default_architectures(dag, 3, 6, 2), {{1, 4}, {2, 3}}, 3, seed, with_aux);
}

}  // namespace

TEST(Forward, IdentityPipelineIsSoftmax) {
  const DagNetwork dag(2, {{1, 2, 1e9}}, {1}, 2);
  InlModel m(dag, {{1, node(1, NodeRole::source, {eye(3, Activation::linear)})}, {2, node(2, NodeRole::decision, {eye(3, Activation::softmax)})}},
             {{1, 3}});
  const Tensor x = Tensor::from_rows({{0.1, 2, -1}});
  const auto st = forward_pass(m, {{1, x}}, zero_noise(m, 1));
  const auto want = softmax({0.1, 2, -1});
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(st.decision_probs[k], want[k], 1e-15);
  const Tensor p = infer(m, {{1, x}});
  EXPECT_EQ(p, st.decision_probs);
}

TEST(Forward, IncompatibleModelRejected) {
  const DagNetwork dag(2, {{1, 2, 1e9}}, {1}, 2);
  EXPECT_THROW(InlModel(dag, {{1, node(1, NodeRole::source, {eye(3, Activation::linear)})}, {2, node(2, NodeRole::decision, {eye(2, Activation::softmax)})}},
                        {{1, 3}}),
               ValidationError);
}

TEST(Forward, StarMatchesMonolith) {
  InlModel m = small_star(4, false);
  const auto b = verify::random_batch(m, 5, 4);
  const auto st = forward_pass(m, b.views, zero_noise(m, 5));
  const auto oracle = verify::monolithic_gradients(m, b.views, b.labels, zero_noise(m, 5), {});
  for (std::size_t i = 0; i < st.decision_probs.size(); ++i) EXPECT_NEAR(st.decision_probs[i], oracle.probs[i], 1e-12);
}

TEST(Forward, FiveNodeConcatenationOrder) {
  InlModel m = verify::random_five_node_model(8);
  const auto b = verify::random_batch(m, 3, 8);
  const auto st = forward_pass(m, b.views, zero_noise(m, 3));
  const Tensor& u1 = st.outputs.at(1);
  const Tensor& u2 = st.outputs.at(2);
  const Tensor& u3 = st.outputs.at(3);
  EXPECT_EQ(m.node(4).net.predict(concat_cols({&u2, &u3})), st.outputs.at(4));
  const Tensor& u4 = st.outputs.at(4);
  EXPECT_EQ(m.node(5).net.predict(concat_cols({&u1, &u4})), st.decision_probs);
  EXPECT_EQ(m.node(1).net.in_dim(), m.input_dims().at(1));
}

TEST(StarLoss, Examples) {
  const Tensor half = Tensor::from_rows({{0.5, 0.5}});
  LatentSample z{Tensor::from_rows({{0}}), Tensor::from_rows({{0}}), Tensor::from_rows({{0}}), Tensor::from_rows({{0}})};
  const double v = star_loss(half, {0}, {{1, half}}, {{1, z}}, 1.0);
  EXPECT_NEAR(v, std::log(0.5) + (std::log(0.5) - 0), 1e-15);
  EXPECT_NEAR(star_loss(half, {1}, {{1, half}}, {{1, z}}, 0.0), std::log(0.5), 1e-15);
  EXPECT_THROW(star_loss(half, {0}, {{1, half}}, {{1, z}}, -1.0), ValidationError);
}

TEST(StarLoss, MatchesScalarOracle) {
  Rng rng = make_rng(17, "star-loss");
  std::uniform_real_distribution<double> u(-1, 1);
  const std::size_t n = 4, d = 2;
  auto rand_t = [&](std::size_t r, std::size_t c) {
    Tensor t = Tensor::matrix(r, c);
    for (double& v : t.data()) v = u(rng);
    return t;
  };
  auto rand_p = [&](std::size_t r) {
    Tensor t = Tensor::matrix(r, 3);
    for (std::size_t i = 0; i < r; ++i) {
      const auto p = softmax({u(rng), u(rng), u(rng)});
      for (int k = 0; k < 3; ++k) t(i, k) = p[k];
    }
    return t;
  };
  const Tensor dec = rand_p(n);
  std::map<NodeId, Tensor> aux{{1, rand_p(n)}, {2, rand_p(n)}};
  std::map<NodeId, LatentSample> lat;
  for (NodeId j : {1, 2}) lat[j] = {rand_t(n, d), rand_t(n, d), rand_t(n, d), rand_t(n, d)};
  const std::vector<int> y{0, 2, 1, 2};
  const double s = 0.7;
  double want = 0;
  for (std::size_t i = 0; i < n; ++i) {
    want += std::log(dec(i, y[i]));
    for (NodeId j : {1, 2}) {
      const auto& L = lat[j];
      double ratio = 0;
      for (std::size_t k = 0; k < d; ++k) {
        const double var = std::exp(L.logvar(i, k)), du = L.u(i, k) - L.mu(i, k);
        ratio += -0.5 * L.logvar(i, k) - 0.5 * du * du / var + 0.5 * L.u(i, k) * L.u(i, k);
      }
      want += s * (std::log(aux[j](i, y[i])) - ratio);
    }
  }
  want /= n;
  EXPECT_NEAR(star_loss(dec, y, aux, lat, s), want, 1e-12);
}

TEST(HopLoss, Examples) {
  const DagNetwork dag = make_five_node();
  const Tensor p = Tensor::from_rows({{0.25, 0.75}, {0.5, 0.5}});
  LatentSample z{Tensor::matrix(2, 1), Tensor::matrix(2, 1), Tensor::matrix(2, 1), Tensor::matrix(2, 1)};
  const std::map<NodeId, LatentSample> lat{{1, z}, {2, z}, {3, z}};
  const double ll = 0.5 * (std::log(0.75) + std::log(0.5));
  EXPECT_NEAR(hop_loss_5node(dag, p, {1, 0}, lat, 0.0), ll, 1e-15);
  EXPECT_NEAR(hop_loss_5node(dag, p, {1, 0}, lat, 3.0), ll, 1e-15);
  EXPECT_THROW(hop_loss_5node(make_star(3), p, {1, 0}, lat, 1.0), ValidationError);
}

TEST(HopLoss, MatchesScalarOracle) {
  const DagNetwork dag = make_five_node();
  const Tensor p = Tensor::from_rows({{0.2, 0.8}, {0.6, 0.4}});
  std::map<NodeId, LatentSample> lat;
  for (NodeId j : {1, 2, 3}) {
    const double a = 0.1 * j;
    lat[j] = {Tensor::from_rows({{a}, {-a}}), Tensor::from_rows({{a / 2}, {0.3}}), Tensor::matrix(2, 1),
              Tensor::from_rows({{a + 0.2}, {1 - a}})};
  }
  auto ratio = [&](NodeId j, std::size_t i) {
    const auto& L = lat[j];
    const double du = L.u(i, 0) - L.mu(i, 0);
    return -0.5 * L.logvar(i, 0) - 0.5 * du * du / std::exp(L.logvar(i, 0)) + 0.5 * L.u(i, 0) * L.u(i, 0);
  };
  const double s = 0.4;
  double want = 0;
  const std::vector<int> y{1, 0};
  for (std::size_t i = 0; i < 2; ++i) want += std::log(p(i, y[i])) - s * ratio(1, i) - 2 * s * (ratio(2, i) + ratio(3, i));
  EXPECT_NEAR(hop_loss_5node(dag, p, y, lat, s), want / 2, 1e-12);
}

TEST(Backward, SplitSizesFollowSenderWidths) {
  const DagNetwork dag = make_five_node();
  std::map<NodeId, Architecture> archs;
  archs[1] = {{{2, Activation::linear}}, {}, {}};
  archs[2] = {{{3, Activation::linear}}, {}, {}};
  archs[3] = {{{2, Activation::linear}}, {}, {}};
  archs[4] = {{{2, Activation::relu}}, {}, {}};
  archs[5] = {{{2, Activation::softmax}}, {}, {}};
  InlModel m = build_model(dag, archs, {{1, 2}, {2, 2}, {3, 2}}, 2, 1, false);
  EXPECT_EQ(m.node(4).net.in_dim(), 5u);
  const auto b = verify::random_batch(m, 2, 1);
  const auto st = forward_pass(m, b.views, zero_noise(m, 2));
  const auto bs = backward_pass(m, st, b.labels, {});
  for (const auto& msg : bs.messages) {
    if (msg.to == 4) EXPECT_EQ(msg.payload.cols(), msg.from == 2 ? 3u : 2u);
  }
}

TEST(Backward, StarGradientsMatchMonolith) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    InlModel m = small_star(seed, true);
    const auto b = verify::random_batch(m, 4, seed);
    const auto noise = zero_noise(m, 4);
    const auto w = loss_weights(LossKind::star, m.dag(), 0.0);
    const auto oracle = verify::monolithic_gradients(m, b.views, b.labels, noise, w);
    const auto st = forward_pass(m, b.views, noise);
    const auto bs = backward_pass(m, st, b.labels, w);
    EXPECT_LE(verify::max_rel_error(bs.grads, oracle.grads), 1e-12);
  }
}

TEST(Backward, RelayGetsExactSubVector) {
  InlModel m = verify::random_five_node_model(21);
  const auto b = verify::random_batch(m, 3, 21);
  const auto st = forward_pass(m, b.views, zero_noise(m, 3));
  const auto bs = backward_pass(m, st, b.labels, loss_weights(LossKind::five_node, m.dag(), 0.5));
  const auto widths = std::vector<std::size_t>{m.node(1).output_width(), m.node(4).output_width()};
  const auto parts = split_cols(bs.decision_delta_in, widths);
  EXPECT_EQ(bs.output_grads.at(4), parts[1]);
}

TEST(Backward, DecisionNodeNeedsOnlyItsInputs) {
  InlModel m = small_star(3, false);
  const auto b = verify::random_batch(m, 4, 3);
  const auto st = forward_pass(m, b.views, zero_noise(m, 4));
  const auto bs = backward_pass(m, st, b.labels, {});
  FeedForwardNet local = m.node(3).net;
  const Tensor& u1 = st.outputs.at(1);
  const Tensor& u2 = st.outputs.at(2);
  const Tensor probs = local.forward(concat_cols({&u1, &u2}));
  const auto r = local.backward_from_delta(decision_output_grad(probs, b.labels));
  EXPECT_EQ(verify::max_rel_error(r.grads, bs.grads.at(3)), 0.0);
}

TEST(Backward, StaleCacheRejected) {
  InlModel m = small_star(3, false);
  const auto b = verify::random_batch(m, 2, 3);
  const auto st = forward_pass(m, b.views, zero_noise(m, 2));
  m.clear_caches();
  EXPECT_THROW(backward_pass(m, st, b.labels, {}), ProtocolError);
}

TEST(Backward, BitsSymmetricPerEdge) {
  InlModel m = verify::random_five_node_model(5);
  const auto b = verify::random_batch(m, 7, 5);
  const auto st = forward_pass(m, b.views, zero_noise(m, 7));
  const auto bs = backward_pass(m, st, b.labels, {});
  ASSERT_EQ(st.messages.size(), bs.messages.size());
  for (const auto& f : st.messages) {
    const auto it = std::find_if(bs.messages.begin(), bs.messages.end(), [&](const Message& x) { return x.from == f.from && x.to == f.to; });
    ASSERT_NE(it, bs.messages.end());
    EXPECT_EQ(it->bits, f.bits);
    EXPECT_EQ(f.bits, message_bits(m.node(f.from).output_width(), 7, 32));
  }
}

namespace {

SyntheticData tiny_data(std::uint64_t seed) {
  SyntheticSpec s;
  s.num_views = 2;
  s.noise_stds = {0.3, 1.0};
  s.feature_dim = 4;
  s.train_size = 128;
  s.test_size = 64;
  s.seed = seed;
  return gen_dataset(s);
}

}  // namespace

TEST(Train, EtaZeroKeepsWeights) {
  const auto data = tiny_data(2);
  InlModel m = build_model(make_star(2), default_architectures(make_star(2), 4, 8, 2), {{1, 4}, {2, 4}}, 4, 2, true);
  const InlModel init = m;
  TrainConfig cfg;
  cfg.eta = 0;
  cfg.epochs = 2;
  cfg.s = 0.1;
  train(m, data.train, nullptr, cfg, LossKind::star);
  for (const auto& [id, nm] : m.nodes()) EXPECT_EQ(nm.net.flat_params(), init.node(id).net.flat_params());
}

TEST(Train, DeterministicMetrics) {
  const auto data = tiny_data(3);
  const InlModel init = build_model(make_star(2), default_architectures(make_star(2), 4, 8, 2), {{1, 4}, {2, 4}}, 4, 3, true);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.s = 0.01;
  InlModel a = init, b = init;
  const auto ra = train(a, data.train, &data.test, cfg, LossKind::star);
  const auto rb = train(b, data.train, &data.test, cfg, LossKind::star);
  EXPECT_EQ(io::metrics_csv(ra.rows), io::metrics_csv(rb.rows));
  for (std::size_t i = 1; i < ra.rows.size(); ++i) EXPECT_GE(ra.rows[i].cumulative_bits, ra.rows[i - 1].cumulative_bits);
}

TEST(Train, LossImprovesOnDefaultTask) {
  // Median train loss over the last 10% of epochs beats the first 10%.
  SyntheticSpec spec;
  const auto data = gen_dataset(spec);
  const DagNetwork dag = make_star(5);
  std::map<NodeId, std::size_t> dims;
  for (NodeId j = 1; j <= 5; ++j) dims[j] = spec.feature_dim;
  InlModel m = build_model(dag, default_architectures(dag, 4), dims, 4, 1, true);
  TrainConfig cfg;
  cfg.s = 1e-3;
  cfg.epochs = 20;
  const auto r = train(m, data.train, nullptr, cfg, LossKind::star);
  std::vector<double> first{r.rows[0].loss, r.rows[1].loss}, last{r.rows[18].loss, r.rows[19].loss};
  EXPECT_LT(std::max(last[0], last[1]), std::min(first[0], first[1]));
}

TEST(Infer, SumsToOneAndSeparable) {
  const auto data = tiny_data(4);
  InlModel m = build_model(make_star(2), default_architectures(make_star(2), 4, 8, 2), {{1, 4}, {2, 4}}, 4, 4, true);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.s = 1e-3;
  cfg.batch_size = 16;
  train(m, data.train, nullptr, cfg, LossKind::star);
  const Tensor p = infer(m, data.test.views);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0;
    for (double v : p.row(i)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_GE(evaluate(m, data.test).accuracy, 0.9);
}

TEST(Relevance, Examples) {
  const std::vector<double> prior{0.5, 0.5};
  EXPECT_NEAR(relevance(Tensor::from_rows({{1, 0}, {0, 1}}), {0, 1}, prior), std::log(2.0), 1e-15);
  EXPECT_NEAR(relevance(Tensor::from_rows({{0.5, 0.5}, {0.5, 0.5}}), {0, 1}, prior), 0.0, 1e-15);
  // Bayes posterior on an exactly balanced sample equals I(X;Y), in nats.
  std::vector<int> labels;
  Tensor preds = Tensor::matrix(10, 2);
  for (int i = 0; i < 10; ++i) {
    const int x = i < 5 ? 0 : 1;
    const int y = (i % 5 == 0) ? 1 - x : x;
    labels.push_back(y);
    preds(i, 0) = x == 0 ? 0.8 : 0.2;
    preds(i, 1) = 1 - preds(i, 0);
  }
  const info::JointPmf xy({2, 2}, {0.4, 0.1, 0.1, 0.4});
  EXPECT_NEAR(relevance(preds, labels, prior), info::mutual_information(xy, {0}, {1}) * std::log(2.0), 1e-12);
}

TEST(Checkpoint, RoundTrip) {
  const InlModel m = small_star(6, true);
  const auto dir = std::filesystem::temp_directory_path() / "inl-ckpt-test";
  std::filesystem::remove_all(dir);
  io::save_checkpoint(m, dir);
  const InlModel back = io::load_checkpoint(dir);
  for (const auto& [id, nm] : m.nodes()) EXPECT_EQ(back.node(id).net.flat_params(), nm.net.flat_params());
  for (const auto& [id, net] : m.aux()) EXPECT_EQ(back.aux().at(id).flat_params(), net.flat_params());
  std::filesystem::remove_all(dir);
}

TEST(Capacity, AdvisoryWarning) {
  const DagNetwork dag = make_star(1, 10.0);
  const InlModel m = build_model(dag, default_architectures(dag, 2, 4, 2), {{1, 3}}, 2, 1, false);
  EXPECT_EQ(capacity_warnings(m, 32).size(), 1u);
  EXPECT_TRUE(capacity_warnings(m, 4).empty());
}
