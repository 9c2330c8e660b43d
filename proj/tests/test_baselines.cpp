#include <gtest/gtest.h>

#include <cmath>

#include "inl/baselines.hpp"
#include "inl/errors.hpp"
#include "inl/experiment.hpp"
#include "inl/verify/oracles.hpp"
#include "inl/verify/suites.hpp"

using namespace inl;

namespace {

BandwidthParams vgg(double q) { return {q, 25088, 32, 500, 138344128, 0.11}; }
BandwidthParams resnet(double q) { return {q, 25088, 32, 500, 25636712, 0.88}; }

}  // namespace

TEST(Formulas, Vgg16Row) {
  EXPECT_NEAR(inl_bits(vgg(50000)) / 1e9, 0.1606, 5e-5);
  EXPECT_NEAR(fl_bits(vgg(50000)) / 1e9, 4427, 0.5);
  EXPECT_NEAR(sl_bits(vgg(50000)) / 1e9, 323.8, 0.05);
}

TEST(Formulas, ResNet50Row) {
  EXPECT_NEAR(fl_bits(resnet(50000)) / 1e9, 820, 0.5);
  EXPECT_NEAR(sl_bits(resnet(50000)) / 1e9, 441, 0.5);
  EXPECT_NEAR(inl_bits(resnet(50000)) / 1e9, 0.16, 0.005);
}

TEST(Formulas, ZeroDataPoints) {
  const auto b = vgg(0);
  EXPECT_EQ(inl_bits(b), 0.0);
  EXPECT_DOUBLE_EQ(sl_bits(b), 0.11 * 138344128.0 * 500 * 32);
  EXPECT_EQ(fl_bits(b), fl_bits(vgg(50000)));
}

TEST(Formulas, ValidationAndProperties) {
  BandwidthParams bad = vgg(1);
  bad.eta_frac = 1.5;
  EXPECT_THROW(validate(bad), ValidationError);
  const auto r = verify::check_bandwidth_formulas(2);
  EXPECT_TRUE(r.passed()) << verify::report_text({r});
}

TEST(Table, AllTwelveCells) {
  const auto r = verify::check_bandwidth_table();
  EXPECT_EQ(r.instances, 12u);
  EXPECT_TRUE(r.passed()) << verify::report_text({r});
}

TEST(Table, CsvAndText) {
  const auto rows = reference_bandwidth_table();
  const std::string csv = bandwidth_table_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,q,p,s_bits,J,N,eta_frac,fl_gbits,sl_gbits,inl_gbits");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_NE(bandwidth_table_text(rows).find("ResNet50 q=500000"), std::string::npos);
}

TEST(FlRound, AggregationExamples) {
  const auto r = verify::check_fl_aggregation(3);
  EXPECT_TRUE(r.passed()) << verify::report_text({r});
}

TEST(FlRound, CloseToCentralisedTraining) {
  SyntheticSpec spec;
  spec.num_views = 2;
  spec.noise_stds = {1.0, 2.0};
  spec.feature_dim = 6;
  spec.train_size = 400;
  spec.test_size = 400;
  spec.seed = 8;
  const auto data = gen_dataset(spec);
  const DagNetwork dag = make_star(2);
  const InlModel init = build_model(dag, default_architectures(dag, 4, 16, 3), {{1, 6}, {2, 6}}, 4, 8, false);
  TrainConfig cfg;
  cfg.deterministic_latent = true;
  cfg.batch_size = 20;
  cfg.epochs = 100;
  cfg.eta = 0.05;
  InlModel central = init;
  train(central, data.train, nullptr, cfg, LossKind::star);
  InlModel fl = init;
  train_fl(init, data.train, nullptr, cfg, 4, &fl);
  EXPECT_LE(std::abs(evaluate(central, data.test).accuracy - evaluate(fl, data.test).accuracy), 0.05);
}

TEST(FlRound, BitsPerRound) {
  const InlModel m = verify::random_star_model(2, 4, true, false);
  const auto b = verify::random_batch(m, 8, 4);
  Dataset d{b.views, b.labels, m.num_classes()};
  const auto shards = shard_dataset(d, 2);
  std::vector<InlModel> reps(2, m);
  const auto r = fl_round(reps, shards, std::nullopt, 0.1, 4, 4, 1);
  EXPECT_EQ(r.bits, 2ULL * m.num_params() * 2 * 32);
  for (const auto& rep : reps) {
    for (const auto& [id, nm] : rep.nodes()) EXPECT_EQ(nm.net.flat_params(), r.aggregate.node(id).net.flat_params());
  }
}

TEST(Sl, SingleClientEqualsInl) {
  const auto r = verify::check_sl_matches_inl(5);
  EXPECT_TRUE(r.passed()) << verify::report_text({r});
}

TEST(Sl, HandoffPreservesWeights) {
  const InlModel m = verify::random_star_model(2, 9, true, false);
  const SlState st = split_model(m);
  const InlModel back = join_model(m.dag(), m.input_dims(), st);
  for (const auto& [id, nm] : m.nodes()) EXPECT_EQ(back.node(id).net.flat_params(), nm.net.flat_params());
}

TEST(Sl, EpochCountsHandoffsAndBits) {
  const InlModel m = verify::random_star_model(2, 10, true, false);
  const auto b = verify::random_batch(m, 12, 10);
  Dataset d{b.views, b.labels, m.num_classes()};
  const auto shards = shard_dataset(d, 3);
  SlState st = split_model(m);
  const auto r = sl_epoch(st, m.dag(), m.input_dims(), shards, 0.1, 4, 10, 1);
  EXPECT_EQ(r.handoffs, 3u);
  std::size_t cut = 0;
  for (NodeId p : m.dag().in_neighbors(m.dag().decision_node())) cut += m.node(p).output_width();
  EXPECT_EQ(r.bits, 2ULL * cut * 12 * 32 + 3ULL * client_param_count(st) * 32);
}

TEST(Shard, ContiguousAndComplete) {
  const InlModel m = verify::random_star_model(1, 2, true, false);
  const auto b = verify::random_batch(m, 10, 2);
  Dataset d{b.views, b.labels, m.num_classes()};
  const auto shards = shard_dataset(d, 3);
  std::size_t total = 0;
  for (const auto& s : shards) total += s.size();
  EXPECT_EQ(total, 10u);
  EXPECT_EQ(shards[0].labels.front(), d.labels.front());
}
