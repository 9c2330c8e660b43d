#include <gtest/gtest.h>

#include <cmath>

#include "inl/errors.hpp"
#include "inl/info.hpp"
#include "inl/verify/oracles.hpp"
#include "inl/verify/suites.hpp"

using namespace inl;
using namespace inl::info;

namespace {

double h2(double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

Problem toy_problem(const std::vector<Channel>& channels) { return {verify::prop1_toy_pmf(), channels}; }

std::vector<Channel> identity3() { return {Channel::identity(2), Channel::identity(2), Channel::identity(2)}; }
std::vector<Channel> constant3() {
  return {Channel::constant(2, {0.3, 0.7}), Channel::constant(2, {0.5, 0.5}), Channel::constant(2, {1, 0})};
}

// I(A;B) from an explicit 2-D table.
double mi_table(const std::vector<std::vector<double>>& p) {
  std::vector<double> pa(p.size(), 0), pb(p[0].size(), 0);
  for (std::size_t a = 0; a < p.size(); ++a)
    for (std::size_t b = 0; b < p[a].size(); ++b) {
      pa[a] += p[a][b];
      pb[b] += p[a][b];
    }
  double i = 0;
  for (std::size_t a = 0; a < p.size(); ++a)
    for (std::size_t b = 0; b < p[a].size(); ++b)
      if (p[a][b] > 0) i += p[a][b] * std::log2(p[a][b] / (pa[a] * pb[b]));
  return i;
}

}  // namespace

TEST(Entropy, Examples) {
  const JointPmf indep({2, 2}, {0.25, 0.25, 0.25, 0.25});
  EXPECT_NEAR(mutual_information(indep, {0}, {1}), 0.0, 1e-15);
  const JointPmf copy({2, 2}, {0.5, 0, 0, 0.5});
  EXPECT_NEAR(mutual_information(copy, {0}, {1}), 1.0, 1e-15);
  const JointPmf bsc({2, 2}, {0.445, 0.055, 0.055, 0.445});
  EXPECT_NEAR(mutual_information(bsc, {0}, {1}), 1 - h2(0.11), 1e-12);
  EXPECT_NEAR(1 - h2(0.11), 0.5001, 5e-5);
  EXPECT_THROW(mutual_information(copy, {0}, {0}), ValidationError);
}

TEST(Entropy, ZeroLogZero) {
  const JointPmf p({3}, {1, 0, 0});
  EXPECT_EQ(entropy(p, {0}), 0.0);
}

TEST(Entropy, IdentitiesOnRandomPmfs) {
  const auto r = verify::check_entropy_identities(200, 3);
  EXPECT_TRUE(r.passed()) << verify::report_text({r});
}

TEST(Limits, RefuseLargeProblems) {
  const JointPmf five({5, 2}, std::vector<double>(10, 0.1));
  EXPECT_THROW(validate_problem(Problem{five, {Channel::identity(5)}}), ValidationError);
  const JointPmf four({2, 2, 2, 2, 2}, std::vector<double>(32, 1.0 / 32));
  std::vector<Channel> ch(4, Channel::identity(2));
  EXPECT_THROW(validate_problem(Problem{four, ch}), ValidationError);
}

TEST(Theorem1, ConstantChannelsZeroRates) {
  const Problem p = toy_problem(constant3());
  const auto v = theorem1_feasible(p, make_five_node(0, 0, 0, 0), {{0, 0, 0}});
  EXPECT_TRUE(v.feasible);
}

TEST(Theorem1, BergerTungSideInfeasible) {
  const JointPmf xy({3, 2}, {0.2, 0.1, 0.05, 0.25, 0.3, 0.1});
  const Problem p{xy, {Channel::identity(3)}};
  const double hx = entropy(xy, {0});
  EXPECT_TRUE(theorem1_feasible(p, make_star(1, 1e9), {{hx}}).feasible);
  const auto v = theorem1_feasible(p, make_star(1, 1e9), {{hx - 1e-6}});
  EXPECT_FALSE(v.feasible);
  ASSERT_FALSE(v.violations.empty());
  EXPECT_EQ(v.violations[0].constraint, "berger-tung");
}

TEST(Theorem1, ZeroCapacityCut) {
  const Problem p = toy_problem(identity3());
  const auto v = theorem1_feasible(p, make_five_node(0, 1e9, 1e9, 1e9), {{3, 3, 3}});
  EXPECT_FALSE(v.feasible);
  bool cut = false;
  for (const auto& x : v.violations) cut = cut || x.constraint == "cut-set";
  EXPECT_TRUE(cut);
}

TEST(Theorem1, MonotoneInCapacity) {
  const auto r = verify::check_theorem1_monotone(40, 5);
  EXPECT_TRUE(r.passed()) << verify::report_text({r});
}

TEST(Relevance, IdentityAndConstant) {
  const Problem id = toy_problem(identity3());
  EXPECT_NEAR(achievable_relevance(id), mutual_information(id.data, {0, 1, 2}, {3}), 1e-12);
  EXPECT_NEAR(achievable_relevance(toy_problem(constant3())), 0.0, 1e-12);
}

TEST(Relevance, NoisyChannelsMatchExplicitSum) {
  const std::vector<Channel> ch{Channel(2, 2, {0.9, 0.1, 0.2, 0.8}), Channel(2, 3, {0.5, 0.3, 0.2, 0.1, 0.1, 0.8}),
                                Channel(2, 2, {0.6, 0.4, 0.4, 0.6})};
  const Problem p = toy_problem(ch);
  const JointPmf& d = p.data;
  // P(u1 u2 u3, y) accumulated by explicit loops; u index = (u1*3+u2)*2+u3.
  std::vector<std::vector<double>> uy(12, std::vector<double>(2, 0.0));
  for (int x1 = 0; x1 < 2; ++x1)
    for (int x2 = 0; x2 < 2; ++x2)
      for (int x3 = 0; x3 < 2; ++x3)
        for (int y = 0; y < 2; ++y) {
          const double pxy = d[static_cast<std::size_t>(((x1 * 2 + x2) * 2 + x3) * 2 + y)];
          for (int u1 = 0; u1 < 2; ++u1)
            for (int u2 = 0; u2 < 3; ++u2)
              for (int u3 = 0; u3 < 2; ++u3)
                uy[static_cast<std::size_t>((u1 * 3 + u2) * 2 + u3)][static_cast<std::size_t>(y)] +=
                    pxy * ch[0](x1, u1) * ch[1](x2, u2) * ch[2](x3, u3);
        }
  EXPECT_NEAR(achievable_relevance(p), mi_table(uy), 1e-12);
}

TEST(FiveNode, Examples) {
  const Problem p = toy_problem({Channel(2, 2, {0.9, 0.1, 0.2, 0.8}), Channel(2, 2, {0.7, 0.3, 0.1, 0.9}),
                                 Channel(2, 2, {0.6, 0.4, 0.4, 0.6})});
  EXPECT_TRUE(five_node_region_check(p, {1e9, 1e9, 1e9, 1e9}).feasible);
  const auto t = five_node_terms(p);
  const auto v = five_node_region_check(p, {1e9, 1e9, 1e9, t.a23 * 0.99});
  EXPECT_FALSE(v.feasible);
}

TEST(FiveNode, AgreesWithGridOracle) {
  const auto r = verify::check_five_node_grid(30, 7);
  EXPECT_TRUE(r.passed()) << verify::report_text({r});
}

TEST(SumRegion, ConstantChannels) {
  const auto v = sum_region_check(toy_problem(constant3()), 0.0);
  EXPECT_TRUE(v.feasible);
  EXPECT_NEAR(v.threshold, 0.0, 1e-12);
}

TEST(SumRegion, IdentityThreshold) {
  const Problem p = toy_problem(identity3());
  const double want = entropy(p.data, {0, 1, 2}) + conditional_entropy(p.data, {1, 2}, {0});
  const auto v = sum_region_check(p, want + 1e-9);
  EXPECT_NEAR(v.threshold, want, 1e-12);
  EXPECT_TRUE(v.feasible);
  EXPECT_FALSE(sum_region_check(p, want - 1e-6).feasible);
}

TEST(SumRegion, FmeEquivalence) {
  const auto r = verify::check_fme_equivalence(20, 9);
  EXPECT_TRUE(r.passed()) << verify::report_text({r});
}

TEST(Lagrangian, ConstantChannelsGiveMinusHy) {
  const Problem p = toy_problem(constant3());
  const double hy = entropy(p.data, {3});
  for (double s : {0.0, 0.5, 4.0}) EXPECT_NEAR(lagrangian_Ls(p, s), -hy, 1e-12);
  EXPECT_THROW(lagrangian_Ls(p, -1), ValidationError);
}

TEST(Lagrangian, MonotoneInS) {
  const auto r = verify::check_lagrangian_monotone(100, 2);
  EXPECT_TRUE(r.passed()) << verify::report_text({r});
}

TEST(Prop1, BoundaryPoints) {
  const JointPmf d = verify::prop1_toy_pmf();
  const std::vector<double> svals{0.0, 0.1, 1.0, 10.0};
  const auto pts = prop1_points(d, svals);
  ASSERT_EQ(pts.size(), 4u);
  // s = 0: the optimum is -H(Y | X1 X2 X3), reached by identity channels.
  EXPECT_NEAR(pts[0].l_s, -conditional_entropy(d, {3}, {0, 1, 2}), 1e-12);
  // s = 10: every channel is within one grid step of constant.
  for (const auto& c : pts[3].channels) {
    for (int u = 0; u < c.outputs(); ++u) EXPECT_LE(std::abs(c(0, u) - c(1, u)), 0.05 + 1e-12);
  }
  const double hy = entropy(d, {3});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Problem p{d, pts[i].channels};
    EXPECT_NEAR(pts[i].delta, hy + lagrangian_Ls(p, svals[i]) + svals[i] * pts[i].c_s, 1e-9);
    EXPECT_NEAR(pts[i].delta, achievable_relevance(p), 1e-9);
    if (i > 0) EXPECT_LE(pts[i].delta, pts[i - 1].delta + 1e-12);
  }
}

TEST(Lemma1, BijectiveCombinerResidue) {
  const Problem p = verify::random_problem(3, 31, 2);
  ConditionalTable comb{{2, 2}, 4, std::vector<double>(16, 0.0)};
  for (int i = 0; i < 4; ++i) comb.p[static_cast<std::size_t>(i * 4 + i)] = 1.0;
  const JointPmf aug = compose_with_combiner(p, comb);
  EXPECT_NEAR(conditional_entropy(aug, {3}, {4, 7}), conditional_entropy(aug, {3}, {4, 5, 6}), 1e-12);
  const double s = 0.8;
  const auto rep = lower_bound_check(p, comb, s);
  EXPECT_TRUE(rep.holds);
  // Residue computed on the plain composed joint (X1 X2 X3 Y U1 U2 U3).
  const JointPmf j = compose(p);
  const double residue = -s * (mutual_information(j, {0, 1, 2}, {4, 5, 6}) + mutual_information(j, {1, 2}, {5, 6}, {4})) +
                         s * mutual_information(j, {0}, {4}) +
                         2 * s * (mutual_information(j, {1}, {5}) + mutual_information(j, {2}, {6})) -
                         2 * s * (mutual_information(j, {5}, {4}) + mutual_information(j, {6}, {4, 5}));
  EXPECT_NEAR(rep.l_s - rep.l_s_low, residue, 1e-12);
  EXPECT_GE(residue, -1e-12);
}

TEST(Lemma1, SZeroIsDataProcessing) {
  const Problem p = verify::random_problem(3, 12);
  Rng rng = make_rng(12, "comb");
  const auto comb = verify::random_table({p.channels[1].outputs(), p.channels[2].outputs()}, 3, rng);
  const auto rep = lower_bound_check(p, comb, 0.0);
  const JointPmf aug = compose_with_combiner(p, comb);
  EXPECT_NEAR(rep.l_s, -conditional_entropy(aug, {3}, {4, 5, 6}), 1e-12);
  EXPECT_NEAR(rep.l_s_low, -conditional_entropy(aug, {3}, {4, 7}), 1e-12);
  EXPECT_TRUE(rep.holds);
}

TEST(Lemma1, Sweep) {
  const auto r = verify::check_lemma1(200, 4);
  EXPECT_TRUE(r.passed()) << verify::report_text({r});
}

TEST(Lemma2, OptimalAndPerturbed) {
  const auto a = verify::check_lemma2_optimal(100, 6);
  EXPECT_TRUE(a.passed()) << verify::report_text({a});
  const auto b = verify::check_lemma2_perturbed(10, 20, 6);
  EXPECT_TRUE(b.passed()) << verify::report_text({b});
}

TEST(Lemma2, SZeroIsCrossEntropyBound) {
  const Problem p = verify::random_problem(3, 44);
  Rng rng = make_rng(44, "comb");
  const auto comb = verify::random_table({p.channels[1].outputs(), p.channels[2].outputs()}, 2, rng);
  auto q = optimal_variational_set(p, comb);
  q.y_given_u1u4 = verify::perturb(q.y_given_u1u4, 0.3, rng);
  const auto rep = variational_bound_check(p, comb, q, 0.0);
  const JointPmf aug = compose_with_combiner(p, comb);
  const int a4 = aug.alphabet()[7];
  double ce = 0;
  for (std::size_t i = 0; i < aug.size(); ++i) {
    const auto v = aug.decode(i);
    if (aug[i] > 0) ce += aug[i] * std::log2(q.y_given_u1u4.at(static_cast<std::size_t>(v[4] * a4 + v[7]), v[3]));
  }
  EXPECT_NEAR(rep.l_vlow, ce, 1e-12);
  EXPECT_LE(rep.l_vlow, -conditional_entropy(aug, {3}, {4, 7}) + 1e-12);
}

TEST(Lemma2, InvalidQRejected) {
  const Problem p = verify::random_problem(3, 45);
  Rng rng = make_rng(45, "comb");
  const auto comb = verify::random_table({p.channels[1].outputs(), p.channels[2].outputs()}, 2, rng);
  auto q = optimal_variational_set(p, comb);
  q.u1.p[0] += 0.5;
  EXPECT_THROW(variational_bound_check(p, comb, q, 1.0), ValidationError);
}
