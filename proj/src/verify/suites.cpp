#include "inl/verify/suites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "inl/errors.hpp"
#include "inl/experiment.hpp"
#include "inl/verify/oracles.hpp"

namespace inl::verify {

namespace {

std::uint64_t instance_seed(std::uint64_t root, const std::string& check, std::size_t k) {
  return derive_seed(root, stream_id(check, k));
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void fail(CheckResult& r, std::uint64_t seed, const std::string& what) {
  r.failures.push_back("seed=" + std::to_string(seed) + ": " + what);
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

InlModel model_for(int variant, std::uint64_t seed, bool heads = true) {
  return variant == 3 ? random_five_node_model(seed, heads) : random_star_model(variant + 1, seed, heads);
}

}  // namespace

CheckResult check_split_equivalence(const std::string& topology, int num_sources, std::size_t count,
                                    std::uint64_t seed) {
  CheckResult r{"gradients", "split-equivalence-" + topology + (topology == "star" ? "-J" + std::to_string(num_sources) : ""),
                0, 0.0, 1e-12, {}};
  for (std::size_t k = 0; k < count; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    InlModel m = topology == "star" ? random_star_model(num_sources, s) : random_five_node_model(s);
    Rng rng = make_rng(s, "batch-size");
    const Batch b = random_batch(m, 1 + rng() % 4, s);
    const NoiseMap noise = zero_noise(m, b.labels.size());
    const LossWeights w = loss_weights(infer_loss_kind(m.dag()), m.dag(), 0.0);
    const OracleResult want = monolithic_gradients(m, b.views, b.labels, noise, w);
    const ForwardState fs = forward_pass(m, b.views, noise);
    const BackwardState bs = backward_pass(m, fs, b.labels, w);
    double err = max_rel_error(bs.grads, want.grads);
    if (!want.aux_grads.empty()) err = std::max(err, max_rel_error(bs.aux_grads, want.aux_grads));
    r.max_error = std::max(r.max_error, err);
    ++r.instances;
    if (!(err <= r.tolerance)) fail(r, s, "relative gradient error " + fmt("%.3e", err));
  }
  return r;
}

CheckResult check_split_equivalence_stochastic(std::size_t count, std::uint64_t seed) {
  CheckResult r{"gradients", "split-equivalence-stochastic", 0, 0.0, 1e-10, {}};
  for (std::size_t k = 0; k < count; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    InlModel m = model_for(static_cast<int>(k % 4), s);
    Rng rng = make_rng(s, "stochastic");
    const Batch b = random_batch(m, 1 + rng() % 4, s);
    const NoiseMap noise = sample_noise(m, b.labels.size(), rng);
    const LossWeights w = loss_weights(infer_loss_kind(m.dag()), m.dag(), uniform(rng, 0.01, 2.0));
    const OracleResult want = monolithic_gradients(m, b.views, b.labels, noise, w);
    const ForwardState fs = forward_pass(m, b.views, noise);
    const BackwardState bs = backward_pass(m, fs, b.labels, w);
    double err = max_rel_error(bs.grads, want.grads);
    if (!want.aux_grads.empty()) err = std::max(err, max_rel_error(bs.aux_grads, want.aux_grads));
    const double loss_err = std::abs(-objective(fs, b.labels, w).objective - want.loss) / std::max(1.0, std::abs(want.loss));
    err = std::max(err, loss_err);
    r.max_error = std::max(r.max_error, err);
    ++r.instances;
    if (!(err <= r.tolerance)) fail(r, s, "relative error " + fmt("%.3e", err));
  }
  return r;
}

CheckResult check_fd_nets(std::size_t count, std::uint64_t seed) {
  CheckResult r{"gradients", "finite-differences-nets", 0, 0.0, 1e-4, {}};
  for (std::size_t k = 0; k < count; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    Rng rng = make_rng(s, "net");
    const std::size_t in = 1 + rng() % 4;
    const FeedForwardNet net = random_net(rng, in);
    Tensor x = Tensor::matrix(1 + rng() % 3, in);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : x.data()) v = normal(rng);
    const double err = fd_check_net(net, x, s);
    r.max_error = std::max(r.max_error, err);
    ++r.instances;
    if (!(err <= r.tolerance)) fail(r, s, "finite-difference relative error " + fmt("%.3e", err));
  }
  return r;
}

CheckResult check_fd_objective(std::size_t count, std::uint64_t seed) {
  CheckResult r{"gradients", "finite-differences-objective", 0, 0.0, 1e-4, {}};
  for (std::size_t k = 0; k < count; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    const InlModel m = model_for(static_cast<int>(k % 4), s);
    Rng rng = make_rng(s, "objective");
    const Batch b = random_batch(m, 2, s);
    const NoiseMap noise = sample_noise(m, 2, rng);
    const LossWeights w = loss_weights(infer_loss_kind(m.dag()), m.dag(), uniform(rng, 0.01, 2.0));
    const double err = fd_check_objective(m, b, noise, w);
    r.max_error = std::max(r.max_error, err);
    ++r.instances;
    if (!(err <= r.tolerance)) fail(r, s, "finite-difference relative error " + fmt("%.3e", err));
  }
  return r;
}

CheckResult check_protocol_invariants(std::size_t count, std::uint64_t seed) {
  CheckResult r{"gradients", "protocol-invariants", 0, 0.0, 0.0, {}};
  for (std::size_t k = 0; k < count; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    const int variant = static_cast<int>(k % 4);
    InlModel m = model_for(variant, s);
    Rng rng = make_rng(s, "protocol");
    const Batch b = random_batch(m, 1 + rng() % 4, s);
    const NoiseMap noise = sample_noise(m, b.labels.size(), rng);
    // Without auxiliary terms the decision node's input error splits cleanly.
    const double sv = variant == 3 ? uniform(rng, 0.0, 2.0) : 0.0;
    const LossWeights w = loss_weights(infer_loss_kind(m.dag()), m.dag(), sv);
    InlModel par = m;
    const ForwardState fs = forward_pass(m, b.views, noise);
    const BackwardState bs = backward_pass(m, fs, b.labels, w);
    ++r.instances;

    for (const auto& f : fs.messages) {
      auto it = std::find_if(bs.messages.begin(), bs.messages.end(),
                             [&](const Message& x) { return x.from == f.from && x.to == f.to; });
      if (it == bs.messages.end() || it->bits != f.bits || it->payload.shape() != f.payload.shape()) {
        fail(r, s, "forward/backward bits differ on edge (" + std::to_string(f.from) + "," + std::to_string(f.to) + ")");
      }
    }

    const NodeId d = m.dag().decision_node();
    std::vector<const Tensor*> pieces;
    for (NodeId p : m.dag().in_neighbors(d)) {
      for (const auto& msg : bs.messages) {
        if (msg.from == p && msg.to == d) pieces.push_back(&msg.payload);
      }
    }
    if (!(concat_cols(pieces) == bs.decision_delta_in)) fail(r, s, "split sub-vectors do not reassemble delta_in");

    if (variant == 3) {
      const auto relay = std::find_if(bs.messages.begin(), bs.messages.end(),
                                      [](const Message& x) { return x.from == 4 && x.to == 5; });
      if (relay == bs.messages.end() || !(bs.output_grads.at(4) == relay->payload)) {
        fail(r, s, "relay output gradient differs from the received sub-vector");
      }
    }

    const ForwardState pfs = forward_pass(par, b.views, noise, 32, true);
    const BackwardState pbs = backward_pass(par, pfs, b.labels, w, 32, true);
    bool same = pfs.decision_probs == fs.decision_probs;
    for (const auto& [id, g] : bs.grads) {
      for (std::size_t l = 0; l < g.size(); ++l) {
        same = same && g[l].weights == pbs.grads.at(id)[l].weights && g[l].biases == pbs.grads.at(id)[l].biases;
      }
    }
    if (!same) fail(r, s, "parallel mode differs from single-threaded mode");
  }
  return r;
}

CheckResult check_kl_monte_carlo(std::uint64_t seed) {
  CheckResult r{"gradients", "gaussian-kl-monte-carlo", 0, 0.0, 0.0, {}};
  constexpr std::size_t n = 100000;
  for (std::size_t k = 0; k < 5; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    Rng rng = make_rng(s, "kl");
    const std::size_t d = k == 0 ? 1 : 1 + rng() % 3;
    std::vector<double> mu(d), lv(d);
    for (std::size_t i = 0; i < d; ++i) {
      mu[i] = k == 0 ? 1.0 : uniform(rng, -1.5, 1.5);
      lv[i] = k == 0 ? 0.0 : uniform(rng, -1.0, 1.0);
    }
    const GaussianHead head{d};
    std::normal_distribution<double> normal(0.0, 1.0);
    double sum = 0.0, sq = 0.0;
    std::vector<double> mean(d, 0.0), eps(d);
    for (std::size_t t = 0; t < n; ++t) {
      for (double& e : eps) e = normal(rng);
      const auto u = sample_latent(head, mu, lv, eps);
      const double ratio = gaussian_log_ratio(u, mu, lv);
      sum += ratio;
      sq += ratio * ratio;
      for (std::size_t i = 0; i < d; ++i) mean[i] += u[i];
    }
    const double avg = sum / n;
    const double sd = std::sqrt(std::max(0.0, sq / n - avg * avg));
    double closed = 0.0;
    for (std::size_t i = 0; i < d; ++i) closed += 0.5 * (mu[i] * mu[i] + std::exp(lv[i]) - 1.0 - lv[i]);
    const double tol = k == 0 ? 0.01 : 4.0 * sd / std::sqrt(static_cast<double>(n));
    ++r.instances;
    r.max_error = std::max(r.max_error, std::abs(avg - closed));
    if (std::abs(gaussian_kl_standard(mu, lv) - closed) > 1e-12) fail(r, s, "closed-form KL mismatch");
    if (std::abs(avg - closed) > tol) fail(r, s, "Monte-Carlo KL " + fmt("%.5f", avg) + " vs " + fmt("%.5f", closed));
    for (std::size_t i = 0; i < d; ++i) {
      const double m = mean[i] / n;
      if (std::abs(m - mu[i]) > 4.0 * std::exp(lv[i] / 2.0) / std::sqrt(static_cast<double>(n))) {
        fail(r, s, "sample mean of u off by " + fmt("%.3e", m - mu[i]));
      }
    }
  }
  return r;
}

CheckResult check_training_determinism(std::uint64_t seed) {
  CheckResult r{"gradients", "training-determinism", 0, 0.0, 0.0, {}};
  const auto s = instance_seed(seed, r.name, 0);
  SyntheticSpec spec;
  spec.num_views = 2;
  spec.noise_stds = {0.5, 1.0};
  spec.feature_dim = 4;
  spec.train_size = 64;
  spec.test_size = 16;
  spec.seed = s;
  const SyntheticData data = gen_dataset(spec);
  const DagNetwork dag = make_star(2);
  const std::map<NodeId, std::size_t> dims{{1, 4}, {2, 4}};
  const InlModel init = build_model(dag, default_architectures(dag, 4, 8, 2), dims, 4, s, true);
  TrainConfig cfg;
  cfg.s = 0.01;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = s;

  auto params = [](const InlModel& m) {
    std::vector<double> p;
    for (const auto& [id, nm] : m.nodes()) {
      const auto f = nm.net.flat_params();
      p.insert(p.end(), f.begin(), f.end());
    }
    for (const auto& [id, net] : m.aux()) {
      const auto f = net.flat_params();
      p.insert(p.end(), f.begin(), f.end());
    }
    return p;
  };
  InlModel a = init, b = init;
  const TrainResult ra = train(a, data.train, &data.test, cfg, LossKind::star);
  const TrainResult rb = train(b, data.train, &data.test, cfg, LossKind::star);
  ++r.instances;
  if (params(a) != params(b)) fail(r, s, "weights differ between identical runs");
  if (io::metrics_csv(ra.rows) != io::metrics_csv(rb.rows)) fail(r, s, "metrics differ between identical runs");

  cfg.parallel = true;
  InlModel c = init;
  train(c, data.train, &data.test, cfg, LossKind::star);
  if (params(a) != params(c)) fail(r, s, "parallel training differs from single-threaded training");

  cfg.parallel = false;
  cfg.eta = 0.0;
  InlModel z = init;
  train(z, data.train, nullptr, cfg, LossKind::star);
  if (params(z) != params(init)) fail(r, s, "eta = 0 changed the weights");
  return r;
}

CheckResult check_lemma1(std::size_t count, std::uint64_t seed) {
  CheckResult r{"bounds", "lemma1-lower-bound", 0, 0.0, 1e-10, {}};
  for (std::size_t k = 0; k < count; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    const info::Problem p = random_problem(3, s);
    Rng rng = make_rng(s, "combiner");
    const int u2 = p.channels[1].outputs(), u3 = p.channels[2].outputs();
    const double sv = k % 10 == 0 ? 0.0 : uniform(rng, 0.0, 3.0);
    info::ConditionalTable comb = random_table({u2, u3}, 2 + static_cast<int>(rng() % 3), rng);
    const bool bijective = k % 5 == 0 && u2 * u3 <= info::kMaxAlphabet;
    if (bijective) {
      comb.outputs = u2 * u3;
      comb.p.assign(static_cast<std::size_t>(u2 * u3 * u2 * u3), 0.0);
      for (int i = 0; i < u2 * u3; ++i) comb.p[static_cast<std::size_t>(i * u2 * u3 + i)] = 1.0;
    }
    const auto rep = info::lower_bound_check(p, comb, sv);
    ++r.instances;
    r.max_error = std::max(r.max_error, rep.l_s_low - rep.l_s);
    if (!rep.holds) fail(r, s, "L_s " + fmt("%.12f", rep.l_s) + " < L_low " + fmt("%.12f", rep.l_s_low));
    if (bijective) {
      const auto j = info::compose_with_combiner(p, comb);
      const double gap = info::conditional_entropy(j, {3}, {4, 7}) - info::conditional_entropy(j, {3}, {4, 5, 6});
      if (std::abs(gap) > 1e-10) fail(r, s, "bijective combiner loses information: " + fmt("%.3e", gap));
    }
  }
  return r;
}

namespace {

info::ConditionalTable ctx_table(const info::VariationalSet& q, int which) {
  switch (which) {
    case 0: return q.y_given_u1u4;
    case 1: return q.u3_given_u1u2;
    case 2: return q.u2_given_u1;
    default: return q.u1;
  }
}

}  // namespace

CheckResult check_lemma2_optimal(std::size_t count, std::uint64_t seed) {
  CheckResult r{"bounds", "lemma2-optimal-gap", 0, 0.0, 1e-9, {}};
  for (std::size_t k = 0; k < count; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    const info::Problem p = random_problem(3, s);
    Rng rng = make_rng(s, "combiner");
    const info::ConditionalTable comb =
        random_table({p.channels[1].outputs(), p.channels[2].outputs()}, 2 + static_cast<int>(rng() % 3), rng);
    const double sv = uniform(rng, 0.0, 3.0);
    const auto rep = info::variational_bound_check(p, comb, info::optimal_variational_set(p, comb), sv);
    ++r.instances;
    r.max_error = std::max(r.max_error, std::abs(rep.gap));
    if (!(std::abs(rep.gap) <= r.tolerance)) fail(r, s, "gap at the optimal Q is " + fmt("%.3e", rep.gap));
  }
  return r;
}

CheckResult check_lemma2_perturbed(std::size_t instances, std::size_t perturbations, std::uint64_t seed) {
  CheckResult r{"bounds", "lemma2-perturbed-gap", 0, 0.0, 0.0, {}};
  r.max_error = std::numeric_limits<double>::infinity();  // smallest gap seen
  for (std::size_t k = 0; k < instances; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    const info::Problem p = random_problem(3, s);
    Rng rng = make_rng(s, "combiner");
    const info::ConditionalTable comb =
        random_table({p.channels[1].outputs(), p.channels[2].outputs()}, 2 + static_cast<int>(rng() % 3), rng);
    const double sv = uniform(rng, 0.1, 3.0);
    const info::VariationalSet best = info::optimal_variational_set(p, comb);
    for (std::size_t t = 0; t < perturbations; ++t) {
      info::VariationalSet q = best;
      const double amount = uniform(rng, 0.05, 0.5);
      // Perturb one component, or all of them every fourth draw.
      const int which = t % 4 == 3 ? -1 : static_cast<int>(rng() % 4);
      if (which == -1 || which == 0) q.y_given_u1u4 = perturb(q.y_given_u1u4, amount, rng);
      if (which == -1 || which == 1) q.u3_given_u1u2 = perturb(q.u3_given_u1u2, amount, rng);
      if (which == -1 || which == 2) q.u2_given_u1 = perturb(q.u2_given_u1, amount, rng);
      if (which == -1 || which == 3) q.u1 = perturb(q.u1, amount, rng);
      const auto rep = info::variational_bound_check(p, comb, q, sv);
      ++r.instances;
      r.max_error = std::min(r.max_error, rep.gap);
      if (!(rep.gap > 0.0)) {
        fail(r, s, "perturbation " + std::to_string(t) + " gives gap " + fmt("%.3e", rep.gap));
      }
    }
  }
  (void)ctx_table;
  return r;
}

CheckResult check_entropy_identities(std::size_t count, std::uint64_t seed) {
  CheckResult r{"bounds", "entropy-identities", 0, 0.0, 1e-12, {}};
  {
    // Binary symmetric channel, crossover 0.11.
    const double e = 0.11;
    const info::JointPmf bsc({2, 2}, {0.5 * (1 - e), 0.5 * e, 0.5 * e, 0.5 * (1 - e)});
    const double h2 = -e * std::log2(e) - (1 - e) * std::log2(1 - e);
    const double err = std::abs(info::mutual_information(bsc, {0}, {1}) - (1.0 - h2));
    r.max_error = err;
    if (err > 1e-12) fail(r, 0, "BSC mutual information off by " + fmt("%.3e", err));
  }
  for (std::size_t k = 0; k < count; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    Rng rng = make_rng(s, "pmf");
    const info::JointPmf p =
        random_pmf({2 + static_cast<int>(rng() % 3), 2 + static_cast<int>(rng() % 3), 2 + static_cast<int>(rng() % 3)}, rng);
    ++r.instances;
    const double ha = info::entropy(p, {0}), hab = info::entropy(p, {0, 1}), habc = info::entropy(p, {0, 1, 2});
    const double chain = std::abs(habc - (ha + info::conditional_entropy(p, {1}, {0}) +
                                          info::conditional_entropy(p, {2}, {0, 1})));
    r.max_error = std::max(r.max_error, chain);
    if (ha < 0 || hab < ha - 1e-12 || habc < hab - 1e-12) fail(r, s, "entropy negative or not monotone");
    if (info::conditional_entropy(p, {0}, {1, 2}) > info::conditional_entropy(p, {0}, {1}) + 1e-12 ||
        info::conditional_entropy(p, {0}, {1}) > ha + 1e-12) {
      fail(r, s, "conditioning increased entropy");
    }
    if (chain > r.tolerance) fail(r, s, "chain rule off by " + fmt("%.3e", chain));
    if (info::mutual_information(p, {0}, {1}, {2}) < -1e-12) fail(r, s, "negative conditional mutual information");
  }
  return r;
}

CheckResult check_lagrangian_monotone(std::size_t count, std::uint64_t seed) {
  CheckResult r{"bounds", "lagrangian-monotone-in-s", 0, 0.0, 1e-12, {}};
  for (std::size_t k = 0; k < count; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    const info::Problem p = random_problem(3, s);
    Rng rng = make_rng(s, "s");
    const double a = uniform(rng, 0.0, 3.0), b = a + uniform(rng, 0.0, 3.0);
    const double la = info::lagrangian_Ls(p, a), lb = info::lagrangian_Ls(p, b);
    ++r.instances;
    r.max_error = std::max(r.max_error, lb - la);
    if (lb > la + r.tolerance) fail(r, s, "L_s increased with s");
  }
  return r;
}

CheckResult check_fme_equivalence(std::size_t count, std::uint64_t seed, double step) {
  CheckResult r{"regions", "fme-equivalence", 0, 0.0, 4.0 * step, {}};
  for (std::size_t k = 0; k < count; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    const info::Problem p = random_problem(3, s, 2);
    const auto rep = info::fme_equivalence_test(p, step);
    ++r.instances;
    r.max_error = std::max(r.max_error, std::abs(rep.grid_min_sum - rep.threshold));
    if (!rep.passes) fail(r, s, rep.detail);
  }
  return r;
}

CheckResult check_theorem1_monotone(std::size_t count, std::uint64_t seed) {
  CheckResult r{"regions", "theorem1-capacity-monotone", 0, 0.0, 0.0, {}};
  std::size_t feasible_seen = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    Rng rng = make_rng(s, "caps");
    const bool five = k % 2 == 0;
    const int J = five ? 3 : 1 + static_cast<int>(rng() % 3);
    const info::Problem p = random_problem(J, s);
    const info::JointPmf joint = info::compose(p);
    const info::ComposedVars cv{J};
    info::RateTuple rates;
    double total = 0.0;
    for (int j = 0; j < J; ++j) {
      const double h = info::entropy(joint, cv.us({j}));
      rates.rates.push_back(h * uniform(rng, 0.8, 1.2));
      total += rates.rates.back();
    }
    const DagNetwork base = five ? make_five_node() : make_star(J);
    std::vector<Edge> edges = base.edges();
    for (auto& e : edges) e.capacity_bits = uniform(rng, 0.0, 1.5 * total);
    const DagNetwork g1(base.num_nodes(), edges, base.sources(), base.decision_node());
    const bool f1 = info::theorem1_feasible(p, g1, rates).feasible;
    // Raise one capacity, then all of them.
    for (int step = 0; step < 2; ++step) {
      if (step == 0) {
        edges[rng() % edges.size()].capacity_bits += uniform(rng, 0.0, total);
      } else {
        for (auto& e : edges) e.capacity_bits += uniform(rng, 0.0, total);
      }
      const DagNetwork g2(base.num_nodes(), edges, base.sources(), base.decision_node());
      const bool f2 = info::theorem1_feasible(p, g2, rates).feasible;
      if (f1 && !f2) fail(r, s, "raising a capacity made feasible rates infeasible");
    }
    feasible_seen += f1 ? 1 : 0;
    ++r.instances;
  }
  if (feasible_seen == 0) r.failures.push_back("no feasible instance was generated; the check is vacuous");
  return r;
}

namespace {

bool grid_feasible(const info::FiveNodeTerms& t, const info::FiveNodeCapacities& c, double step, double slack) {
  const double top = std::max(t.a123, 0.0) + 2 * step;
  const long n = static_cast<long>(std::ceil(top / step));
  for (long i1 = 0; i1 <= n; ++i1) {
    const double r1 = static_cast<double>(i1) * step;
    if (r1 > c.c15 + slack || r1 < t.a1 - slack) continue;
    for (long i2 = 0; i2 <= n; ++i2) {
      const double r2 = static_cast<double>(i2) * step;
      if (r2 > c.c24 + slack || r2 < t.a2 - slack || r1 + r2 < t.a12 - slack) continue;
      for (long i3 = 0; i3 <= n; ++i3) {
        const double r3 = static_cast<double>(i3) * step;
        if (r3 > c.c34 + slack || r3 < t.a3 - slack) continue;
        if (r2 + r3 > c.c45 + slack || r2 + r3 < t.a23 - slack) continue;
        if (r1 + r3 < t.a13 - slack || r1 + r2 + r3 < t.a123 - slack) continue;
        return true;
      }
    }
  }
  return false;
}

}  // namespace

CheckResult check_five_node_grid(std::size_t count, std::uint64_t seed) {
  CheckResult r{"regions", "five-node-exact-vs-grid", 0, 0.0, 0.0, {}};
  constexpr double step = 0.01;
  for (std::size_t k = 0; k < count; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    const info::Problem p = random_problem(3, s, 2);
    const info::FiveNodeTerms t = info::five_node_terms(p);
    Rng rng = make_rng(s, "caps");
    const double top = t.a123 + 0.3;
    const info::FiveNodeCapacities c{uniform(rng, 0, top), uniform(rng, 0, top), uniform(rng, 0, top),
                                     uniform(rng, 0, 1.5 * top)};
    const auto v = info::five_node_region_check(t, c);
    ++r.instances;
    // A grid point satisfying every constraint proves feasibility; with
    // slack of a few grid steps the grid must find any feasible region.
    if (grid_feasible(t, c, step, 1e-12) && !v.feasible) fail(r, s, "grid point satisfies the region but check says no");
    if (v.feasible && !grid_feasible(t, c, step, 3 * step)) fail(r, s, "check says feasible but no grid point is near");
    if (v.feasible) {
      const auto& w = *v.witness;
      const double e = 1e-9;
      const bool ok = w[0] >= -e && w[1] >= -e && w[2] >= -e && w[0] <= c.c15 + e && w[1] <= c.c24 + e &&
                      w[2] <= c.c34 + e && w[1] + w[2] <= c.c45 + e && w[0] >= t.a1 - e && w[1] >= t.a2 - e &&
                      w[2] >= t.a3 - e && w[1] + w[2] >= t.a23 - e && w[0] + w[2] >= t.a13 - e &&
                      w[0] + w[1] >= t.a12 - e && w[0] + w[1] + w[2] >= t.a123 - e;
      if (!ok) fail(r, s, "witness violates the region");
    }
  }
  return r;
}

info::JointPmf prop1_toy_pmf() {
  std::vector<double> p(16, 0.0);
  const double flip[3] = {0.1, 0.2, 0.3};
  for (int x1 = 0; x1 < 2; ++x1)
    for (int x2 = 0; x2 < 2; ++x2)
      for (int x3 = 0; x3 < 2; ++x3)
        for (int y = 0; y < 2; ++y) {
          double v = 0.5;
          const int xs[3] = {x1, x2, x3};
          for (int j = 0; j < 3; ++j) v *= xs[j] == y ? 1.0 - flip[j] : flip[j];
          p[static_cast<std::size_t>(((x1 * 2 + x2) * 2 + x3) * 2 + y)] = v;
        }
  return info::JointPmf({2, 2, 2, 2}, std::move(p));
}

CheckResult check_prop1(const std::vector<double>& s_values, double step) {
  CheckResult r{"regions", "prop1-boundary", 0, 0.0, 1e-9, {}};
  const info::JointPmf data = prop1_toy_pmf();
  const auto points = info::prop1_points(data, s_values, step);
  const double h_y = info::entropy(data, {3});
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& pt : points) {
    // Recompute L_s and C_s from the returned channels by the generic route.
    const info::Problem prob{data, pt.channels};
    const double l = info::lagrangian_Ls(prob, pt.s);
    const double c = info::sum_capacity_threshold(info::five_node_terms(prob));
    const double err = std::max({std::abs(pt.delta - (h_y + l + pt.s * c)), std::abs(pt.l_s - l), std::abs(pt.c_s - c)});
    ++r.instances;
    r.max_error = std::max(r.max_error, err);
    if (err > r.tolerance) fail(r, 0, "s=" + fmt("%g", pt.s) + ": identity off by " + fmt("%.3e", err));
    if (pt.delta > prev + 1e-12) fail(r, 0, "s=" + fmt("%g", pt.s) + ": relevance increased with s");
    prev = pt.delta;
  }
  return r;
}

std::vector<PublishedCell> published_table() {
  return {{"VGG16 q=50000", "fl", 4427, 0.5},    {"VGG16 q=50000", "sl", 324, 0.5},
          {"VGG16 q=50000", "inl", 0.16, 0.005}, {"ResNet50 q=50000", "fl", 820, 0.5},
          {"ResNet50 q=50000", "sl", 441, 0.5},  {"ResNet50 q=50000", "inl", 0.16, 0.005},
          {"VGG16 q=500000", "fl", 4427, 0.5},   {"VGG16 q=500000", "sl", 1046, 0.5},
          {"VGG16 q=500000", "inl", 1.6, 0.05},  {"ResNet50 q=500000", "fl", 820, 0.5},
          {"ResNet50 q=500000", "sl", 1164, 0.5}, {"ResNet50 q=500000", "inl", 1.6, 0.05}};
}

CheckResult check_bandwidth_table() {
  CheckResult r{"bandwidth", "table1-cells", 0, 0.0, 0.0, {}};
  const auto rows = reference_bandwidth_table();
  for (const auto& cell : published_table()) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const BandwidthRow& b) { return b.label == cell.row; });
    ++r.instances;
    if (it == rows.end()) {
      fail(r, 0, "missing row " + cell.row);
      continue;
    }
    const double v = cell.scheme == "fl" ? it->fl_gbits : cell.scheme == "sl" ? it->sl_gbits : it->inl_gbits;
    // Error in units of the displayed half-digit; must stay within 1.
    const double units = std::abs(v - cell.shown) / cell.half_unit;
    r.max_error = std::max(r.max_error, units);
    if (units > 1.0) fail(r, 0, cell.row + " " + cell.scheme + ": " + fmt("%.4f", v) + " vs shown " + fmt("%g", cell.shown));
  }
  return r;
}

CheckResult check_bandwidth_formulas(std::uint64_t seed) {
  CheckResult r{"bandwidth", "formula-properties", 0, 0.0, 1e-12, {}};
  for (std::size_t k = 0; k < 100; ++k) {
    const auto s = instance_seed(seed, r.name, k);
    Rng rng = make_rng(s, "params");
    BandwidthParams b{uniform(rng, 0, 1e6), uniform(rng, 1, 1e5), uniform(rng, 1, 64), uniform(rng, 1, 1000),
                      uniform(rng, 1, 1e9), uniform(rng, 0, 1)};
    BandwidthParams b2 = b;
    b2.s_bits *= 2;
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); };
    double e = std::max({rel(inl_bits(b2), 2 * inl_bits(b)), rel(fl_bits(b2), 2 * fl_bits(b)), rel(sl_bits(b2), 2 * sl_bits(b))});
    BandwidthParams bn = b;
    bn.N_params *= 3;
    BandwidthParams bq = b;
    bq.q *= 2;
    bq.p += 7;
    e = std::max({e, rel(inl_bits(bn), inl_bits(b)), rel(fl_bits(bq), fl_bits(b))});
    BandwidthParams b0 = b;
    b0.q = 0;
    if (inl_bits(b0) != 0.0) fail(r, s, "q = 0 must give zero INL bits");
    e = std::max(e, rel(sl_bits(b0), b.eta_frac * b.N_params * b.J * b.s_bits));
    ++r.instances;
    r.max_error = std::max(r.max_error, e);
    if (e > r.tolerance) fail(r, s, "formula property off by " + fmt("%.3e", e));
  }
  if (message_bits(25088, 1, 32) != 802816) r.failures.push_back("message_bits(25088, 1, 32) != 802816");
  return r;
}

CheckResult check_fl_aggregation(std::uint64_t seed) {
  CheckResult r{"bandwidth", "fl-aggregation", 0, 0.0, 0.0, {}};
  const auto s = instance_seed(seed, r.name, 0);
  const InlModel m = random_star_model(3, s, true, false);
  const Batch b = random_batch(m, 12, s);
  Dataset data;
  data.views = b.views;
  data.labels = b.labels;
  data.num_classes = m.num_classes();
  const auto shards = shard_dataset(data, 3);
  std::vector<InlModel> replicas(3, m);
  const FlRoundResult res = fl_round(replicas, shards, std::size_t{0}, 0.1, 4, s, 1);
  ++r.instances;
  for (const auto& [id, nm] : m.nodes()) {
    if (nm.net.flat_params() != res.aggregate.node(id).net.flat_params()) fail(r, s, "zero-step round is not a fixed point");
  }
  if (res.bits != 2ULL * m.num_params() * 3 * 32) fail(r, s, "round bits differ from 2 * params * replicas * 32");

  DenseLayer w0{Tensor::from_rows({{0.0}}), {0.0}, Activation::linear};
  DenseLayer w2{Tensor::from_rows({{2.0}}), {0.0}, Activation::linear};
  const FeedForwardNet n0({w0}), n2({w2});
  const FeedForwardNet* both[] = {&n0, &n2};
  ++r.instances;
  if (average_nets(both).layers()[0].weights(0, 0) != 1.0) fail(r, s, "mean of w=0 and w=2 is not 1");

  std::vector<InlModel> mixed{m, random_star_model(3, s + 1, true, false), m};
  ++r.instances;
  try {
    fl_round(mixed, shards, std::size_t{0}, 0.1, 4, s, 1);
    fail(r, s, "architecture mismatch was accepted");
  } catch (const ShapeError&) {
  } catch (const ValidationError&) {
  }
  return r;
}

CheckResult check_sl_matches_inl(std::uint64_t seed) {
  CheckResult r{"bandwidth", "sl-single-client-equals-inl", 0, 0.0, 0.0, {}};
  const auto s = instance_seed(seed, r.name, 0);
  SyntheticSpec spec;
  spec.num_views = 1;
  spec.noise_stds = {1.0};
  spec.feature_dim = 6;
  spec.train_size = 96;
  spec.test_size = 16;
  spec.seed = s;
  const SyntheticData data = gen_dataset(spec);
  const DagNetwork dag = make_star(1);
  const InlModel init = build_model(dag, default_architectures(dag, 4, 8, 3), {{1, 6}}, 4, s, false);
  TrainConfig cfg;
  cfg.s = 0.0;
  cfg.deterministic_latent = true;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.seed = s;
  InlModel inl_model = init;
  train(inl_model, data.train, nullptr, cfg, LossKind::star);
  InlModel sl_model = init;
  train_sl(init, data.train, nullptr, cfg, 1, &sl_model);
  ++r.instances;
  for (const auto& [id, nm] : inl_model.nodes()) {
    if (nm.net.flat_params() != sl_model.node(id).net.flat_params()) {
      fail(r, s, "node " + std::to_string(id) + " weights differ between SL and INL");
    }
  }
  return r;
}

std::vector<std::string> suite_names() { return {"gradients", "bounds", "regions", "bandwidth", "all"}; }

std::vector<CheckResult> run_suite(const std::string& name, const SuiteOptions& o) {
  auto n = [&](std::size_t base) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(base * o.scale))); };
  std::vector<CheckResult> out;
  const bool all = name == "all";
  bool known = all;
  if (all || name == "gradients") {
    known = true;
    for (int j = 1; j <= 3; ++j) out.push_back(check_split_equivalence("star", j, n(50), o.seed));
    out.push_back(check_split_equivalence("five-node", 3, n(50), o.seed));
    out.push_back(check_split_equivalence_stochastic(n(50), o.seed));
    out.push_back(check_fd_nets(n(100), o.seed));
    out.push_back(check_fd_objective(n(20), o.seed));
    out.push_back(check_protocol_invariants(n(40), o.seed));
    out.push_back(check_kl_monte_carlo(o.seed));
    out.push_back(check_training_determinism(o.seed));
  }
  if (all || name == "bounds") {
    known = true;
    out.push_back(check_lemma1(n(1000), o.seed));
    out.push_back(check_lemma2_optimal(n(1000), o.seed));
    out.push_back(check_lemma2_perturbed(n(100), 100, o.seed));
    out.push_back(check_entropy_identities(n(200), o.seed));
    out.push_back(check_lagrangian_monotone(n(200), o.seed));
  }
  if (all || name == "regions") {
    known = true;
    out.push_back(check_fme_equivalence(n(200), o.seed));
    out.push_back(check_theorem1_monotone(n(200), o.seed));
    out.push_back(check_five_node_grid(n(200), o.seed));
    out.push_back(check_prop1({0.0, 0.1, 1.0, 10.0}));
  }
  if (all || name == "bandwidth") {
    known = true;
    out.push_back(check_bandwidth_table());
    out.push_back(check_bandwidth_formulas(o.seed));
    out.push_back(check_fl_aggregation(o.seed));
    out.push_back(check_sl_matches_inl(o.seed));
  }
  if (!known) throw ValidationError("unknown suite '" + name + "'");
  return out;
}

std::string report_csv(const std::vector<CheckResult>& results) {
  std::ostringstream out;
  out << "suite,check,instances,failures,max_error,tolerance,passed\n";
  char buf[256];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%.6e,%.1e,%s\n", r.suite.c_str(), r.name.c_str(), r.instances,
                  r.failures.size(), r.max_error, r.tolerance, r.passed() ? "true" : "false");
    out << buf;
  }
  return out.str();
}

std::string report_text(const std::vector<CheckResult>& results) {
  std::ostringstream out;
  char buf[256];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%-4s %-10s %-36s n=%-6zu max_error=%.3e\n", r.passed() ? "ok" : "FAIL",
                  r.suite.c_str(), r.name.c_str(), r.instances, r.max_error);
    out << buf;
    for (const auto& f : r.failures) out << "       " << f << "\n";
  }
  return out.str();
}

}  // namespace inl::verify
