#include "inl/verify/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "inl/errors.hpp"
#include "inl/verify/tape.hpp"

namespace inl::verify {

namespace {

using Var = Tape::Var;

struct NetVars {
  std::vector<std::vector<Var>> w;  // per layer, row-major
  std::vector<std::vector<Var>> b;
};

NetVars register_params(Tape& tape, const FeedForwardNet& net) {
  NetVars v;
  for (const auto& layer : net.layers()) {
    std::vector<Var> w, b;
    for (double x : layer.weights.data()) w.push_back(tape.variable(x));
    for (double x : layer.biases) b.push_back(tape.variable(x));
    v.w.push_back(std::move(w));
    v.b.push_back(std::move(b));
  }
  return v;
}

std::vector<Var> tape_forward(Tape& tape, const FeedForwardNet& net, const NetVars& p, std::vector<Var> x) {
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto& layer = net.layers()[l];
    const std::size_t in = layer.in_dim(), out = layer.out_dim();
    if (x.size() != in) throw ShapeError("oracle: input width mismatch");
    std::vector<Var> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      Var acc = p.b[l][o];
      for (std::size_t i = 0; i < in; ++i) acc = tape.add(acc, tape.mul(p.w[l][o * in + i], x[i]));
      z[o] = acc;
    }
    std::vector<Var> a(out);
    switch (layer.activation) {
      case Activation::linear: a = z; break;
      case Activation::relu:
        for (std::size_t o = 0; o < out; ++o) a[o] = tape.relu(z[o]);
        break;
      case Activation::sigmoid:
        for (std::size_t o = 0; o < out; ++o) a[o] = tape.sigmoid(z[o]);
        break;
      case Activation::tanh:
        for (std::size_t o = 0; o < out; ++o) a[o] = tape.tanh(z[o]);
        break;
      case Activation::softmax: {
        double m = tape.val(z[0]);
        for (Var v : z) m = std::max(m, tape.val(v));
        std::vector<Var> e(out);
        for (std::size_t o = 0; o < out; ++o) e[o] = tape.exp(tape.add_const(z[o], -m));
        const Var total = tape.sum(e);
        for (std::size_t o = 0; o < out; ++o) a[o] = tape.div(e[o], total);
        break;
      }
    }
    x = std::move(a);
  }
  return x;
}

Var clamped_log(Tape& tape, Var p) {
  if (tape.val(p) < kLogLossFloor) return tape.constant(std::log(kLogLossFloor));
  return tape.log(p);
}

NetGrad read_grads(const FeedForwardNet& net, const NetVars& p, const std::vector<double>& adj) {
  NetGrad g = zero_grad_like(net.layers());
  for (std::size_t l = 0; l < g.size(); ++l) {
    for (std::size_t k = 0; k < p.w[l].size(); ++k) g[l].weights[k] = adj[static_cast<std::size_t>(p.w[l][k])];
    for (std::size_t k = 0; k < p.b[l].size(); ++k) g[l].biases[k] = adj[static_cast<std::size_t>(p.b[l][k])];
  }
  return g;
}

}  // namespace

OracleResult monolithic_gradients(const InlModel& model, const std::map<NodeId, Tensor>& batch,
                                  const std::vector<int>& labels, const NoiseMap& noise, const LossWeights& weights) {
  const DagNetwork& dag = model.dag();
  const NodeId decision = dag.decision_node();
  const std::size_t b = labels.size();
  Tape tape;
  std::map<NodeId, NetVars> params, aux_params;
  for (const auto& [id, nm] : model.nodes()) params.emplace(id, register_params(tape, nm.net));
  for (const auto& [id, net] : model.aux()) aux_params.emplace(id, register_params(tape, net));

  OracleResult res;
  res.probs = Tensor::matrix(b, model.num_classes());
  std::vector<Var> per_sample;
  for (std::size_t i = 0; i < b; ++i) {
    std::map<NodeId, std::vector<Var>> sent;
    std::vector<Var> terms;
    for (NodeId n : dag.topo_order()) {
      if (!model.nodes().contains(n)) continue;
      const NodeModel& nm = model.node(n);
      std::vector<Var> x;
      if (dag.is_source(n)) {
        for (double v : batch.at(n).row(i)) x.push_back(tape.constant(v));
      }
      for (NodeId p : dag.in_neighbors(n)) {
        if (auto it = sent.find(p); it != sent.end()) x.insert(x.end(), it->second.begin(), it->second.end());
      }
      std::vector<Var> out = tape_forward(tape, nm.net, params.at(n), x);
      if (nm.head) {
        const std::size_t d = nm.head->latent_dim;
        auto eps = noise.at(n).row(i);
        std::vector<Var> u(d);
        std::vector<Var> ratio_terms;
        for (std::size_t k = 0; k < d; ++k) {
          const Var mu = out[k], lv = out[d + k];
          const Var var = tape.exp(lv);
          u[k] = tape.add(mu, tape.mul(tape.exp(tape.scale(lv, 0.5)), tape.constant(eps[k])));
          // log N(u; mu, var) - log N(u; 0, 1)
          const Var diff = tape.sub(u[k], mu);
          const Var quad = tape.div(tape.mul(diff, diff), var);
          ratio_terms.push_back(tape.add(tape.scale(tape.log(var), -0.5),
                                         tape.add(tape.scale(quad, -0.5), tape.scale(tape.mul(u[k], u[k]), 0.5))));
        }
        auto c = weights.ratio_coef.find(n);
        if (c != weights.ratio_coef.end() && c->second != 0.0) terms.push_back(tape.scale(tape.sum(ratio_terms), -c->second));
        out = std::move(u);
      }
      sent[n] = std::move(out);
    }
    const auto y = static_cast<std::size_t>(labels[i]);
    const auto& probs = sent.at(decision);
    for (std::size_t k = 0; k < probs.size(); ++k) res.probs(i, k) = tape.val(probs[k]);
    terms.push_back(clamped_log(tape, probs[y]));
    if (weights.aux_weight != 0.0) {
      for (const auto& [j, net] : model.aux()) {
        const auto q = tape_forward(tape, net, aux_params.at(j), sent.at(j));
        terms.push_back(tape.scale(clamped_log(tape, q[y]), weights.aux_weight));
      }
    }
    per_sample.push_back(tape.sum(terms));
  }
  const Var loss = tape.scale(tape.sum(per_sample), -1.0 / static_cast<double>(b));
  res.loss = tape.val(loss);
  const auto adj = tape.gradient(loss);
  for (const auto& [id, nm] : model.nodes()) res.grads.emplace(id, read_grads(nm.net, params.at(id), adj));
  for (const auto& [id, net] : model.aux()) res.aux_grads.emplace(id, read_grads(net, aux_params.at(id), adj));
  return res;
}

namespace {

double rel_err(std::span<const double> got, std::span<const double> want) {
  if (got.size() != want.size()) throw ShapeError("gradient size mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    diff = std::max(diff, std::abs(got[i] - want[i]));
    scale = std::max(scale, std::abs(want[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace

double max_rel_error(const NetGrad& got, const NetGrad& want) {
  if (got.size() != want.size()) throw ShapeError("layer count mismatch");
  double e = 0.0;
  for (std::size_t l = 0; l < got.size(); ++l) {
    e = std::max(e, rel_err(got[l].weights.data(), want[l].weights.data()));
    e = std::max(e, rel_err(got[l].biases, want[l].biases));
  }
  return e;
}

double max_rel_error(const std::map<NodeId, NetGrad>& got, const std::map<NodeId, NetGrad>& want) {
  if (got.size() != want.size()) throw ShapeError("node set mismatch");
  double e = 0.0;
  for (const auto& [id, g] : want) e = std::max(e, max_rel_error(got.at(id), g));
  return e;
}

namespace {

Activation random_hidden_activation(Rng& rng) {
  constexpr Activation acts[] = {Activation::linear, Activation::relu, Activation::sigmoid, Activation::tanh};
  return acts[rng() % 4];
}

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); }

void randomise_biases(InlModel& model, Rng& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& [id, nm] : model.nodes()) {
    for (auto& layer : nm.net.layers()) {
      for (double& v : layer.biases) v = u(rng);
    }
  }
  for (auto& [id, net] : model.aux()) {
    for (auto& layer : net.layers()) {
      for (double& v : layer.biases) v = u(rng);
    }
  }
}

Architecture random_encoder(Rng& rng, bool head) {
  Architecture a;
  const std::size_t depth = uniform_int(rng, 1, 3);
  for (std::size_t l = 0; l + 1 < depth; ++l) a.layers.push_back({uniform_int(rng, 1, 5), random_hidden_activation(rng)});
  if (head) {
    const std::size_t d = uniform_int(rng, 1, 3);
    a.layers.push_back({2 * d, Activation::linear});
    a.latent_dim = d;
  } else {
    a.layers.push_back({uniform_int(rng, 1, 4), random_hidden_activation(rng)});
  }
  return a;
}

Architecture random_decoder(Rng& rng, std::size_t classes) {
  Architecture a;
  const std::size_t depth = uniform_int(rng, 1, 2);
  for (std::size_t l = 0; l + 1 < depth; ++l) a.layers.push_back({uniform_int(rng, 1, 5), random_hidden_activation(rng)});
  a.layers.push_back({classes, Activation::softmax});
  return a;
}

}  // namespace

InlModel random_star_model(int num_sources, std::uint64_t seed, bool heads, bool with_aux) {
  Rng rng = make_rng(seed, "random-model");
  const DagNetwork dag = make_star(num_sources);
  std::map<NodeId, Architecture> archs;
  std::map<NodeId, std::size_t> dims;
  for (NodeId j : dag.sources()) {
    archs[j] = random_encoder(rng, heads);
    dims[j] = uniform_int(rng, 1, 4);
  }
  const std::size_t classes = uniform_int(rng, 2, 4);
  archs[dag.decision_node()] = random_decoder(rng, classes);
  InlModel m = build_model(dag, archs, dims, classes, seed, with_aux);
  randomise_biases(m, rng);
  return m;
}

InlModel random_five_node_model(std::uint64_t seed, bool heads) {
  Rng rng = make_rng(seed, "random-model");
  const DagNetwork dag = make_five_node();
  std::map<NodeId, Architecture> archs;
  std::map<NodeId, std::size_t> dims;
  for (NodeId j : {1, 2, 3}) {
    archs[j] = random_encoder(rng, heads);
    dims[j] = uniform_int(rng, 1, 4);
  }
  archs[4] = random_encoder(rng, false);
  const std::size_t classes = uniform_int(rng, 2, 4);
  archs[5] = random_decoder(rng, classes);
  InlModel m = build_model(dag, archs, dims, classes, seed, false);
  randomise_biases(m, rng);
  return m;
}

FeedForwardNet random_net(Rng& rng, std::size_t in_dim) {
  constexpr Activation acts[] = {Activation::linear, Activation::relu, Activation::sigmoid, Activation::tanh,
                                 Activation::softmax};
  std::vector<LayerSpec> specs;
  const std::size_t depth = uniform_int(rng, 1, 3);
  for (std::size_t l = 0; l < depth; ++l) specs.push_back({uniform_int(rng, 1, 5), acts[rng() % 5]});
  FeedForwardNet net(in_dim, specs, rng);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& layer : net.layers()) {
    for (double& v : layer.biases) v = u(rng);
  }
  return net;
}

Batch random_batch(const InlModel& model, std::size_t b, std::uint64_t seed) {
  Rng rng = make_rng(seed, "random-batch");
  std::normal_distribution<double> normal(0.0, 1.0);
  Batch out;
  for (const auto& [j, d] : model.input_dims()) {
    Tensor t = Tensor::matrix(b, d);
    for (double& v : t.data()) v = normal(rng);
    out.views.emplace(j, std::move(t));
  }
  for (std::size_t i = 0; i < b; ++i) out.labels.push_back(static_cast<int>(rng() % model.num_classes()));
  return out;
}

double fd_check_net(const FeedForwardNet& net_in, const Tensor& input, std::uint64_t seed, double h) {
  FeedForwardNet net = net_in;
  Rng rng = make_rng(seed, "fd-coefficients");
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor c = Tensor::matrix(input.rows(), net.out_dim());
  for (double& v : c.data()) v = normal(rng);

  auto loss = [&](const FeedForwardNet& n) {
    const Tensor a = n.predict(input);
    double total = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) total += c[k] * a[k] + 0.5 * a[k] * a[k];
    return total / static_cast<double>(input.rows());
  };

  const Tensor a = net.forward(input);
  Tensor delta = c;
  for (std::size_t k = 0; k < delta.size(); ++k) delta[k] += a[k];
  const NetGrad g = net.backward_from_delta(delta).grads;
  std::vector<double> analytic;
  for (const auto& lg : g) {
    analytic.insert(analytic.end(), lg.weights.data().begin(), lg.weights.data().end());
    analytic.insert(analytic.end(), lg.biases.begin(), lg.biases.end());
  }

  std::vector<double> params = net.flat_params();
  std::vector<double> numeric(params.size());
  FeedForwardNet probe = net;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double orig = params[k];
    params[k] = orig + h;
    probe.set_flat_params(params);
    const double up = loss(probe);
    params[k] = orig - h;
    probe.set_flat_params(params);
    const double down = loss(probe);
    params[k] = orig;
    numeric[k] = (up - down) / (2.0 * h);
  }
  return rel_err(analytic, numeric);
}

double fd_check_objective(const InlModel& model_in, const Batch& batch, const NoiseMap& noise,
                          const LossWeights& weights, double h) {
  InlModel model = model_in;
  auto loss = [&](InlModel& m) {
    const ForwardState fs = forward_pass(m, batch.views, noise);
    return -objective(fs, batch.labels, weights).objective;
  };
  const ForwardState fs = forward_pass(model, batch.views, noise);
  const BackwardState bs = backward_pass(model, fs, batch.labels, weights);

  std::vector<double> analytic, numeric;
  auto probe_net = [&](FeedForwardNet& net, const NetGrad& g) {
    for (const auto& lg : g) {
      analytic.insert(analytic.end(), lg.weights.data().begin(), lg.weights.data().end());
      analytic.insert(analytic.end(), lg.biases.begin(), lg.biases.end());
    }
    std::vector<double> params = net.flat_params();
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double orig = params[k];
      params[k] = orig + h;
      net.set_flat_params(params);
      const double up = loss(model);
      params[k] = orig - h;
      net.set_flat_params(params);
      const double down = loss(model);
      params[k] = orig;
      net.set_flat_params(params);
      numeric.push_back((up - down) / (2.0 * h));
    }
  };
  for (auto& [id, nm] : model.nodes()) probe_net(nm.net, bs.grads.at(id));
  for (auto& [id, net] : model.aux()) probe_net(net, bs.aux_grads.at(id));
  return rel_err(analytic, numeric);
}

info::JointPmf random_pmf(std::vector<int> alphabet, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::size_t n = 1;
  for (int a : alphabet) n *= static_cast<std::size_t>(a);
  std::vector<double> p(n);
  double total = 0.0;
  for (double& v : p) total += (v = e(rng));
  for (double& v : p) v /= total;
  return info::JointPmf(std::move(alphabet), std::move(p));
}

namespace {

std::vector<double> random_rows(std::size_t rows, int outputs, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  const auto k = static_cast<std::size_t>(outputs);
  std::vector<double> p(rows * k);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (std::size_t v = 0; v < k; ++v) total += (p[r * k + v] = e(rng));
    for (std::size_t v = 0; v < k; ++v) p[r * k + v] /= total;
  }
  return p;
}

}  // namespace

info::Channel random_channel(int inputs, int outputs, Rng& rng) {
  return info::Channel(inputs, outputs, random_rows(static_cast<std::size_t>(inputs), outputs, rng));
}

info::Problem random_problem(int num_sources, std::uint64_t seed, int max_alphabet) {
  Rng rng = make_rng(seed, "random-problem");
  auto pick = [&] { return static_cast<int>(uniform_int(rng, 2, static_cast<std::size_t>(max_alphabet))); };
  std::vector<int> alphabet;
  for (int j = 0; j < num_sources; ++j) alphabet.push_back(pick());
  alphabet.push_back(pick());  // Y
  info::JointPmf data = random_pmf(alphabet, rng);
  std::vector<info::Channel> channels;
  for (int j = 0; j < num_sources; ++j) channels.push_back(random_channel(alphabet[static_cast<std::size_t>(j)], pick(), rng));
  return {std::move(data), std::move(channels)};
}

info::ConditionalTable random_table(std::vector<int> given, int outputs, Rng& rng) {
  info::ConditionalTable t{std::move(given), outputs, {}};
  t.p = random_rows(t.rows(), outputs, rng);
  return t;
}

info::ConditionalTable perturb(const info::ConditionalTable& table, double t, Rng& rng) {
  info::ConditionalTable out = table;
  const auto noise = random_rows(table.rows(), table.outputs, rng);
  for (std::size_t k = 0; k < out.p.size(); ++k) out.p[k] = (1.0 - t) * table.p[k] + t * noise[k];
  return out;
}

}  // namespace inl::verify
