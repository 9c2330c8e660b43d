#include "inl/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "inl/errors.hpp"

namespace inl {

namespace {

// Groups nodes by graph depth so that nodes inside one group never depend on
// each other.
std::vector<std::vector<NodeId>> depth_levels(const DagNetwork& dag, const std::vector<NodeId>& order) {
  std::map<int, std::vector<NodeId>> by_depth;
  for (NodeId n : order) by_depth[dag.depth(n)].push_back(n);
  std::vector<std::vector<NodeId>> levels;
  for (auto& [d, nodes] : by_depth) levels.push_back(std::move(nodes));
  return levels;
}

template <class Fn>
void run_level(const std::vector<NodeId>& level, bool parallel, Fn&& fn) {
  if (!parallel || level.size() < 2) {
    for (NodeId n : level) fn(n);
    return;
  }
  std::vector<std::future<void>> jobs;
  jobs.reserve(level.size());
  for (NodeId n : level) jobs.push_back(std::async(std::launch::async, [&fn, n] { fn(n); }));
  for (auto& j : jobs) j.get();
}

double clamped_log(double p) { return std::log(std::max(p, kLogLossFloor)); }

double mean_label_loglik(const Tensor& probs, const std::vector<int>& labels) {
  if (probs.rows() != labels.size()) throw ShapeError("label count does not match batch size");
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (y >= probs.cols()) throw ValidationError("label outside the class range");
    sum += clamped_log(probs(i, y));
  }
  return sum / static_cast<double>(labels.size());
}

double mean_log_ratio(const LatentSample& s) {
  double sum = 0.0;
  for (std::size_t r = 0; r < s.u.rows(); ++r) sum += gaussian_log_ratio(s.u.row(r), s.mu.row(r), s.logvar.row(r));
  return sum / static_cast<double>(s.u.rows());
}

}  // namespace

LossKind infer_loss_kind(const DagNetwork& dag) {
  if (is_five_node_topology(dag)) return LossKind::five_node;
  if (is_star_topology(dag)) return LossKind::star;
  return LossKind::custom;
}

LossWeights loss_weights(LossKind kind, const DagNetwork& dag, double s, const std::map<NodeId, double>& override_coef) {
  if (!(s >= 0.0)) throw ValidationError("the Lagrange multiplier s must be non-negative");
  LossWeights w;
  switch (kind) {
    case LossKind::star:
      w.aux_weight = s;
      for (NodeId j : dag.sources()) w.ratio_coef[j] = s;
      break;
    case LossKind::five_node:
      if (!is_five_node_topology(dag)) throw ValidationError("five-node loss requested on a different topology");
      w.ratio_coef = {{1, s}, {2, 2.0 * s}, {3, 2.0 * s}};
      break;
    case LossKind::custom:
      for (NodeId j : dag.sources()) w.ratio_coef[j] = s;
      break;
  }
  for (const auto& [node, c] : override_coef) {
    if (!(c >= 0.0)) throw ValidationError("regulariser coefficients must be non-negative");
    w.ratio_coef[node] = c;
  }
  return w;
}

InlModel::InlModel(DagNetwork dag, std::map<NodeId, NodeModel> nodes, std::map<NodeId, std::size_t> input_dims,
                   std::map<NodeId, FeedForwardNet> aux)
    : dag_(std::move(dag)), nodes_(std::move(nodes)), input_dims_(std::move(input_dims)), aux_(std::move(aux)) {
  order_ = dag_.active_nodes();
  for (const auto& [id, nm] : nodes_) {
    if (std::find(order_.begin(), order_.end(), id) == order_.end()) {
      throw ValidationError("node " + std::to_string(id) + " is not on any source-to-decision path");
    }
    if (nm.id != id) throw ValidationError("node model id does not match its key");
  }
  const auto report = check_model_compat(dag_, nodes_, input_dims_);
  if (!report.empty()) {
    std::string msg = "layer sizes incompatible with the graph:";
    for (const auto& v : report) {
      msg += " node " + std::to_string(v.node) + " (" + v.reason + ", expected " + std::to_string(v.expected_first_layer) +
             ", got " + std::to_string(v.actual_first_layer) + ")";
    }
    throw ValidationError(msg);
  }
  const NodeModel& decision = nodes_.at(dag_.decision_node());
  if (decision.head) throw ValidationError("the decision node cannot carry a Gaussian head");
  if (decision.net.layers().back().activation != Activation::softmax) {
    throw ValidationError("the decision node's last layer must be a softmax");
  }
  for (auto& [id, nm] : nodes_) {
    if (nm.head) {
      check_head(*nm.head, nm.net);
      if (!dag_.is_source(id)) throw ValidationError("only source nodes carry a Gaussian head");
    }
  }
  for (const auto& [j, net] : aux_) {
    if (!dag_.is_source(j)) throw ValidationError("auxiliary decoders are keyed by source node");
    if (net.in_dim() != nodes_.at(j).output_width()) throw ShapeError("auxiliary decoder input width mismatch");
    if (net.out_dim() != num_classes() || net.layers().back().activation != Activation::softmax) {
      throw ValidationError("auxiliary decoders must end in a softmax over the classes");
    }
  }
}

std::size_t InlModel::num_params() const {
  std::size_t n = 0;
  for (const auto& [id, nm] : nodes_) n += nm.net.num_params();
  for (const auto& [id, net] : aux_) n += net.num_params();
  return n;
}

void InlModel::clear_caches() {
  for (auto& [id, nm] : nodes_) nm.net.clear_cache();
  for (auto& [id, net] : aux_) net.clear_cache();
}

std::vector<LayerViolation> check_model_compat(const DagNetwork& dag, const std::map<NodeId, NodeModel>& nodes,
                                               const std::map<NodeId, std::size_t>& input_dims) {
  std::map<NodeId, LayerSizes> sizes;
  for (const auto& [id, nm] : nodes) sizes[id] = {nm.net.in_dim(), nm.output_width()};
  return check_layer_compat(dag, sizes, input_dims);
}

InlModel build_model(const DagNetwork& dag, const std::map<NodeId, Architecture>& archs,
                     const std::map<NodeId, std::size_t>& input_dims, std::size_t num_classes, std::uint64_t seed,
                     bool with_aux) {
  std::map<NodeId, NodeModel> nodes;
  std::map<NodeId, std::size_t> out_width;
  for (NodeId n : dag.active_nodes()) {
    auto it = archs.find(n);
    if (it == archs.end()) throw ValidationError("no architecture for node " + std::to_string(n));
    const Architecture& arch = it->second;
    if (arch.layers.empty()) throw ValidationError("node " + std::to_string(n) + " has no layers");
    std::size_t derived = 0;
    if (dag.is_source(n)) {
      auto d = input_dims.find(n);
      if (d == input_dims.end()) throw ValidationError("no observation dimension for source " + std::to_string(n));
      derived += d->second;
    }
    for (NodeId p : dag.in_neighbors(n)) {
      if (out_width.contains(p)) derived += out_width.at(p);
    }
    const std::size_t in_dim = arch.in_dim.value_or(derived);
    Rng rng = make_rng(seed, "init", static_cast<std::uint64_t>(n));
    NodeModel nm;
    nm.id = n;
    nm.role = n == dag.decision_node() ? NodeRole::decision : dag.is_source(n) ? NodeRole::source : NodeRole::relay;
    nm.net = FeedForwardNet(in_dim, arch.layers, rng);
    if (arch.latent_dim) nm.head = GaussianHead{*arch.latent_dim};
    if (n == dag.decision_node() && nm.net.out_dim() != num_classes) {
      throw ValidationError("decision node must output " + std::to_string(num_classes) + " classes");
    }
    out_width[n] = nm.output_width();
    nodes.emplace(n, std::move(nm));
  }
  std::map<NodeId, FeedForwardNet> aux;
  if (with_aux) {
    for (NodeId j : dag.sources()) {
      Rng rng = make_rng(seed, "init-aux", static_cast<std::uint64_t>(j));
      const LayerSpec spec{num_classes, Activation::softmax};
      aux.emplace(j, FeedForwardNet(out_width.at(j), std::span<const LayerSpec>(&spec, 1), rng));
    }
  }
  return InlModel(dag, std::move(nodes), input_dims, std::move(aux));
}

std::vector<std::string> capacity_warnings(const InlModel& model, unsigned bits_per_value) {
  std::vector<std::string> out;
  for (const Edge& e : model.dag().edges()) {
    if (!model.nodes().contains(e.from) || !model.nodes().contains(e.to)) continue;
    const auto bits = message_bits(model.node(e.from).output_width(), 1, bits_per_value);
    if (static_cast<double>(bits) > e.capacity_bits) {
      out.push_back("edge (" + std::to_string(e.from) + "," + std::to_string(e.to) + ") carries " + std::to_string(bits) +
                    " bits per sample, above its capacity of " + std::to_string(e.capacity_bits));
    }
  }
  return out;
}

NoiseMap zero_noise(const InlModel& model, std::size_t batch) {
  NoiseMap m;
  for (const auto& [id, nm] : model.nodes()) {
    if (nm.head) m.emplace(id, Tensor::matrix(batch, nm.head->latent_dim));
  }
  return m;
}

NoiseMap sample_noise(const InlModel& model, std::size_t batch, Rng& rng) {
  NoiseMap m;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& [id, nm] : model.nodes()) {
    if (!nm.head) continue;
    Tensor t = Tensor::matrix(batch, nm.head->latent_dim);
    for (double& v : t.data()) v = normal(rng);
    m.emplace(id, std::move(t));
  }
  return m;
}

ForwardState forward_pass(InlModel& model, const std::map<NodeId, Tensor>& batch, const NoiseMap& noise,
                          unsigned bits_per_value, bool parallel) {
  const DagNetwork& dag = model.dag();
  ForwardState st;
  std::optional<std::size_t> b;
  for (NodeId j : dag.sources()) {
    auto it = batch.find(j);
    if (it == batch.end()) throw ValidationError("no observations for source " + std::to_string(j));
    if (b && *b != it->second.rows()) throw ShapeError("batch sizes differ across sources");
    b = it->second.rows();
    if (it->second.cols() != model.input_dims().at(j)) throw ShapeError("observation width mismatch at source " + std::to_string(j));
  }
  st.batch = *b;

  // Pre-create every slot so concurrent nodes only write their own entries.
  for (NodeId n : model.order()) {
    st.outputs[n];
    if (model.node(n).head) st.latents[n];
  }

  auto run_node = [&](NodeId n) {
    NodeModel& nm = model.node(n);
    std::vector<const Tensor*> parts;
    if (dag.is_source(n)) parts.push_back(&batch.at(n));
    for (NodeId p : dag.in_neighbors(n)) {
      if (st.outputs.contains(p)) parts.push_back(&st.outputs.at(p));
    }
    const Tensor input = concat_cols(parts);
    Tensor out = nm.net.forward(input);
    if (nm.head) {
      auto it = noise.find(n);
      if (it == noise.end()) throw ValidationError("no noise for head node " + std::to_string(n));
      LatentSample& ls = st.latents.at(n);
      ls = sample_latent_batch(*nm.head, out, it->second);
      st.outputs.at(n) = ls.u;
    } else {
      st.outputs.at(n) = std::move(out);
    }
  };
  for (const auto& level : depth_levels(dag, model.order())) run_level(level, parallel, run_node);

  st.decision_probs = st.outputs.at(dag.decision_node());
  for (auto& [j, net] : model.aux()) st.aux_probs[j] = net.forward(st.outputs.at(j));

  for (const Edge& e : dag.edges()) {
    if (!st.outputs.contains(e.from) || !st.outputs.contains(e.to)) continue;
    const Tensor& payload = st.outputs.at(e.from);
    st.messages.push_back({e.from, e.to, Message::Direction::forward, payload,
                           message_bits(payload.cols(), payload.rows(), bits_per_value)});
  }
  return st;
}

double star_loss(const Tensor& decision_probs, const std::vector<int>& labels,
                 const std::map<NodeId, Tensor>& aux_probs, const std::map<NodeId, LatentSample>& latents, double s) {
  if (!(s >= 0.0)) throw ValidationError("the Lagrange multiplier s must be non-negative");
  if (latents.empty()) throw ValidationError("star loss needs at least one source");
  double value = mean_label_loglik(decision_probs, labels);
  for (const auto& [j, ls] : latents) {
    auto it = aux_probs.find(j);
    if (it == aux_probs.end()) throw ValidationError("no auxiliary decoder output for source " + std::to_string(j));
    value += s * (mean_label_loglik(it->second, labels) - mean_log_ratio(ls));
  }
  return value;
}

double hop_loss_5node(const DagNetwork& dag, const Tensor& decision_probs, const std::vector<int>& labels,
                      const std::map<NodeId, LatentSample>& latents, double s) {
  if (!is_five_node_topology(dag)) throw ValidationError("hop loss is defined for the five-node topology only");
  if (!(s >= 0.0)) throw ValidationError("the Lagrange multiplier s must be non-negative");
  for (NodeId j : {1, 2, 3}) {
    if (!latents.contains(j)) throw ValidationError("node " + std::to_string(j) + " has no latent sample");
  }
  return mean_label_loglik(decision_probs, labels) - s * mean_log_ratio(latents.at(1)) -
         2.0 * s * (mean_log_ratio(latents.at(2)) + mean_log_ratio(latents.at(3)));
}

LossBreakdown objective(const ForwardState& st, const std::vector<int>& labels, const LossWeights& w) {
  LossBreakdown lb;
  lb.joint_loglik = mean_label_loglik(st.decision_probs, labels);
  lb.objective = lb.joint_loglik;
  if (w.aux_weight != 0.0) {
    for (const auto& [j, probs] : st.aux_probs) {
      lb.aux_loglik[j] = mean_label_loglik(probs, labels);
      lb.objective += w.aux_weight * lb.aux_loglik[j];
    }
  }
  for (const auto& [j, ls] : st.latents) {
    auto it = w.ratio_coef.find(j);
    const double c = it == w.ratio_coef.end() ? 0.0 : it->second;
    lb.log_ratio[j] = mean_log_ratio(ls);
    lb.objective -= c * lb.log_ratio[j];
  }
  return lb;
}

Tensor decision_output_grad(const Tensor& probs, const std::vector<int>& labels, double weight) {
  if (probs.rows() != labels.size()) throw ShapeError("label count does not match batch size");
  Tensor g = Tensor::matrix(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (y >= probs.cols()) throw ValidationError("label outside the class range");
    g(i, y) = -weight / std::max(probs(i, y), kLogLossFloor);
  }
  return g;
}

BackwardState backward_pass(InlModel& model, const ForwardState& st, const std::vector<int>& labels,
                            const LossWeights& w, unsigned bits_per_value, bool parallel) {
  const DagNetwork& dag = model.dag();
  for (NodeId n : model.order()) {
    if (!model.node(n).net.has_cache()) throw ProtocolError("stale or missing forward cache at node " + std::to_string(n));
  }
  BackwardState bs;

  // Upstream error messages, keyed by (sender of the activation, receiver).
  std::map<std::pair<NodeId, NodeId>, Tensor> pieces;
  for (NodeId n : model.order()) {
    for (NodeId m : dag.out_neighbors(n)) {
      if (model.nodes().contains(m)) pieces[{n, m}];
    }
  }
  for (NodeId n : model.order()) {
    bs.grads[n];
    bs.output_grads[n];
  }

  // Splits a node's input-layer error into the observation part (dropped)
  // and one piece per in-neighbour, in concatenation order.
  auto scatter = [&](NodeId n, const Tensor& delta_in) {
    std::vector<std::size_t> widths;
    std::vector<NodeId> senders;
    if (dag.is_source(n)) widths.push_back(model.input_dims().at(n));
    for (NodeId p : dag.in_neighbors(n)) {
      if (!model.nodes().contains(p)) continue;
      widths.push_back(model.node(p).output_width());
      senders.push_back(p);
    }
    auto parts = split_cols(delta_in, widths);
    const std::size_t offset = dag.is_source(n) ? 1 : 0;
    for (std::size_t k = 0; k < senders.size(); ++k) pieces.at({senders[k], n}) = std::move(parts[k + offset]);
  };

  const NodeId decision = dag.decision_node();
  std::map<NodeId, Tensor> aux_delta;
  for (auto& [j, net] : model.aux()) {
    const Tensor g = decision_output_grad(st.aux_probs.at(j), labels, w.aux_weight);
    auto r = net.backward_from_delta(g);
    bs.aux_grads[j] = std::move(r.grads);
    aux_delta[j] = std::move(r.delta_in);
  }

  auto run_node = [&](NodeId n) {
    NodeModel& nm = model.node(n);
    Tensor g_out;
    if (n == decision) {
      g_out = decision_output_grad(st.decision_probs, labels);
    } else {
      g_out = Tensor::matrix(st.batch, nm.output_width());
      for (NodeId m : dag.out_neighbors(n)) {
        auto it = pieces.find({n, m});
        if (it == pieces.end()) continue;
        for (std::size_t i = 0; i < g_out.size(); ++i) g_out[i] += it->second[i];
      }
      // The decision node also hosts this source's auxiliary decoder, so its
      // contribution rides on the same backward message.
      if (auto a = aux_delta.find(n); a != aux_delta.end()) {
        for (std::size_t i = 0; i < g_out.size(); ++i) g_out[i] += a->second[i];
      }
    }
    Tensor g_act = g_out;
    if (nm.head) {
      auto c = w.ratio_coef.find(n);
      g_act = head_backward(st.latents.at(n), g_out, c == w.ratio_coef.end() ? 0.0 : c->second);
    }
    auto r = nm.net.backward_from_delta(g_act);
    bs.grads.at(n) = std::move(r.grads);
    bs.output_grads.at(n) = std::move(g_out);
    if (n == decision) bs.decision_delta_in = r.delta_in;
    scatter(n, r.delta_in);
  };

  auto levels = depth_levels(dag, model.order());
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) run_level(*it, parallel, run_node);

  // Backward messages carry exactly what the sender receives on each edge.
  for (const Edge& e : dag.edges()) {
    auto it = pieces.find({e.from, e.to});
    if (it == pieces.end()) continue;
    Tensor payload = it->second;
    if (e.to == decision) {
      if (auto a = aux_delta.find(e.from); a != aux_delta.end()) {
        for (std::size_t i = 0; i < payload.size(); ++i) payload[i] += a->second[i];
      }
    }
    const auto bits = message_bits(payload.cols(), payload.rows(), bits_per_value);
    bs.messages.push_back({e.from, e.to, Message::Direction::backward, std::move(payload), bits});
  }
  return bs;
}

void apply_sgd(InlModel& model, const BackwardState& grads, double eta) {
  for (auto& [id, g] : grads.grads) model.node(id).net.apply_sgd(g, eta);
  for (auto& [id, g] : grads.aux_grads) model.aux().at(id).apply_sgd(g, eta);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.num_classes = num_classes;
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(labels.at(r));
  for (const auto& [j, v] : views) {
    Tensor t = Tensor::matrix(rows.size(), v.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto src = v.row(rows[i]);
      std::copy(src.begin(), src.end(), t.row(i).begin());
    }
    out.views.emplace(j, std::move(t));
  }
  return out;
}

StepResult train_step(InlModel& model, const Dataset& batch, const LossWeights& weights, const NoiseMap& noise,
                      double eta, unsigned bits_per_value, bool parallel) {
  ForwardState fs = forward_pass(model, batch.views, noise, bits_per_value, parallel);
  const LossBreakdown lb = objective(fs, batch.labels, weights);
  if (!std::isfinite(lb.objective)) {
    throw TrainingDiverged("non-finite loss (joint log-likelihood " + std::to_string(lb.joint_loglik) + ")");
  }
  BackwardState bs = backward_pass(model, fs, batch.labels, weights, bits_per_value, parallel);
  apply_sgd(model, bs, eta);

  StepResult r;
  r.loss = -lb.objective;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto row = fs.decision_probs.row(i);
    const auto pred = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (pred == batch.labels[i]) ++r.correct;
  }
  for (const auto& m : fs.messages) r.bits += m.bits;
  for (const auto& m : bs.messages) r.bits += m.bits;
  return r;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ValidationError("batch size must be at least 1");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Fisher-Yates with explicit draws so the order is identical on every
  // standard library.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t k = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[k]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start),
                         idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch_size)));
  }
  return batches;
}

Rng shuffle_rng(std::uint64_t seed, std::size_t epoch, std::size_t shard) {
  return make_rng(seed, "shuffle", (static_cast<std::uint64_t>(epoch) << 20) + shard);
}

TrainResult train(InlModel& model, const Dataset& train_set, const Dataset* test_set, const TrainConfig& cfg,
                  LossKind kind) {
  if (!(cfg.eta >= 0.0)) throw ValidationError("learning rate must be non-negative");
  if (cfg.batch_size < 1) throw ValidationError("batch size must be at least 1");
  const LossWeights weights = loss_weights(kind, model.dag(), cfg.s, cfg.ratio_coef_override);
  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle = shuffle_rng(cfg.seed, epoch);
    Rng noise_rng = make_rng(cfg.seed, "noise", epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    const auto batches = make_batches(train_set.size(), cfg.batch_size, shuffle);
    for (const auto& rows : batches) {
      const Dataset batch = train_set.subset(rows);
      const NoiseMap noise = cfg.deterministic_latent ? zero_noise(model, rows.size()) : sample_noise(model, rows.size(), noise_rng);
      const StepResult r = train_step(model, batch, weights, noise, cfg.eta, cfg.bits_per_value, cfg.parallel);
      loss_sum += r.loss * static_cast<double>(rows.size());
      correct += r.correct;
      result.total_bits += r.bits;
    }
    const auto n = static_cast<double>(train_set.size());
    result.rows.push_back({epoch, "train", loss_sum / n, static_cast<double>(correct) / n, result.total_bits});
    if (test_set) {
      const Evaluation ev = evaluate(model, *test_set);
      result.rows.push_back({epoch, "test", ev.mean_log_loss, ev.accuracy, result.total_bits});
    }
  }
  return result;
}

Tensor infer(const InlModel& model, const std::map<NodeId, Tensor>& sample) {
  const DagNetwork& dag = model.dag();
  std::map<NodeId, Tensor> outputs;
  for (NodeId n : model.order()) {
    const NodeModel& nm = model.node(n);
    std::vector<const Tensor*> parts;
    if (dag.is_source(n)) {
      auto it = sample.find(n);
      if (it == sample.end()) throw ValidationError("no observation for source " + std::to_string(n));
      parts.push_back(&it->second);
    }
    for (NodeId p : dag.in_neighbors(n)) {
      if (outputs.contains(p)) parts.push_back(&outputs.at(p));
    }
    Tensor out = nm.net.predict(concat_cols(parts));
    outputs[n] = nm.head ? slice_cols(out, 0, nm.head->latent_dim) : std::move(out);
  }
  return outputs.at(dag.decision_node());
}

std::vector<double> infer_one(const InlModel& model, const std::map<NodeId, std::vector<double>>& sample) {
  std::map<NodeId, Tensor> batch;
  for (const auto& [j, x] : sample) batch.emplace(j, Tensor({1, x.size()}, x));
  return infer(model, batch).data();
}

Evaluation evaluate_probs(const Tensor& probs, const std::vector<int>& labels) {
  Evaluation ev;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto row = probs.row(i);
    ev.mean_log_loss += -clamped_log(row[static_cast<std::size_t>(labels[i])]);
    if (std::max_element(row.begin(), row.end()) - row.begin() == labels[i]) ++correct;
  }
  const auto n = static_cast<double>(labels.size());
  ev.mean_log_loss /= n;
  ev.accuracy = static_cast<double>(correct) / n;
  return ev;
}

Evaluation evaluate(const InlModel& model, const Dataset& data) {
  return evaluate_probs(infer(model, data.views), data.labels);
}

double relevance(const Tensor& predictions, const std::vector<int>& labels, std::span<const double> label_prior) {
  double h_y = 0.0;
  for (double p : label_prior) {
    if (p > 0.0) h_y -= p * std::log(p);
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (y >= label_prior.size() || label_prior[y] <= 0.0) throw ValidationError("label outside the prior's support");
    loss += log_loss(y, predictions.row(i));
  }
  return h_y - loss / static_cast<double>(labels.size());
}

}  // namespace inl
