#include "inl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "inl/errors.hpp"

namespace inl {

void validate(const BandwidthParams& b) {
  const double vals[] = {b.q, b.p, b.s_bits, b.J, b.N_params, b.eta_frac};
  for (double v : vals) {
    if (!std::isfinite(v)) throw ValidationError("bandwidth parameters must be finite");
  }
  if (b.q < 0 || b.p < 0) throw ValidationError("q and p must be non-negative");
  if (b.s_bits <= 0 || b.J <= 0 || b.N_params <= 0) throw ValidationError("s, J and N must be positive");
  if (b.eta_frac < 0 || b.eta_frac > 1) throw ValidationError("eta_frac must lie in [0, 1]");
}

double inl_bits(const BandwidthParams& b) {
  validate(b);
  return 2.0 * b.p * b.q * b.s_bits / b.J;
}

double fl_bits(const BandwidthParams& b) {
  validate(b);
  return 2.0 * b.N_params * b.J * b.s_bits;
}

double sl_bits(const BandwidthParams& b) {
  validate(b);
  return (2.0 * b.p * b.q + b.eta_frac * b.N_params * b.J) * b.s_bits;
}

std::vector<BandwidthRow> reference_bandwidth_table() {
  struct Net {
    const char* name;
    double n;
    double eta;
  };
  const Net nets[] = {{"VGG16", 138344128.0, 0.11}, {"ResNet50", 25636712.0, 0.88}};
  std::vector<BandwidthRow> rows;
  for (double q : {50000.0, 500000.0}) {
    for (const Net& net : nets) {
      BandwidthRow r;
      r.label = std::string(net.name) + " q=" + std::to_string(static_cast<long>(q));
      r.params = {q, 25088.0, 32.0, 500.0, net.n, net.eta};
      r.fl_gbits = fl_bits(r.params) / kGbit;
      r.sl_gbits = sl_bits(r.params) / kGbit;
      r.inl_gbits = inl_bits(r.params) / kGbit;
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

std::string bandwidth_table_csv(const std::vector<BandwidthRow>& rows) {
  std::ostringstream out;
  out << "model,q,p,s_bits,J,N,eta_frac,fl_gbits,sl_gbits,inl_gbits\n";
  char buf[256];
  for (const auto& r : rows) {
    const auto& p = r.params;
    const auto model = r.label.substr(0, r.label.find(' '));
    std::snprintf(buf, sizeof buf, "%s,%.0f,%.0f,%.0f,%.0f,%.0f,%.2f,%.6f,%.6f,%.6f\n", model.c_str(), p.q, p.p,
                  p.s_bits, p.J, p.N_params, p.eta_frac, r.fl_gbits, r.sl_gbits, r.inl_gbits);
    out << buf;
  }
  return out.str();
}

std::string bandwidth_table_text(const std::vector<BandwidthRow>& rows) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-20s %14s %14s %14s\n", "", "FL (Gbits)", "SL (Gbits)", "INL (Gbits)");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-20s %14.4g %14.4g %14.4g\n", r.label.c_str(), r.fl_gbits, r.sl_gbits,
                  r.inl_gbits);
    out << buf;
  }
  return out.str();
}

InlModel average_models(std::span<const InlModel* const> models) {
  if (models.empty()) throw ValidationError("average_models: no models");
  const InlModel& first = *models.front();
  for (const InlModel* m : models) {
    if (m->nodes().size() != first.nodes().size() || m->aux().size() != first.aux().size()) {
      throw ShapeError("average_models: replicas differ in node set");
    }
    for (const auto& [id, nm] : first.nodes()) {
      if (!m->nodes().contains(id) || !same_architecture(m->node(id).net, nm.net)) {
        throw ShapeError("average_models: architecture mismatch at node " + std::to_string(id));
      }
    }
    for (const auto& [id, net] : first.aux()) {
      if (!m->aux().contains(id) || !same_architecture(m->aux().at(id), net)) {
        throw ShapeError("average_models: aux decoder mismatch for source " + std::to_string(id));
      }
    }
  }

  std::map<NodeId, NodeModel> nodes;
  for (const auto& [id, nm] : first.nodes()) {
    std::vector<const FeedForwardNet*> nets;
    for (const InlModel* m : models) nets.push_back(&m->node(id).net);
    nodes.emplace(id, NodeModel{id, nm.role, average_nets(nets), nm.head});
  }
  std::map<NodeId, FeedForwardNet> aux;
  for (const auto& [id, net] : first.aux()) {
    std::vector<const FeedForwardNet*> nets;
    for (const InlModel* m : models) nets.push_back(&m->aux().at(id));
    aux.emplace(id, average_nets(nets));
  }
  return InlModel(first.dag(), std::move(nodes), first.input_dims(), std::move(aux));
}

namespace {

struct ShardPass {
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::size_t seen = 0;
};

// Plain cross-entropy SGD with deterministic latents, as the baselines
// train a single undistributed model.
ShardPass run_shard(InlModel& model, const Dataset& shard, std::optional<std::size_t> steps, double eta,
                    std::size_t batch_size, Rng rng, unsigned bits_per_value) {
  ShardPass pass;
  if (shard.size() == 0) return pass;
  const LossWeights ce{};
  auto batches = make_batches(shard.size(), batch_size, rng);
  const std::size_t total = steps.value_or(batches.size());
  for (std::size_t k = 0; k < total; ++k) {
    if (k > 0 && k % batches.size() == 0) batches = make_batches(shard.size(), batch_size, rng);
    const auto& rows = batches[k % batches.size()];
    const Dataset batch = shard.subset(rows);
    const StepResult r = train_step(model, batch, ce, zero_noise(model, rows.size()), eta, bits_per_value);
    pass.loss_sum += r.loss * static_cast<double>(rows.size());
    pass.correct += r.correct;
    pass.seen += rows.size();
  }
  return pass;
}

}  // namespace

FlRoundResult fl_round(std::vector<InlModel>& replicas, std::span<const Dataset> shards,
                       std::optional<std::size_t> steps, double eta, std::size_t batch_size, std::uint64_t seed,
                       std::size_t round, unsigned bits_per_value) {
  if (replicas.empty()) throw ValidationError("fl_round: no replicas");
  if (replicas.size() != shards.size()) throw ValidationError("fl_round: one shard per replica required");
  if (!(eta >= 0.0)) throw ValidationError("learning rate must be non-negative");

  std::vector<ShardPass> passes(replicas.size());
  for (std::size_t r = 0; r < replicas.size(); ++r) {
    passes[r] = run_shard(replicas[r], shards[r], steps, eta, batch_size, shuffle_rng(seed, round, r), bits_per_value);
  }

  std::vector<const InlModel*> ptrs;
  for (const auto& m : replicas) ptrs.push_back(&m);
  FlRoundResult result{average_models(ptrs)};
  for (auto& m : replicas) m = result.aggregate;

  double loss = 0.0;
  std::size_t correct = 0, seen = 0;
  for (const auto& p : passes) {
    loss += p.loss_sum;
    correct += p.correct;
    seen += p.seen;
  }
  if (seen > 0) {
    result.train_loss = loss / static_cast<double>(seen);
    result.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
  }
  // Upload and download of the full parameter vector per client.
  result.bits = 2ULL * result.aggregate.num_params() * replicas.size() * bits_per_value;
  return result;
}

SlState split_model(const InlModel& model) {
  const NodeId decision = model.dag().decision_node();
  SlState st{{}, model.node(decision)};
  for (const auto& [id, nm] : model.nodes()) {
    if (id != decision) st.client.emplace(id, nm);
  }
  return st;
}

InlModel join_model(const DagNetwork& dag, const std::map<NodeId, std::size_t>& input_dims, const SlState& state) {
  std::map<NodeId, NodeModel> nodes = state.client;
  if (nodes.contains(state.server.id)) throw ValidationError("server node also listed on the client side");
  nodes.emplace(state.server.id, state.server);
  return InlModel(dag, std::move(nodes), input_dims);
}

std::size_t client_param_count(const SlState& state) {
  std::size_t n = 0;
  for (const auto& [id, nm] : state.client) n += nm.net.num_params();
  return n;
}

SlEpochResult sl_epoch(SlState& state, const DagNetwork& dag, const std::map<NodeId, std::size_t>& input_dims,
                       std::span<const Dataset> shards, double eta, std::size_t batch_size, std::uint64_t seed,
                       std::size_t epoch, unsigned bits_per_value) {
  if (!(eta >= 0.0)) throw ValidationError("learning rate must be non-negative");
  SlEpochResult result;
  double loss = 0.0;
  std::size_t correct = 0, seen = 0;
  const std::uint64_t handoff_bits = static_cast<std::uint64_t>(client_param_count(state)) * bits_per_value;
  for (std::size_t k = 0; k < shards.size(); ++k) {
    InlModel model = join_model(dag, input_dims, state);
    const ShardPass pass =
        run_shard(model, shards[k], std::nullopt, eta, batch_size, shuffle_rng(seed, epoch, k), bits_per_value);
    loss += pass.loss_sum;
    correct += pass.correct;
    seen += pass.seen;
    // Only the cut between client and server is a network link: activations
    // up and error vectors down, p values each per sample.
    result.bits += 2 * message_bits(state.server.net.in_dim(), pass.seen, bits_per_value);
    state = split_model(model);
    // The client-side weights move on to the next client.
    result.bits += handoff_bits;
    ++result.handoffs;
  }
  if (seen > 0) {
    result.train_loss = loss / static_cast<double>(seen);
    result.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
  }
  return result;
}

std::vector<Dataset> shard_dataset(const Dataset& data, std::size_t parts) {
  if (parts == 0) throw ValidationError("need at least one shard");
  std::vector<Dataset> shards;
  const std::size_t n = data.size();
  for (std::size_t k = 0; k < parts; ++k) {
    std::vector<std::size_t> rows;
    for (std::size_t i = k * n / parts; i < (k + 1) * n / parts; ++i) rows.push_back(i);
    shards.push_back(data.subset(rows));
  }
  return shards;
}

TrainResult train_fl(InlModel model, const Dataset& train_set, const Dataset* test_set, const TrainConfig& cfg,
                     std::size_t clients, InlModel* final_model) {
  if (cfg.batch_size < 1) throw ValidationError("batch size must be at least 1");
  const auto shards = shard_dataset(train_set, clients);
  std::vector<InlModel> replicas(clients, model);
  TrainResult result;
  for (std::size_t round = 1; round <= cfg.epochs; ++round) {
    FlRoundResult r = fl_round(replicas, shards, std::nullopt, cfg.eta, cfg.batch_size, cfg.seed, round,
                               cfg.bits_per_value);
    if (!std::isfinite(r.train_loss)) throw TrainingDiverged("non-finite federated training loss");
    result.total_bits += r.bits;
    result.rows.push_back({round, "train", r.train_loss, r.train_accuracy, result.total_bits});
    if (test_set) {
      const Evaluation ev = evaluate(r.aggregate, *test_set);
      result.rows.push_back({round, "test", ev.mean_log_loss, ev.accuracy, result.total_bits});
    }
    model = std::move(r.aggregate);
  }
  if (final_model) *final_model = std::move(model);
  return result;
}

TrainResult train_sl(InlModel model, const Dataset& train_set, const Dataset* test_set, const TrainConfig& cfg,
                     std::size_t clients, InlModel* final_model) {
  if (cfg.batch_size < 1) throw ValidationError("batch size must be at least 1");
  const auto shards = shard_dataset(train_set, clients);
  const DagNetwork dag = model.dag();
  const auto input_dims = model.input_dims();
  SlState state = split_model(model);
  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const SlEpochResult r = sl_epoch(state, dag, input_dims, shards, cfg.eta, cfg.batch_size, cfg.seed, epoch,
                                     cfg.bits_per_value);
    if (!std::isfinite(r.train_loss)) throw TrainingDiverged("non-finite split-learning loss");
    result.total_bits += r.bits;
    result.rows.push_back({epoch, "train", r.train_loss, r.train_accuracy, result.total_bits});
    if (test_set) {
      const Evaluation ev = evaluate(join_model(dag, input_dims, state), *test_set);
      result.rows.push_back({epoch, "test", ev.mean_log_loss, ev.accuracy, result.total_bits});
    }
  }
  if (final_model) *final_model = join_model(dag, input_dims, state);
  return result;
}

}  // namespace inl
