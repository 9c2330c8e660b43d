#pragma once

// In-network learning over a DAG: every node owns a network, activations are
// concatenated on the way to the decision node and error vectors are cut
// back into per-sender pieces on the way upstream.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "inl/graph.hpp"
#include "inl/nn.hpp"

namespace inl {

enum class NodeRole { source, relay, decision };

struct NodeModel {
  NodeId id = 0;
  NodeRole role = NodeRole::relay;
  FeedForwardNet net;
  std::optional<GaussianHead> head;

  // Width of the vector this node transmits (u for Gaussian heads).
  std::size_t output_width() const { return head ? head->latent_dim : net.out_dim(); }
};

struct Architecture {
  std::vector<LayerSpec> layers;
  std::optional<std::size_t> latent_dim;
  std::optional<std::size_t> in_dim;  // derived from the graph when absent
};

// How the objective weighs each term. The maximised quantity per sample is
//   log Q(y | decision inputs)
//   + aux_weight * sum_j log Q_j(y | u_j)
//   - sum_j ratio_coef[j] * log(P(u_j | x_j) / Q(u_j)).
struct LossWeights {
  double aux_weight = 0.0;
  std::map<NodeId, double> ratio_coef;
};

enum class LossKind { star, five_node, custom };

struct TrainConfig {
  double s = 0.0;
  double eta = 0.05;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  bool deterministic_latent = false;
  unsigned bits_per_value = 32;
  bool parallel = false;
  // Replaces the derived per-source coefficients (general topologies).
  std::map<NodeId, double> ratio_coef_override;
};

// Coefficients for the published topologies: star gives every source s and
// aux weight s; the five-node graph gives node 1 s and nodes 2, 3 2s.
LossWeights loss_weights(LossKind kind, const DagNetwork& dag, double s,
                         const std::map<NodeId, double>& override_coef = {});
LossKind infer_loss_kind(const DagNetwork& dag);

class InlModel {
 public:
  InlModel(DagNetwork dag, std::map<NodeId, NodeModel> nodes, std::map<NodeId, std::size_t> input_dims,
           std::map<NodeId, FeedForwardNet> aux = {});

  const DagNetwork& dag() const { return dag_; }
  const std::map<NodeId, std::size_t>& input_dims() const { return input_dims_; }
  std::size_t num_classes() const { return nodes_.at(dag_.decision_node()).net.out_dim(); }
  // Nodes that take part in learning, in topological order.
  const std::vector<NodeId>& order() const { return order_; }

  NodeModel& node(NodeId id) { return nodes_.at(id); }
  const NodeModel& node(NodeId id) const { return nodes_.at(id); }
  std::map<NodeId, NodeModel>& nodes() { return nodes_; }
  const std::map<NodeId, NodeModel>& nodes() const { return nodes_; }
  // Auxiliary per-source decoders Q_j(y | u_j), hosted by the decision node.
  std::map<NodeId, FeedForwardNet>& aux() { return aux_; }
  const std::map<NodeId, FeedForwardNet>& aux() const { return aux_; }

  std::size_t num_params() const;
  void clear_caches();

 private:
  DagNetwork dag_;
  std::map<NodeId, NodeModel> nodes_;
  std::map<NodeId, std::size_t> input_dims_;
  std::map<NodeId, FeedForwardNet> aux_;
  std::vector<NodeId> order_;
};

// Builds freshly initialised node networks. Input widths come from the graph
// unless the architecture pins one, in which case a mismatch is reported by
// the layer-compatibility check and construction fails.
InlModel build_model(const DagNetwork& dag, const std::map<NodeId, Architecture>& archs,
                     const std::map<NodeId, std::size_t>& input_dims, std::size_t num_classes,
                     std::uint64_t seed, bool with_aux);

std::vector<LayerViolation> check_model_compat(const DagNetwork& dag, const std::map<NodeId, NodeModel>& nodes,
                                               const std::map<NodeId, std::size_t>& input_dims);

// Advisory capacity check: per-sample message bits above an edge capacity.
std::vector<std::string> capacity_warnings(const InlModel& model, unsigned bits_per_value);

struct Message {
  NodeId from = 0;
  NodeId to = 0;
  enum class Direction { forward, backward } direction = Direction::forward;
  Tensor payload;
  std::uint64_t bits = 0;
};

struct ForwardState {
  std::size_t batch = 0;
  std::map<NodeId, Tensor> outputs;         // transmitted vectors
  std::map<NodeId, LatentSample> latents;   // head nodes only
  Tensor decision_probs;                    // [b x K]
  std::map<NodeId, Tensor> aux_probs;       // per source with an aux decoder
  std::vector<Message> messages;
};

// Noise for the reparametrisation, one [b x d] tensor per head node.
using NoiseMap = std::map<NodeId, Tensor>;
NoiseMap zero_noise(const InlModel& model, std::size_t batch);
NoiseMap sample_noise(const InlModel& model, std::size_t batch, Rng& rng);

// Runs every node in topological order. A node's input is its own
// observation (sources) followed by its in-neighbours' outputs in ascending id
// order. Populates every forward cache.
ForwardState forward_pass(InlModel& model, const std::map<NodeId, Tensor>& batch, const NoiseMap& noise,
                          unsigned bits_per_value = 32, bool parallel = false);

struct LossBreakdown {
  double objective = 0.0;        // maximised quantity, nats, batch mean
  double joint_loglik = 0.0;     // mean log Q(y | decision inputs)
  std::map<NodeId, double> aux_loglik;
  std::map<NodeId, double> log_ratio;
};

// Star objective: mean log Q_J + (s / n) sum_j [log Q_j - log-ratio_j].
double star_loss(const Tensor& decision_probs, const std::vector<int>& labels,
                 const std::map<NodeId, Tensor>& aux_probs, const std::map<NodeId, LatentSample>& latents, double s);
// Five-node objective: mean [log Q_5 - s ratio_1] - (2s / n) sum [ratio_2 + ratio_3].
double hop_loss_5node(const DagNetwork& dag, const Tensor& decision_probs, const std::vector<int>& labels,
                      const std::map<NodeId, LatentSample>& latents, double s);
LossBreakdown objective(const ForwardState& state, const std::vector<int>& labels, const LossWeights& weights);

struct BackwardState {
  std::map<NodeId, NetGrad> grads;
  std::map<NodeId, NetGrad> aux_grads;
  // Gradient (of the minimised per-sample loss) reaching each node's
  // transmitted vector, summed over its out-edges.
  std::map<NodeId, Tensor> output_grads;
  // Gradient at the decision node's input layer before splitting.
  Tensor decision_delta_in;
  std::vector<Message> messages;
};

// Gradient of the per-sample minimised loss with respect to the decision
// node's soft output: -1 / max(p_y, floor) at the label, 0 elsewhere.
Tensor decision_output_grad(const Tensor& probs, const std::vector<int>& labels, double weight = 1.0);

BackwardState backward_pass(InlModel& model, const ForwardState& state, const std::vector<int>& labels,
                            const LossWeights& weights, unsigned bits_per_value = 32, bool parallel = false);

void apply_sgd(InlModel& model, const BackwardState& grads, double eta);

struct Dataset {
  std::map<NodeId, Tensor> views;  // source id -> [n x dim]
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  Dataset subset(std::span<const std::size_t> rows) const;
};

struct MetricsRow {
  std::size_t epoch = 0;
  std::string split;
  double loss = 0.0;
  double accuracy = 0.0;
  std::uint64_t cumulative_bits = 0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepResult {
  double loss = 0.0;  // minimised loss (negated objective)
  std::size_t correct = 0;
  std::uint64_t bits = 0;
};

// forward -> loss -> backward -> SGD on one minibatch.
StepResult train_step(InlModel& model, const Dataset& batch, const LossWeights& weights, const NoiseMap& noise,
                      double eta, unsigned bits_per_value, bool parallel = false);

// Minibatch index lists for one pass; shuffled by `rng`.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng);
Rng shuffle_rng(std::uint64_t seed, std::size_t epoch, std::size_t shard = 0);

struct TrainResult {
  std::vector<MetricsRow> rows;
  std::uint64_t total_bits = 0;
};

// Fixed epoch budget. Emits a "train" row per epoch and, when `test` is
// given, a "test" row evaluated with deterministic inference.
TrainResult train(InlModel& model, const Dataset& train_set, const Dataset* test_set, const TrainConfig& config,
                  LossKind kind);

// Deterministic inference: latents are replaced by their means.
Tensor infer(const InlModel& model, const std::map<NodeId, Tensor>& sample);
std::vector<double> infer_one(const InlModel& model, const std::map<NodeId, std::vector<double>>& sample);

struct Evaluation {
  double mean_log_loss = 0.0;
  double accuracy = 0.0;
};
Evaluation evaluate(const InlModel& model, const Dataset& data);
Evaluation evaluate_probs(const Tensor& probs, const std::vector<int>& labels);

// H(Y) - mean log loss, in nats.
double relevance(const Tensor& predictions, const std::vector<int>& labels, std::span<const double> label_prior);

}  // namespace inl
