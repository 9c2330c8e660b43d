#pragma once

// Federated- and split-learning baselines at desk scale, and the per-epoch
// bandwidth formulas used to compare them with in-network learning.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inl/protocol.hpp"

namespace inl {

struct BandwidthParams {
  double q = 0;         // data points in the whole data set
  double p = 0;         // width of the fusion node's input layer
  double s_bits = 32;   // bits per parameter or activation
  double J = 1;         // clients / input nodes
  double N_params = 0;  // parameters of the reference model
  double eta_frac = 0;  // fraction of the model held client-side in SL
};

void validate(const BandwidthParams& params);

// Bits per epoch. INL: 2pqs/J. FL: 2NJs. SL: (2pq + eta N J)s.
double inl_bits(const BandwidthParams& params);
double fl_bits(const BandwidthParams& params);
double sl_bits(const BandwidthParams& params);

inline constexpr double kGbit = 1e9;

struct BandwidthRow {
  std::string label;
  BandwidthParams params;
  double fl_gbits = 0, sl_gbits = 0, inl_gbits = 0;
};

// VGG16 / ResNet50 at 50k and 500k data points, J = 500, p = 25088, s = 32.
std::vector<BandwidthRow> reference_bandwidth_table();
std::string bandwidth_table_csv(const std::vector<BandwidthRow>& rows);
std::string bandwidth_table_text(const std::vector<BandwidthRow>& rows);

// Unweighted parameter mean of identically shaped models.
InlModel average_models(std::span<const InlModel* const> models);

struct FlRoundResult {
  InlModel aggregate;
  std::uint64_t bits = 0;  // 2 * params * replicas * s_bits
  double train_loss = 0.0;
  double train_accuracy = 0.0;
};

// Each replica runs `steps` minibatches of cross-entropy SGD on its own shard
// (default: one pass over the shard); the aggregate is the plain mean and
// every replica restarts from it.
FlRoundResult fl_round(std::vector<InlModel>& replicas, std::span<const Dataset> shards, std::optional<std::size_t> steps,
                       double eta, std::size_t batch_size, std::uint64_t seed, std::size_t round,
                       unsigned bits_per_value = 32);

// Client side: every node except the decision node. Server side: the decision node.
struct SlState {
  std::map<NodeId, NodeModel> client;
  NodeModel server;
};

SlState split_model(const InlModel& model);
InlModel join_model(const DagNetwork& dag, const std::map<NodeId, std::size_t>& input_dims, const SlState& state);

struct SlEpochResult {
  std::uint64_t bits = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::size_t handoffs = 0;
};

// Clients take turns in shard order: each trains on its shard (activations go
// to the server, errors come back), then hands its client-side weights on.
SlEpochResult sl_epoch(SlState& state, const DagNetwork& dag, const std::map<NodeId, std::size_t>& input_dims,
                       std::span<const Dataset> shards, double eta, std::size_t batch_size, std::uint64_t seed,
                       std::size_t epoch, unsigned bits_per_value = 32);

std::size_t client_param_count(const SlState& state);

// Splits rows 0..n-1 into `parts` contiguous shards.
std::vector<Dataset> shard_dataset(const Dataset& data, std::size_t parts);

// Full training loops producing the same metrics schema as train().
TrainResult train_fl(InlModel model, const Dataset& train_set, const Dataset* test_set, const TrainConfig& cfg,
                     std::size_t clients, InlModel* final_model = nullptr);
TrainResult train_sl(InlModel model, const Dataset& train_set, const Dataset* test_set, const TrainConfig& cfg,
                     std::size_t clients, InlModel* final_model = nullptr);

}  // namespace inl
