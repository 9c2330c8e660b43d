#pragma once

// Independent reference computations and seeded random instances for the
// property checks.

#include <cstdint>
#include <map>
#include <vector>

#include "inl/info.hpp"
#include "inl/protocol.hpp"

namespace inl::verify {

struct OracleResult {
  double loss = 0.0;  // minimised: minus the batch-mean objective
  Tensor probs;
  std::map<NodeId, NetGrad> grads;
  std::map<NodeId, NetGrad> aux_grads;
};

// Treats the whole distributed model as one scalar function of all its
// parameters and differentiates it on a tape.
OracleResult monolithic_gradients(const InlModel& model, const std::map<NodeId, Tensor>& batch,
                                  const std::vector<int>& labels, const NoiseMap& noise, const LossWeights& weights);

// ||a - b||_inf / ||b||_inf per tensor (absolute when b is zero); the maximum
// over every layer of every node.
double max_rel_error(const NetGrad& got, const NetGrad& want);
double max_rel_error(const std::map<NodeId, NetGrad>& got, const std::map<NodeId, NetGrad>& want);

// Random shapes and activations. Sources carry a Gaussian head when
// `heads` is set; the decision node ends in a softmax.
InlModel random_star_model(int num_sources, std::uint64_t seed, bool heads = true, bool with_aux = true);
InlModel random_five_node_model(std::uint64_t seed, bool heads = true);
FeedForwardNet random_net(Rng& rng, std::size_t in_dim);

struct Batch {
  std::map<NodeId, Tensor> views;
  std::vector<int> labels;
};
Batch random_batch(const InlModel& model, std::size_t batch, std::uint64_t seed);

// Central differences of L = mean_i sum_k [c_ik a_ik + a_ik^2 / 2] against
// backward_from_delta. Returns ||g - fd||_inf / ||fd||_inf over all parameters.
double fd_check_net(const FeedForwardNet& net, const Tensor& input, std::uint64_t seed, double h = 1e-5);

// Central differences of the minimised INL loss (fixed noise) against
// backward_pass, over every node and auxiliary-decoder parameter.
double fd_check_objective(const InlModel& model, const Batch& batch, const NoiseMap& noise, const LossWeights& weights,
                          double h = 1e-5);

// Small random discrete problems. Alphabets are drawn from [2, max_alphabet].
info::JointPmf random_pmf(std::vector<int> alphabet, Rng& rng);
info::Channel random_channel(int inputs, int outputs, Rng& rng);
info::Problem random_problem(int num_sources, std::uint64_t seed, int max_alphabet = 3);
info::ConditionalTable random_table(std::vector<int> given, int outputs, Rng& rng);
// (1 - t) * table + t * random rows.
info::ConditionalTable perturb(const info::ConditionalTable& table, double t, Rng& rng);

}  // namespace inl::verify
