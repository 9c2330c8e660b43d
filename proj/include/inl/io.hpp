#pragma once

// JSON / CSV plumbing: graph and architecture files, pmf problems,
// checkpoints and metrics.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "inl/info.hpp"
#include "inl/protocol.hpp"

namespace inl::io {

using nlohmann::json;

// {"num_nodes": N, "edges": [[i, j, capacity], ...], "sources": [...], "decision_node": N}
DagNetwork graph_from_json(const json& j);
json graph_to_json(const DagNetwork& dag);

// {"layers": [{"out_dim": 64, "activation": "relu"}, ...], "latent_dim": 4, "in_dim": 16}
Architecture architecture_from_json(const json& j);
json architecture_to_json(const Architecture& arch);
// {"1": {...}, "2": {...}} keyed by node id.
std::map<NodeId, Architecture> architectures_from_json(const json& j);
json architectures_to_json(const std::map<NodeId, Architecture>& archs);

// {"alphabet": [...], "p": [...]}
info::JointPmf pmf_from_json(const json& j);
json pmf_to_json(const info::JointPmf& pmf);
// {"inputs": 2, "outputs": 2, "rows": [...]}
info::Channel channel_from_json(const json& j);
json channel_to_json(const info::Channel& c);
// {"given_alphabet": [...], "outputs": k, "p": [...]}
info::ConditionalTable table_from_json(const json& j);
// {"data": pmf, "channels": [channel, ...]}
info::Problem problem_from_json(const json& j);
json problem_to_json(const info::Problem& p);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

// Checkpoint directory: model.json with graph, shapes and activations, plus
// node_<id>.bin / aux_<id>.bin holding little-endian float64 parameters.
void save_checkpoint(const InlModel& model, const std::filesystem::path& dir);
InlModel load_checkpoint(const std::filesystem::path& dir);

inline constexpr const char* kMetricsHeader = "epoch,split,loss,accuracy,cumulative_bits";
std::string metrics_csv(const std::vector<MetricsRow>& rows);

// Per-view feature columns then the label: view<j>_<k>..., label.
std::string dataset_csv(const Dataset& data);

}  // namespace inl::io
