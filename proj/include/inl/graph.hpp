#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace inl {

using NodeId = int;

struct Edge {
  NodeId from = 0;
  NodeId to = 0;
  double capacity_bits = 0.0;  // bits per channel use
};

// Capacity-annotated DAG G = (N, E, C). Nodes are numbered 1..num_nodes; the
// decision node is conventionally num_nodes. Immutable once constructed.
class DagNetwork {
 public:
  // Throws ValidationError on cycles, unknown nodes, negative capacities, a
  // decision node with out-edges, or a source that cannot reach the decision node.
  DagNetwork(int num_nodes, std::vector<Edge> edges, std::set<NodeId> sources, NodeId decision_node);

  int num_nodes() const { return num_nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::set<NodeId>& sources() const { return sources_; }
  NodeId decision_node() const { return decision_; }

  bool is_source(NodeId n) const { return sources_.contains(n); }

  // In-/out-neighbours in ascending id order.
  const std::vector<NodeId>& in_neighbors(NodeId n) const { return in_.at(n); }
  const std::vector<NodeId>& out_neighbors(NodeId n) const { return out_.at(n); }

  const Edge& edge(NodeId from, NodeId to) const;

  // Kahn order, ties broken by smallest id.
  const std::vector<NodeId>& topo_order() const { return topo_; }
  // Longest-path depth from any node without in-edges.
  int depth(NodeId n) const { return depth_.at(n); }

  // Sum of C_ij over edges with i in S and j outside S. S must not contain
  // the decision node.
  double cut_capacity(const std::set<NodeId>& cut) const;

  // Nodes that participate in learning: every node on a path from a source
  // to the decision node.
  std::vector<NodeId> active_nodes() const;

 private:
  int num_nodes_;
  std::vector<Edge> edges_;
  std::set<NodeId> sources_;
  NodeId decision_;
  std::map<NodeId, std::vector<NodeId>> in_;
  std::map<NodeId, std::vector<NodeId>> out_;
  std::vector<NodeId> topo_;
  std::map<NodeId, int> depth_;
};

// The two published topologies.
DagNetwork make_star(int num_sources, double capacity = 1e9);
DagNetwork make_five_node(double c15 = 1e9, double c24 = 1e9, double c34 = 1e9, double c45 = 1e9);
bool is_five_node_topology(const DagNetwork& dag);
bool is_star_topology(const DagNetwork& dag);

struct LayerViolation {
  NodeId node = 0;
  std::size_t expected_first_layer = 0;
  std::size_t actual_first_layer = 0;
  std::string reason;
};

// What check_layer_compat needs from each node's model.
struct LayerSizes {
  std::size_t first_layer = 0;  // input width of the node's network
  std::size_t last_layer = 0;   // width of the vector the node transmits
};

// First-layer width must equal the own observation width (sources only) plus
// the transmitted widths of all in-neighbours. Returns every violation; an
// empty result means compatible.
std::vector<LayerViolation> check_layer_compat(const DagNetwork& dag,
                                               const std::map<NodeId, LayerSizes>& sizes,
                                               const std::map<NodeId, std::size_t>& input_dims);

// vector_len * batch * bits_per_value.
std::uint64_t message_bits(std::uint64_t vector_len, std::uint64_t batch, std::uint64_t bits_per_value);

}  // namespace inl
