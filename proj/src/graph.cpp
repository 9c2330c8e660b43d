#include "inl/graph.hpp"

#include <algorithm>
#include <queue>

#include "inl/errors.hpp"

namespace inl {

DagNetwork::DagNetwork(int num_nodes, std::vector<Edge> edges, std::set<NodeId> sources, NodeId decision_node)
    : num_nodes_(num_nodes), edges_(std::move(edges)), sources_(std::move(sources)), decision_(decision_node) {
  if (num_nodes_ < 2) throw ValidationError("a network needs at least two nodes");
  auto valid = [&](NodeId n) { return n >= 1 && n <= num_nodes_; };
  if (!valid(decision_)) throw ValidationError("decision node out of range");
  if (sources_.empty()) throw ValidationError("at least one source node is required");
  for (NodeId s : sources_) {
    if (!valid(s) || s == decision_) throw ValidationError("source " + std::to_string(s) + " out of range");
  }
  for (NodeId n = 1; n <= num_nodes_; ++n) {
    in_[n];
    out_[n];
  }
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const Edge& e : edges_) {
    if (!valid(e.from) || !valid(e.to)) {
      throw ValidationError("edge (" + std::to_string(e.from) + "," + std::to_string(e.to) + ") references an unknown node");
    }
    if (e.from == e.to) throw ValidationError("self-loop at node " + std::to_string(e.from));
    if (!(e.capacity_bits >= 0.0)) throw ValidationError("edge capacities must be non-negative");
    if (!seen.insert({e.from, e.to}).second) throw ValidationError("duplicate edge");
    if (e.from == decision_) throw ValidationError("the decision node must not have outgoing edges");
    in_[e.to].push_back(e.from);
    out_[e.from].push_back(e.to);
  }
  for (auto& [n, v] : in_) std::sort(v.begin(), v.end());
  for (auto& [n, v] : out_) std::sort(v.begin(), v.end());

  std::map<NodeId, std::size_t> indeg;
  for (NodeId n = 1; n <= num_nodes_; ++n) indeg[n] = in_[n].size();
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId n = 1; n <= num_nodes_; ++n) {
    if (indeg[n] == 0) ready.push(n);
  }
  while (!ready.empty()) {
    NodeId n = ready.top();
    ready.pop();
    topo_.push_back(n);
    for (NodeId m : out_[n]) {
      if (--indeg[m] == 0) ready.push(m);
    }
  }
  if (topo_.size() != static_cast<std::size_t>(num_nodes_)) throw ValidationError("graph contains a cycle");

  for (NodeId n : topo_) {
    int d = 0;
    for (NodeId p : in_[n]) d = std::max(d, depth_.at(p) + 1);
    depth_[n] = d;
  }

  std::set<NodeId> reaches{decision_};
  for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
    for (NodeId m : out_[*it]) {
      if (reaches.contains(m)) reaches.insert(*it);
    }
  }
  for (NodeId s : sources_) {
    if (!reaches.contains(s)) {
      throw ValidationError("source " + std::to_string(s) + " cannot reach the decision node");
    }
  }
}

const Edge& DagNetwork::edge(NodeId from, NodeId to) const {
  for (const Edge& e : edges_) {
    if (e.from == from && e.to == to) return e;
  }
  throw ValidationError("no edge (" + std::to_string(from) + "," + std::to_string(to) + ")");
}

double DagNetwork::cut_capacity(const std::set<NodeId>& cut) const {
  for (NodeId n : cut) {
    if (n == decision_) throw ValidationError("a cut must not contain the decision node");
    if (n < 1 || n > num_nodes_) throw ValidationError("cut references unknown node " + std::to_string(n));
  }
  double c = 0.0;
  for (const Edge& e : edges_) {
    if (cut.contains(e.from) && !cut.contains(e.to)) c += e.capacity_bits;
  }
  return c;
}

std::vector<NodeId> DagNetwork::active_nodes() const {
  std::set<NodeId> from_source(sources_.begin(), sources_.end());
  for (NodeId n : topo_) {
    if (!from_source.contains(n)) continue;
    for (NodeId m : out_.at(n)) from_source.insert(m);
  }
  std::set<NodeId> to_decision{decision_};
  for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
    for (NodeId m : out_.at(*it)) {
      if (to_decision.contains(m)) to_decision.insert(*it);
    }
  }
  std::vector<NodeId> active;
  for (NodeId n : topo_) {
    if (from_source.contains(n) && to_decision.contains(n)) active.push_back(n);
  }
  return active;
}

DagNetwork make_star(int num_sources, double capacity) {
  if (num_sources < 1) throw ValidationError("a star needs at least one source");
  std::vector<Edge> edges;
  std::set<NodeId> sources;
  for (int j = 1; j <= num_sources; ++j) {
    edges.push_back({j, num_sources + 1, capacity});
    sources.insert(j);
  }
  return DagNetwork(num_sources + 1, std::move(edges), std::move(sources), num_sources + 1);
}

DagNetwork make_five_node(double c15, double c24, double c34, double c45) {
  return DagNetwork(5, {{3, 4, c34}, {2, 4, c24}, {4, 5, c45}, {1, 5, c15}}, {1, 2, 3}, 5);
}

bool is_five_node_topology(const DagNetwork& dag) {
  if (dag.num_nodes() != 5 || dag.decision_node() != 5) return false;
  if (dag.sources() != std::set<NodeId>{1, 2, 3}) return false;
  std::set<std::pair<NodeId, NodeId>> e;
  for (const auto& edge : dag.edges()) e.insert({edge.from, edge.to});
  return e == std::set<std::pair<NodeId, NodeId>>{{3, 4}, {2, 4}, {4, 5}, {1, 5}};
}

bool is_star_topology(const DagNetwork& dag) {
  const int j = dag.num_nodes() - 1;
  if (dag.decision_node() != dag.num_nodes()) return false;
  if (static_cast<int>(dag.sources().size()) != j) return false;
  if (dag.edges().size() != static_cast<std::size_t>(j)) return false;
  for (const auto& e : dag.edges()) {
    if (e.to != dag.decision_node() || !dag.is_source(e.from)) return false;
  }
  return true;
}

std::vector<LayerViolation> check_layer_compat(const DagNetwork& dag,
                                               const std::map<NodeId, LayerSizes>& sizes,
                                               const std::map<NodeId, std::size_t>& input_dims) {
  std::vector<LayerViolation> report;
  const auto active = dag.active_nodes();
  for (NodeId n : active) {
    if (!sizes.contains(n)) {
      report.push_back({n, 0, 0, "no model for node"});
    }
  }
  if (!report.empty()) return report;

  for (NodeId n : active) {
    std::size_t expected = 0;
    if (dag.is_source(n)) {
      auto it = input_dims.find(n);
      if (it == input_dims.end()) {
        report.push_back({n, 0, sizes.at(n).first_layer, "missing observation dimension for source"});
        continue;
      }
      expected += it->second;
    }
    for (NodeId p : dag.in_neighbors(n)) {
      auto it = sizes.find(p);
      if (it != sizes.end()) expected += it->second.last_layer;
    }
    if (expected != sizes.at(n).first_layer) {
      report.push_back({n, expected, sizes.at(n).first_layer, "first layer width mismatch"});
    }
  }
  return report;
}

std::uint64_t message_bits(std::uint64_t vector_len, std::uint64_t batch, std::uint64_t bits_per_value) {
  return vector_len * batch * bits_per_value;
}

}  // namespace inl
