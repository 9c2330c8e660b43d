#include "inl/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "inl/errors.hpp"

namespace inl::io {

namespace fs = std::filesystem;

DagNetwork graph_from_json(const json& j) {
  try {
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 3) throw ValidationError("each edge must be [from, to, capacity]");
      edges.push_back({e[0].get<NodeId>(), e[1].get<NodeId>(), e[2].get<double>()});
    }
    return DagNetwork(j.at("num_nodes").get<int>(), std::move(edges), j.at("sources").get<std::set<NodeId>>(),
                      j.at("decision_node").get<NodeId>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed graph description: ") + e.what());
  }
}

json graph_to_json(const DagNetwork& dag) {
  json edges = json::array();
  for (const Edge& e : dag.edges()) edges.push_back({e.from, e.to, e.capacity_bits});
  return {{"num_nodes", dag.num_nodes()},
          {"edges", edges},
          {"sources", dag.sources()},
          {"decision_node", dag.decision_node()}};
}

Architecture architecture_from_json(const json& j) {
  try {
    Architecture a;
    for (const auto& l : j.at("layers")) {
      a.layers.push_back({l.at("out_dim").get<std::size_t>(), parse_activation(l.at("activation").get<std::string>())});
    }
    if (j.contains("latent_dim")) a.latent_dim = j["latent_dim"].get<std::size_t>();
    if (j.contains("in_dim")) a.in_dim = j["in_dim"].get<std::size_t>();
    return a;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed architecture: ") + e.what());
  }
}

json architecture_to_json(const Architecture& a) {
  json layers = json::array();
  for (const auto& l : a.layers) layers.push_back({{"out_dim", l.out_dim}, {"activation", to_string(l.activation)}});
  json j = {{"layers", layers}};
  if (a.latent_dim) j["latent_dim"] = *a.latent_dim;
  if (a.in_dim) j["in_dim"] = *a.in_dim;
  return j;
}

std::map<NodeId, Architecture> architectures_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("architecture file must map node ids to architectures");
  std::map<NodeId, Architecture> out;
  for (const auto& [key, value] : j.items()) {
    NodeId id = 0;
    try {
      id = std::stoi(key);
    } catch (const std::exception&) {
      throw ValidationError("architecture key '" + key + "' is not a node id");
    }
    out.emplace(id, architecture_from_json(value));
  }
  return out;
}

json architectures_to_json(const std::map<NodeId, Architecture>& archs) {
  json j = json::object();
  for (const auto& [id, a] : archs) j[std::to_string(id)] = architecture_to_json(a);
  return j;
}

info::JointPmf pmf_from_json(const json& j) {
  try {
    return info::JointPmf(j.at("alphabet").get<std::vector<int>>(), j.at("p").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed pmf: ") + e.what());
  }
}

json pmf_to_json(const info::JointPmf& pmf) { return {{"alphabet", pmf.alphabet()}, {"p", pmf.table()}}; }

info::Channel channel_from_json(const json& j) {
  try {
    return info::Channel(j.at("inputs").get<int>(), j.at("outputs").get<int>(), j.at("rows").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed channel: ") + e.what());
  }
}

json channel_to_json(const info::Channel& c) {
  return {{"inputs", c.inputs()}, {"outputs", c.outputs()}, {"rows", c.table()}};
}

info::ConditionalTable table_from_json(const json& j) {
  try {
    info::ConditionalTable t{j.at("given_alphabet").get<std::vector<int>>(), j.at("outputs").get<int>(),
                             j.at("p").get<std::vector<double>>()};
    t.validate("conditional table");
    return t;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed conditional table: ") + e.what());
  }
}

info::Problem problem_from_json(const json& j) {
  if (!j.contains("data") || !j.contains("channels")) throw ValidationError("problem needs 'data' and 'channels'");
  std::vector<info::Channel> channels;
  for (const auto& c : j["channels"]) channels.push_back(channel_from_json(c));
  info::Problem p{pmf_from_json(j["data"]), std::move(channels)};
  info::validate_problem(p);
  return p;
}

json problem_to_json(const info::Problem& p) {
  json channels = json::array();
  for (const auto& c : p.channels) channels.push_back(channel_to_json(c));
  return {{"data", pmf_to_json(p.data)}, {"channels", channels}};
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

namespace {

void write_f64(const fs::path& path, const std::vector<double>& values) {
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  write_text(path, bytes);
}

std::vector<double> read_f64(const fs::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != expected * 8) {
    throw ShapeError(path.string() + ": expected " + std::to_string(expected) + " parameters");
  }
  std::vector<double> values(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)])) << (8 * b);
    }
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

json net_shape(const FeedForwardNet& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"in_dim", l.in_dim()}, {"out_dim", l.out_dim()}, {"activation", to_string(l.activation)}});
  }
  return layers;
}

FeedForwardNet net_from_shape(const json& layers, const fs::path& blob) {
  std::vector<DenseLayer> out;
  for (const auto& l : layers) {
    DenseLayer d;
    const auto o = l.at("out_dim").get<std::size_t>();
    d.weights = Tensor::matrix(o, l.at("in_dim").get<std::size_t>());
    d.biases.assign(o, 0.0);
    d.activation = parse_activation(l.at("activation").get<std::string>());
    out.push_back(std::move(d));
  }
  FeedForwardNet net(std::move(out));
  net.set_flat_params(read_f64(blob, net.num_params()));
  return net;
}

const char* role_name(NodeRole r) {
  switch (r) {
    case NodeRole::source: return "source";
    case NodeRole::relay: return "relay";
    case NodeRole::decision: return "decision";
  }
  return "?";
}

NodeRole parse_role(const std::string& s) {
  if (s == "source") return NodeRole::source;
  if (s == "relay") return NodeRole::relay;
  if (s == "decision") return NodeRole::decision;
  throw ValidationError("unknown node role '" + s + "'");
}

}  // namespace

void save_checkpoint(const InlModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  json nodes = json::array();
  for (const auto& [id, nm] : model.nodes()) {
    json n = {{"id", id}, {"role", role_name(nm.role)}, {"layers", net_shape(nm.net)}};
    if (nm.head) n["latent_dim"] = nm.head->latent_dim;
    nodes.push_back(n);
    write_f64(dir / ("node_" + std::to_string(id) + ".bin"), nm.net.flat_params());
  }
  json aux = json::array();
  for (const auto& [id, net] : model.aux()) {
    aux.push_back({{"source", id}, {"layers", net_shape(net)}});
    write_f64(dir / ("aux_" + std::to_string(id) + ".bin"), net.flat_params());
  }
  json input_dims = json::object();
  for (const auto& [id, d] : model.input_dims()) input_dims[std::to_string(id)] = d;
  write_json(dir / "model.json",
             {{"graph", graph_to_json(model.dag())}, {"input_dims", input_dims}, {"nodes", nodes}, {"aux", aux}});
}

InlModel load_checkpoint(const fs::path& dir) {
  const json j = read_json(dir / "model.json");
  try {
    DagNetwork dag = graph_from_json(j.at("graph"));
    std::map<NodeId, std::size_t> input_dims;
    for (const auto& [k, v] : j.at("input_dims").items()) input_dims[std::stoi(k)] = v.get<std::size_t>();
    std::map<NodeId, NodeModel> nodes;
    for (const auto& n : j.at("nodes")) {
      NodeModel nm;
      nm.id = n.at("id").get<NodeId>();
      nm.role = parse_role(n.at("role").get<std::string>());
      nm.net = net_from_shape(n.at("layers"), dir / ("node_" + std::to_string(nm.id) + ".bin"));
      if (n.contains("latent_dim")) nm.head = GaussianHead{n["latent_dim"].get<std::size_t>()};
      nodes.emplace(nm.id, std::move(nm));
    }
    std::map<NodeId, FeedForwardNet> aux;
    for (const auto& a : j.at("aux")) {
      const auto id = a.at("source").get<NodeId>();
      aux.emplace(id, net_from_shape(a.at("layers"), dir / ("aux_" + std::to_string(id) + ".bin")));
    }
    return InlModel(std::move(dag), std::move(nodes), std::move(input_dims), std::move(aux));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << kMetricsHeader << "\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%.10f,%.6f,%llu\n", r.epoch, r.split.c_str(), r.loss, r.accuracy,
                  static_cast<unsigned long long>(r.cumulative_bits));
    out << buf;
  }
  return out.str();
}

std::string dataset_csv(const Dataset& data) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [j, v] : data.views) {
    for (std::size_t k = 0; k < v.cols(); ++k) {
      out << (first ? "" : ",") << "view" << j << "_" << k;
      first = false;
    }
  }
  out << (first ? "" : ",") << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (const auto& [j, v] : data.views) {
      for (double x : v.row(i)) {
        std::snprintf(buf, sizeof buf, "%.17g,", x);
        out << buf;
      }
    }
    out << data.labels[i] << "\n";
  }
  return out.str();
}

}  // namespace inl::io
