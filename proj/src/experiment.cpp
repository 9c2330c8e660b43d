#include "inl/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>

#include "inl/baselines.hpp"
#include "inl/errors.hpp"

namespace inl {

void validate(const SyntheticSpec& spec) {
  if (spec.num_classes < 2) throw ValidationError("need at least two classes");
  if (spec.feature_dim == 0 || spec.num_views == 0) throw ValidationError("feature_dim and num_views must be positive");
  if (spec.noise_stds.size() != spec.num_views) throw ValidationError("need one noise std per view");
  for (double s : spec.noise_stds) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("noise stds must be non-negative");
  }
  if (spec.train_size == 0 || spec.test_size == 0) throw ValidationError("split sizes must be positive");
}

namespace {

Dataset draw_split(const SyntheticSpec& spec, const std::vector<std::vector<double>>& protos,
                   const std::vector<NodeId>& ids, std::size_t n, const char* split) {
  Dataset d;
  d.num_classes = spec.num_classes;
  Rng label_rng = make_rng(spec.seed, std::string("labels-") + split);
  d.labels.resize(n);
  for (auto& y : d.labels) y = static_cast<int>(label_rng() % spec.num_classes);
  for (std::size_t j = 0; j < spec.num_views; ++j) {
    Rng noise_rng = make_rng(spec.seed, std::string("view-noise-") + split, j);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor v = Tensor::matrix(n, spec.feature_dim);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& proto = protos[static_cast<std::size_t>(d.labels[i])];
      auto row = v.row(i);
      for (std::size_t k = 0; k < spec.feature_dim; ++k) {
        const double z = normal(noise_rng);
        row[k] = spec.noise_stds[j] == 0.0 ? proto[k] : proto[k] + spec.noise_stds[j] * z;
      }
    }
    d.views.emplace(ids[j], std::move(v));
  }
  return d;
}

}  // namespace

SyntheticData gen_dataset(const SyntheticSpec& spec, const std::vector<NodeId>& source_ids) {
  validate(spec);
  std::vector<NodeId> ids = source_ids;
  if (ids.empty()) {
    for (std::size_t j = 0; j < spec.num_views; ++j) ids.push_back(static_cast<NodeId>(j + 1));
  }
  if (ids.size() != spec.num_views) throw ValidationError("one source id per view required");

  SyntheticData out;
  Rng proto_rng = make_rng(spec.seed, "prototypes");
  std::normal_distribution<double> normal(0.0, 1.0);
  out.prototypes.assign(spec.num_classes, std::vector<double>(spec.feature_dim));
  for (auto& p : out.prototypes) {
    for (double& v : p) v = normal(proto_rng);
  }
  out.train = draw_split(spec, out.prototypes, ids, spec.train_size, "train");
  out.test = draw_split(spec, out.prototypes, ids, spec.test_size, "test");
  return out;
}

Scheme parse_scheme(const std::string& name) {
  if (name == "inl") return Scheme::inl;
  if (name == "fl") return Scheme::fl;
  if (name == "sl") return Scheme::sl;
  throw ValidationError("unknown scheme '" + name + "' (expected inl, fl or sl)");
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::inl: return "inl";
    case Scheme::fl: return "fl";
    case Scheme::sl: return "sl";
  }
  return "?";
}

std::map<NodeId, Architecture> default_architectures(const DagNetwork& dag, std::size_t num_classes,
                                                     std::size_t hidden, std::size_t latent_dim) {
  std::map<NodeId, Architecture> archs;
  for (NodeId n : dag.active_nodes()) {
    Architecture a;
    if (n == dag.decision_node()) {
      a.layers = {{hidden, Activation::relu}, {num_classes, Activation::softmax}};
    } else if (dag.is_source(n)) {
      a.layers = {{hidden, Activation::relu}, {hidden, Activation::relu}, {2 * latent_dim, Activation::linear}};
      a.latent_dim = latent_dim;
    } else {
      a.layers = {{hidden, Activation::relu}, {latent_dim, Activation::linear}};
    }
    archs.emplace(n, std::move(a));
  }
  return archs;
}

RunConfig run_config_from_json(const io::json& j) {
  RunConfig c;
  try {
    if (j.contains("scheme")) c.scheme = parse_scheme(j["scheme"].get<std::string>());
    if (j.contains("graph")) c.graph_file = j["graph"].get<std::string>();
    if (j.contains("architectures")) c.arch_file = j["architectures"].get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("clients")) c.clients = j["clients"].get<std::size_t>();
    c.hidden = j.value("hidden", c.hidden);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.accuracy_target = j.value("accuracy_target", c.accuracy_target);

    auto& t = c.train;
    t.s = j.value("s", t.s);
    t.eta = j.value("eta", t.eta);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.epochs = j.value("epochs", t.epochs);
    t.seed = j.value("seed", t.seed);
    t.deterministic_latent = j.value("deterministic_latent", t.deterministic_latent);
    t.bits_per_value = j.value("bits_per_value", t.bits_per_value);
    t.parallel = j.value("parallel", t.parallel);
    if (j.contains("ratio_coef")) {
      for (const auto& [k, v] : j["ratio_coef"].items()) t.ratio_coef_override[std::stoi(k)] = v.get<double>();
    }

    if (j.contains("data")) {
      const auto& d = j["data"];
      auto& s = c.data;
      s.num_classes = d.value("num_classes", s.num_classes);
      s.feature_dim = d.value("feature_dim", s.feature_dim);
      s.noise_stds = d.value("noise_stds", s.noise_stds);
      s.num_views = d.value("num_views", s.noise_stds.size());
      s.train_size = d.value("train_size", s.train_size);
      s.test_size = d.value("test_size", s.test_size);
      s.seed = d.value("seed", t.seed);
    } else {
      c.data.seed = t.seed;
    }
  } catch (const io::json::exception& e) {
    throw ValidationError(std::string("malformed run config: ") + e.what());
  }
  if (c.train.s < 0) throw ValidationError("s must be non-negative");
  if (!(c.train.eta > 0)) throw ValidationError("eta must be positive");
  if (c.train.batch_size < 1) throw ValidationError("batch size must be at least 1");
  validate(c.data);
  return c;
}

io::json run_config_to_json(const RunConfig& c) {
  io::json j = {{"scheme", to_string(c.scheme)},
                {"output_dir", c.output_dir.string()},
                {"hidden", c.hidden},
                {"latent_dim", c.latent_dim},
                {"accuracy_target", c.accuracy_target},
                {"s", c.train.s},
                {"eta", c.train.eta},
                {"batch_size", c.train.batch_size},
                {"epochs", c.train.epochs},
                {"seed", c.train.seed},
                {"deterministic_latent", c.train.deterministic_latent},
                {"bits_per_value", c.train.bits_per_value},
                {"parallel", c.train.parallel},
                {"data",
                 {{"num_classes", c.data.num_classes},
                  {"feature_dim", c.data.feature_dim},
                  {"num_views", c.data.num_views},
                  {"noise_stds", c.data.noise_stds},
                  {"train_size", c.data.train_size},
                  {"test_size", c.data.test_size},
                  {"seed", c.data.seed}}}};
  if (c.graph_file) j["graph"] = c.graph_file->string();
  if (c.arch_file) j["architectures"] = c.arch_file->string();
  if (c.clients) j["clients"] = *c.clients;
  return j;
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* dir = std::getenv("INL_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
}

RunSummary run_experiment(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  validate(cfg.data);
  const DagNetwork dag = cfg.graph_file ? io::graph_from_json(io::read_json(*cfg.graph_file))
                                        : make_star(static_cast<int>(cfg.data.num_views));
  const std::vector<NodeId> ids(dag.sources().begin(), dag.sources().end());
  const SyntheticData data = gen_dataset(cfg.data, ids);

  std::map<NodeId, std::size_t> input_dims;
  for (NodeId j : ids) input_dims[j] = cfg.data.feature_dim;
  const auto archs = cfg.arch_file ? io::architectures_from_json(io::read_json(*cfg.arch_file))
                                   : default_architectures(dag, cfg.data.num_classes, cfg.hidden, cfg.latent_dim);
  const LossKind kind = infer_loss_kind(dag);
  const bool with_aux = cfg.scheme == Scheme::inl && kind == LossKind::star;
  InlModel model = build_model(dag, archs, input_dims, cfg.data.num_classes, cfg.train.seed, with_aux);

  RunSummary s;
  s.scheme = cfg.scheme;
  s.num_params = model.num_params();
  const std::size_t clients = cfg.clients.value_or(cfg.data.num_views);
  switch (cfg.scheme) {
    case Scheme::inl:
      s.result = train(model, data.train, &data.test, cfg.train, kind);
      break;
    case Scheme::fl:
      s.result = train_fl(model, data.train, &data.test, cfg.train, clients);
      break;
    case Scheme::sl:
      s.result = train_sl(model, data.train, &data.test, cfg.train, clients);
      break;
  }
  s.total_bits = s.result.total_bits;
  for (const auto& row : s.result.rows) {
    if (row.split != "test") continue;
    s.final_test_accuracy = row.accuracy;
    s.best_test_accuracy = std::max(s.best_test_accuracy, row.accuracy);
    if (!s.bits_to_target && row.accuracy >= cfg.accuracy_target) {
      s.bits_to_target = row.cumulative_bits;
      s.epochs_to_target = row.epoch;
    }
  }
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

io::json summary_to_json(const RunSummary& s, const RunConfig& cfg) {
  io::json j = {{"scheme", to_string(s.scheme)},
                {"final_test_accuracy", s.final_test_accuracy},
                {"best_test_accuracy", s.best_test_accuracy},
                {"total_bits", s.total_bits},
                {"num_params", s.num_params},
                {"accuracy_target", cfg.accuracy_target},
                {"wall_seconds", s.wall_seconds},
                {"config", run_config_to_json(cfg)}};
  j["bits_to_target"] = s.bits_to_target ? io::json(*s.bits_to_target) : io::json(nullptr);
  j["epochs_to_target"] = s.epochs_to_target ? io::json(*s.epochs_to_target) : io::json(nullptr);
  return j;
}

RunSummary run(const RunConfig& cfg) {
  RunSummary s = run_experiment(cfg);
  io::write_text(cfg.output_dir / "metrics.csv", io::metrics_csv(s.result.rows));
  io::write_json(cfg.output_dir / "summary.json", summary_to_json(s, cfg));
  return s;
}

}  // namespace inl
