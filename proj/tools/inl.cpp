// inl: command-line driver for in-network learning experiments, the
// bandwidth table, region queries and the verification suites.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "inl/baselines.hpp"
#include "inl/errors.hpp"
#include "inl/experiment.hpp"
#include "inl/info.hpp"
#include "inl/io.hpp"
#include "inl/protocol.hpp"
#include "inl/verify/suites.hpp"

namespace fs = std::filesystem;
using inl::io::json;

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw inl::ValidationError("not a number: '" + item + "'");
    }
  }
  return out;
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    inl::io::write_json(out, j);
  }
}

json violations_json(const inl::info::Verdict& v) {
  json arr = json::array();
  for (const auto& x : v.violations) {
    arr.push_back({{"constraint", x.constraint}, {"subset", x.subset}, {"lhs", x.lhs}, {"rhs", x.rhs}});
  }
  return arr;
}

json terms_json(const inl::info::FiveNodeTerms& t) {
  return {{"a1", t.a1},   {"a2", t.a2},   {"a3", t.a3},     {"a12", t.a12},
          {"a13", t.a13}, {"a23", t.a23}, {"a123", t.a123}, {"relevance", t.relevance}};
}

struct TrainArgs {
  std::string scheme;
  std::string config;
  std::string out;
  std::string graph;
  std::string arch;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> clients;
  std::optional<double> s;
  std::optional<double> eta;
  std::optional<double> target;
  bool deterministic = false;
  bool parallel = false;
  bool save_model = false;
};

int cmd_train(const TrainArgs& a) {
  inl::RunConfig cfg = a.config.empty() ? inl::RunConfig{} : inl::run_config_from_json(inl::io::read_json(a.config));
  if (!a.scheme.empty()) cfg.scheme = inl::parse_scheme(a.scheme);
  if (a.seed) {
    cfg.train.seed = *a.seed;
    cfg.data.seed = *a.seed;
  }
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.batch) cfg.train.batch_size = *a.batch;
  if (a.clients) cfg.clients = *a.clients;
  if (a.s) cfg.train.s = *a.s;
  if (a.eta) cfg.train.eta = *a.eta;
  if (a.target) cfg.accuracy_target = *a.target;
  if (!a.graph.empty()) cfg.graph_file = a.graph;
  if (!a.arch.empty()) cfg.arch_file = a.arch;
  cfg.train.parallel = a.parallel && !a.deterministic;
  inl::apply_env_overrides(cfg);
  if (!a.out.empty()) cfg.output_dir = a.out;

  const inl::RunSummary s = inl::run(cfg);
  std::printf("scheme=%s params=%zu final_test_accuracy=%.4f total_bits=%llu", inl::to_string(s.scheme).c_str(),
              s.num_params, s.final_test_accuracy, static_cast<unsigned long long>(s.total_bits));
  if (s.bits_to_target) {
    std::printf(" bits_to_%.2f=%llu (epoch %zu)", cfg.accuracy_target,
                static_cast<unsigned long long>(*s.bits_to_target), *s.epochs_to_target);
  }
  std::printf("\nwrote %s\n", (cfg.output_dir / "metrics.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-network learning: training, bandwidth accounting and region checks"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write a synthetic multi-view dataset as CSV");
  std::string gen_config, gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--config", gen_config, "run config JSON (its data section is used)");
  gen->add_option("--seed", gen_seed, "data seed");
  gen->add_option("--out", gen_out, "output directory (default: $INL_OUTPUT_DIR or 'data')");

  // train
  auto* tr = app.add_subcommand("train", "train with INL, FL or SL and write metrics.csv and summary.json");
  TrainArgs ta;
  tr->add_option("--scheme", ta.scheme, "inl, fl or sl")->check(CLI::IsMember({"inl", "fl", "sl"}));
  tr->add_option("--config", ta.config, "run config JSON");
  tr->add_option("--out", ta.out, "output directory (overrides $INL_OUTPUT_DIR)");
  tr->add_option("--graph", ta.graph, "graph JSON");
  tr->add_option("--arch", ta.arch, "architectures JSON");
  tr->add_option("--seed", ta.seed, "seed for weights, batches, noise and data");
  tr->add_option("--epochs", ta.epochs);
  tr->add_option("--batch-size", ta.batch);
  tr->add_option("--clients", ta.clients, "FL/SL client count");
  tr->add_option("--s", ta.s, "regularisation weight s");
  tr->add_option("--eta", ta.eta, "learning rate");
  tr->add_option("--target", ta.target, "accuracy target for bits_to_target");
  tr->add_flag("--parallel", ta.parallel, "process independent nodes on threads");
  tr->add_flag("--deterministic", ta.deterministic, "force single-threaded mode");

  // bandwidth-table
  auto* bw = app.add_subcommand("bandwidth-table", "per-epoch bandwidth of FL, SL and INL");
  std::string bw_format = "text", bw_csv;
  bw->add_option("--format", bw_format)->check(CLI::IsMember({"text", "csv"}));
  bw->add_option("--csv", bw_csv, "also write the CSV table to this file");

  // region
  auto* rg = app.add_subcommand("region", "feasibility and bound queries on small discrete problems");
  rg->require_subcommand(1);
  std::string problem_file, graph_file, rates_text, caps_text, out_file, combiner_file, pmf_file, s_text = "0,0.1,1,10";
  double capacity = 0.0, s_value = 1.0, step = 0.05, fme_step = 0.0;

  auto* rf = rg->add_subcommand("feasible", "check rates against the graph, or the five-node region for given capacities");
  rf->add_option("--problem", problem_file, "problem JSON")->required();
  rf->add_option("--graph", graph_file, "graph JSON (with --rates)");
  rf->add_option("--rates", rates_text, "comma-separated R_j for each source");
  rf->add_option("--caps", caps_text, "five-node capacities C15,C24,C34,C45");
  rf->add_option("--out", out_file);

  auto* rs = rg->add_subcommand("sum", "five-node sum-capacity threshold and verdict");
  rs->add_option("--problem", problem_file)->required();
  rs->add_option("--capacity", capacity, "total capacity C15+C24+C34+C45")->required();
  rs->add_option("--fme-step", fme_step, "also grid-search capacity splits at this rate step");
  rs->add_option("--out", out_file);

  auto* rp = rg->add_subcommand("prop1", "relevance/complexity boundary points by channel enumeration");
  rp->add_option("--pmf", pmf_file, "data pmf over X1,X2,X3,Y (default: binary toy)");
  rp->add_option("--s", s_text, "comma-separated s values");
  rp->add_option("--step", step, "simplex grid step");
  rp->add_option("--out", out_file);

  auto* r1 = rg->add_subcommand("lemma1", "L_s against L_s^low for a combiner");
  auto* r2 = rg->add_subcommand("lemma2", "variational bound gap at the optimal Q");
  for (auto* sc : {r1, r2}) {
    sc->add_option("--problem", problem_file)->required();
    sc->add_option("--combiner", combiner_file, "table P(U4 | U2, U3)")->required();
    sc->add_option("--s", s_value);
    sc->add_option("--out", out_file);
  }

  // verify
  auto* vf = app.add_subcommand("verify", "run seeded property suites; exits 1 on any failure");
  std::string suite = "all", report_file;
  inl::verify::SuiteOptions vopts;
  bool quiet = false;
  vf->add_option("suite", suite, "gradients, bounds, regions, bandwidth or all")
      ->check(CLI::IsMember(inl::verify::suite_names()));
  vf->add_option("--seed", vopts.seed);
  vf->add_option("--scale", vopts.scale, "multiplies instance counts")->check(CLI::PositiveNumber);
  vf->add_option("--out", report_file, "write the CSV report here instead of stdout");
  vf->add_flag("--quiet", quiet, "no per-check text on stderr");
  bool verify_det = false;
  vf->add_flag("--deterministic", verify_det, "accepted for symmetry; verify is always single-threaded");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      inl::RunConfig cfg = gen_config.empty() ? inl::RunConfig{} : inl::run_config_from_json(inl::io::read_json(gen_config));
      if (gen_seed) cfg.data.seed = *gen_seed;
      fs::path dir = "data";
      if (const char* env = std::getenv("INL_OUTPUT_DIR"); env && *env) dir = env;
      if (!gen_out.empty()) dir = gen_out;
      const auto data = inl::gen_dataset(cfg.data);
      inl::io::write_text(dir / "train.csv", inl::io::dataset_csv(data.train));
      inl::io::write_text(dir / "test.csv", inl::io::dataset_csv(data.test));
      std::printf("wrote %zu train and %zu test rows to %s\n", data.train.size(), data.test.size(), dir.string().c_str());
      return 0;
    }
    if (*tr) return cmd_train(ta);
    if (*bw) {
      const auto rows = inl::reference_bandwidth_table();
      std::cout << (bw_format == "csv" ? inl::bandwidth_table_csv(rows) : inl::bandwidth_table_text(rows));
      if (!bw_csv.empty()) inl::io::write_text(bw_csv, inl::bandwidth_table_csv(rows));
      return 0;
    }
    if (*rf) {
      const auto problem = inl::io::problem_from_json(inl::io::read_json(problem_file));
      json j;
      if (!caps_text.empty()) {
        const auto c = parse_list(caps_text);
        if (c.size() != 4) throw inl::ValidationError("--caps needs four values");
        const auto terms = inl::info::five_node_terms(problem);
        const auto v = inl::info::five_node_region_check(terms, {c[0], c[1], c[2], c[3]});
        j = {{"feasible", v.feasible}, {"reasons", v.reasons}, {"terms", terms_json(terms)}};
        j["witness"] = v.witness ? json(*v.witness) : json(nullptr);
      } else {
        if (graph_file.empty() || rates_text.empty()) throw inl::ValidationError("give --graph and --rates, or --caps");
        const auto dag = inl::io::graph_from_json(inl::io::read_json(graph_file));
        const auto v = inl::info::theorem1_feasible(problem, dag, {parse_list(rates_text)});
        j = {{"feasible", v.feasible},
             {"violations", violations_json(v)},
             {"relevance", inl::info::achievable_relevance(problem)}};
      }
      emit(j, out_file);
      return 0;
    }
    if (*rs) {
      const auto problem = inl::io::problem_from_json(inl::io::read_json(problem_file));
      const auto v = inl::info::sum_region_check(problem, capacity);
      json j = {{"feasible", v.feasible}, {"threshold", v.threshold}, {"relevance", v.relevance}, {"capacity", capacity}};
      if (fme_step > 0) {
        const auto f = inl::info::fme_equivalence_test(problem, fme_step);
        j["fme"] = {{"passes", f.passes},
                    {"grid_min_sum", f.grid_min_sum},
                    {"tolerance", f.tolerance},
                    {"split", {f.grid_split.c15, f.grid_split.c24, f.grid_split.c34, f.grid_split.c45}},
                    {"detail", f.detail}};
      }
      emit(j, out_file);
      return 0;
    }
    if (*rp) {
      const auto pmf = pmf_file.empty() ? inl::verify::prop1_toy_pmf() : inl::io::pmf_from_json(inl::io::read_json(pmf_file));
      const auto svals = parse_list(s_text);
      json arr = json::array();
      for (const auto& p : inl::info::prop1_points(pmf, svals, step)) {
        json ch = json::array();
        for (const auto& c : p.channels) ch.push_back(inl::io::channel_to_json(c));
        arr.push_back({{"s", p.s}, {"relevance", p.delta}, {"complexity", p.c_s}, {"l_s", p.l_s}, {"channels", ch}});
      }
      emit({{"step", step}, {"h_y", inl::info::entropy(pmf, {pmf.num_vars() - 1})}, {"points", arr}}, out_file);
      return 0;
    }
    if (*r1 || *r2) {
      const auto problem = inl::io::problem_from_json(inl::io::read_json(problem_file));
      const auto comb = inl::io::table_from_json(inl::io::read_json(combiner_file));
      json j;
      if (*r1) {
        const auto rep = inl::info::lower_bound_check(problem, comb, s_value);
        j = {{"s", s_value}, {"l_s", rep.l_s}, {"l_s_low", rep.l_s_low}, {"holds", rep.holds}};
      } else {
        const auto q = inl::info::optimal_variational_set(problem, comb);
        const auto rep = inl::info::variational_bound_check(problem, comb, q, s_value);
        j = {{"s", s_value}, {"l_low", rep.l_low}, {"l_vlow", rep.l_vlow}, {"gap", rep.gap}};
      }
      emit(j, out_file);
      return 0;
    }
    if (*vf) {
      const auto results = inl::verify::run_suite(suite, vopts);
      const std::string csv = inl::verify::report_csv(results);
      if (report_file.empty()) {
        std::cout << csv;
      } else {
        inl::io::write_text(report_file, csv);
      }
      if (!quiet) std::cerr << inl::verify::report_text(results);
      bool ok = true;
      for (const auto& r : results) ok = ok && r.passed();
      return ok ? 0 : 1;
    }
  } catch (const inl::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
