#pragma once

// Synthetic multi-view data and the experiment runner behind `inl train`.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "inl/io.hpp"
#include "inl/protocol.hpp"

namespace inl {

// Each class has a fixed N(0, I) prototype; view j of a sample is the
// prototype of its label plus N(0, sigma_j^2 I) noise. Views go to source
// ids 1..J.
struct SyntheticSpec {
  std::size_t num_classes = 4;
  std::size_t feature_dim = 16;
  std::size_t num_views = 5;
  std::vector<double> noise_stds{0.4, 1.0, 2.0, 3.0, 4.0};
  std::size_t train_size = 4000;
  std::size_t test_size = 1000;
  std::uint64_t seed = 1;
};

void validate(const SyntheticSpec& spec);

struct SyntheticData {
  Dataset train;
  Dataset test;
  std::vector<std::vector<double>> prototypes;
};

// Views are assigned to `source_ids` in ascending order (default 1..J).
SyntheticData gen_dataset(const SyntheticSpec& spec, const std::vector<NodeId>& source_ids = {});

enum class Scheme { inl, fl, sl };
Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme s);

// Sources: hidden-relu x2 then a 2d Gaussian head; relays: hidden-relu then
// a d-wide linear layer; decision node: hidden-relu then softmax.
std::map<NodeId, Architecture> default_architectures(const DagNetwork& dag, std::size_t num_classes,
                                                     std::size_t hidden = 64, std::size_t latent_dim = 4);

struct RunConfig {
  Scheme scheme = Scheme::inl;
  std::optional<std::filesystem::path> graph_file;  // default: star over the views
  std::optional<std::filesystem::path> arch_file;   // default: default_architectures
  TrainConfig train{1e-3, 0.05, 32, 50, 1, false, 32, false, {}};
  SyntheticSpec data;
  std::filesystem::path output_dir = "out";
  std::optional<std::size_t> clients;  // FL/SL; default: number of views
  std::size_t hidden = 64;
  std::size_t latent_dim = 4;
  double accuracy_target = 0.85;
};

// Reads a JSON config. Keys mirror RunConfig; the INL_OUTPUT_DIR environment
// variable, when set, replaces output_dir.
RunConfig run_config_from_json(const io::json& j);
io::json run_config_to_json(const RunConfig& cfg);
void apply_env_overrides(RunConfig& cfg);

struct RunSummary {
  Scheme scheme = Scheme::inl;
  TrainResult result;
  double final_test_accuracy = 0.0;
  double best_test_accuracy = 0.0;
  std::uint64_t total_bits = 0;
  std::optional<std::uint64_t> bits_to_target;  // first test row at or above the target
  std::optional<std::size_t> epochs_to_target;
  std::size_t num_params = 0;
  double wall_seconds = 0.0;
};

// Generates the data, builds the model, trains under the chosen scheme.
RunSummary run_experiment(const RunConfig& cfg);
io::json summary_to_json(const RunSummary& s, const RunConfig& cfg);
// run_experiment plus metrics.csv and summary.json under output_dir.
RunSummary run(const RunConfig& cfg);

}  // namespace inl
