#pragma once

// Seeded property suites behind `inl verify`. Every check reports how many
// instances it ran, the worst error seen, and the seeds of failing instances.

#include <cstdint>
#include <string>
#include <vector>

#include "inl/baselines.hpp"
#include "inl/info.hpp"

namespace inl::verify {

struct CheckResult {
  std::string suite;
  std::string name;
  std::size_t instances = 0;
  double max_error = 0.0;  // meaning depends on the check; 0 when not applicable
  double tolerance = 0.0;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

struct SuiteOptions {
  std::uint64_t seed = 1;
  // Multiplies the default instance counts; 1 gives the documented sizes.
  double scale = 1.0;
};

// Split backprop vs the tape oracle, s = 0 and zero noise. topology: "star"
// (with num_sources) or "five-node".
CheckResult check_split_equivalence(const std::string& topology, int num_sources, std::size_t count,
                                    std::uint64_t seed);
// Same with s > 0 and sampled noise.
CheckResult check_split_equivalence_stochastic(std::size_t count, std::uint64_t seed);
CheckResult check_fd_nets(std::size_t count, std::uint64_t seed);
CheckResult check_fd_objective(std::size_t count, std::uint64_t seed);
// Sub-vector conservation, bits symmetry, relay gradient, parallel == serial.
CheckResult check_protocol_invariants(std::size_t count, std::uint64_t seed);
CheckResult check_kl_monte_carlo(std::uint64_t seed);
CheckResult check_training_determinism(std::uint64_t seed);

CheckResult check_lemma1(std::size_t count, std::uint64_t seed);
// Optimal-Q gap over `count` instances; `perturbed_instances` of them also get
// `perturbations` random Q sets each.
CheckResult check_lemma2_optimal(std::size_t count, std::uint64_t seed);
CheckResult check_lemma2_perturbed(std::size_t instances, std::size_t perturbations, std::uint64_t seed);
CheckResult check_entropy_identities(std::size_t count, std::uint64_t seed);
CheckResult check_lagrangian_monotone(std::size_t count, std::uint64_t seed);

CheckResult check_fme_equivalence(std::size_t count, std::uint64_t seed, double step = 1e-3);
CheckResult check_theorem1_monotone(std::size_t count, std::uint64_t seed);
CheckResult check_five_node_grid(std::size_t count, std::uint64_t seed);

// Binary toy: Y ~ Bern(1/2), X_j = Y xor Bern(0.1 j).
info::JointPmf prop1_toy_pmf();
CheckResult check_prop1(const std::vector<double>& s_values, double step = 0.05);

// Paper's displayed values for the twelve cells.
struct PublishedCell {
  std::string row;
  std::string scheme;  // fl, sl, inl
  double shown = 0.0;
  double half_unit = 0.0;  // half of the last displayed digit
};
std::vector<PublishedCell> published_table();
CheckResult check_bandwidth_table();
CheckResult check_bandwidth_formulas(std::uint64_t seed);
CheckResult check_fl_aggregation(std::uint64_t seed);
CheckResult check_sl_matches_inl(std::uint64_t seed);

std::vector<std::string> suite_names();
// "gradients", "bounds", "regions", "bandwidth" or "all".
std::vector<CheckResult> run_suite(const std::string& name, const SuiteOptions& options = {});

std::string report_csv(const std::vector<CheckResult>& results);
std::string report_text(const std::vector<CheckResult>& results);

}  // namespace inl::verify
