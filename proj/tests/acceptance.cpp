// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "inl/baselines.hpp"
#include "inl/experiment.hpp"
#include "inl/verify/suites.hpp"

#ifndef INL_CLI_PATH
#define INL_CLI_PATH "inl"
#endif

namespace fs = std::filesystem;
using namespace inl;
using namespace inl::verify;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string run_capture(const std::string& cmd, int* status) {
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) {
    *status = -1;
    return out;
  }
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  *status = pclose(p);
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string summarize(const std::vector<CheckResult>& rs) {
  std::string s;
  for (const auto& r : rs) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s%s n=%zu max=%.2e fail=%zu", s.empty() ? "" : "; ", r.name.c_str(), r.instances,
                  r.max_error, r.failures.size());
    s += buf;
    if (!r.failures.empty()) s += " [" + r.failures.front() + "]";
  }
  return s;
}

bool all_pass(const std::vector<CheckResult>& rs) {
  for (const auto& r : rs)
    if (!r.passed()) return false;
  return true;
}

Outcome c1_table() {
  int status = 0;
  const std::string csv = run_capture(std::string(INL_CLI_PATH) + " bandwidth-table --format csv", &status);
  if (status != 0) return {false, "bandwidth-table exited with " + std::to_string(status)};
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::map<std::string, double>> cells;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string x;
    while (std::getline(ls, x, ',')) f.push_back(x);
    if (f.size() != 10) return {false, "malformed row: " + line};
    cells[f[0] + " q=" + f[1]] = {{"fl", std::stod(f[7])}, {"sl", std::stod(f[8])}, {"inl", std::stod(f[9])}};
  }
  int matched = 0;
  std::string bad;
  for (const auto& c : published_table()) {
    const auto it = cells.find(c.row);
    if (it != cells.end() && std::abs(it->second.at(c.scheme) - c.shown) <= c.half_unit) {
      ++matched;
    } else {
      bad += " " + c.row + "/" + c.scheme;
    }
  }
  return {matched == 12, std::to_string(matched) + "/12 cells within displayed rounding" + bad};
}

Outcome c2_split() {
  std::vector<CheckResult> rs;
  for (int j = 1; j <= 3; ++j) rs.push_back(check_split_equivalence("star", j, 50, 1));
  rs.push_back(check_split_equivalence("five-node", 3, 50, 1));
  return {all_pass(rs), summarize(rs)};
}

Outcome c3_fd() {
  std::vector<CheckResult> rs{check_fd_nets(100, 1), check_fd_objective(20, 1)};
  return {all_pass(rs), summarize(rs)};
}

Outcome c4_lemmas() {
  std::vector<CheckResult> rs{check_lemma1(1000, 1), check_lemma2_optimal(1000, 1), check_lemma2_perturbed(100, 100, 1)};
  return {all_pass(rs), summarize(rs)};
}

Outcome c5_regions() {
  std::vector<CheckResult> rs{check_fme_equivalence(200, 1), check_theorem1_monotone(200, 1)};
  return {all_pass(rs), summarize(rs)};
}

Outcome c6_prop1() {
  std::vector<CheckResult> rs{check_prop1({0.0, 0.1, 1.0, 10.0}, 0.05)};
  return {all_pass(rs), summarize(rs)};
}

Outcome c7_training() {
  RunConfig cfg;  // default synthetic 5-view task
  cfg.scheme = Scheme::inl;
  const RunSummary inl = run_experiment(cfg);
  cfg.scheme = Scheme::fl;
  const RunSummary fl = run_experiment(cfg);
  const bool acc = inl.best_test_accuracy >= 0.90;
  const bool order = inl.bits_to_target && (!fl.bits_to_target || *inl.bits_to_target < *fl.bits_to_target);
  char buf[256];
  std::snprintf(buf, sizeof buf, "inl best acc %.4f; bits to 85%%: inl %s, fl %s", inl.best_test_accuracy,
                inl.bits_to_target ? std::to_string(*inl.bits_to_target).c_str() : "never",
                fl.bits_to_target ? std::to_string(*fl.bits_to_target).c_str() : "never");
  return {acc && order, buf};
}

Outcome c8_determinism() {
  const fs::path root = fs::temp_directory_path() / "inl-acceptance-determinism";
  fs::remove_all(root);
  const std::string cli = INL_CLI_PATH;
  int st = 0;
  std::string detail;
  bool ok = true;
  for (const char* scheme : {"inl", "fl", "sl"}) {
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = root / (std::string(scheme) + std::to_string(rep));
      run_capture(cli + " train --scheme " + scheme + " --seed 7 --epochs 3 --deterministic --out " + out.string(), &st);
      if (st != 0) {
        ok = false;
        detail += std::string(" train ") + scheme + " failed;";
      }
    }
    const bool same = slurp(root / (std::string(scheme) + "0") / "metrics.csv") ==
                      slurp(root / (std::string(scheme) + "1") / "metrics.csv");
    ok = ok && same;
    detail += std::string(" train ") + scheme + (same ? " identical;" : " DIFFERENT;");
  }
  for (const char* suite : {"gradients", "bandwidth"}) {
    int s1 = 0, s2 = 0;
    const std::string cmd = cli + " verify " + suite + " --seed 7 --deterministic --quiet";
    const std::string a = run_capture(cmd, &s1), b = run_capture(cmd, &s2);
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += std::string(" verify ") + suite + (same ? " identical;" : " DIFFERENT;");
  }
  fs::remove_all(root);
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 bandwidth table reproduction", c1_table},
      {"2 split-backprop equivalence", c2_split},
      {"3 finite-difference gradients", c3_fd},
      {"4 lemma 1 / lemma 2 bounds", c4_lemmas},
      {"5 region consistency", c5_regions},
      {"6 proposition 1 boundary", c6_prop1},
      {"7 end-to-end training", c7_training},
      {"8 determinism", c8_determinism},
  };
  const double limits[] = {1, 30, 60, 300, 600, 300, 300, 1e9};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > limits[i]) {
      o.pass = false;
      o.detail += "; over the time budget";
    }
    std::printf("%s criterion %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
