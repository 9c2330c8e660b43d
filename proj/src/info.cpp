#include "inl/info.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "inl/errors.hpp"

namespace inl::info {

namespace {

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

std::size_t table_size(const std::vector<int>& alphabet) {
  std::size_t n = 1;
  for (int a : alphabet) n *= static_cast<std::size_t>(a);
  return n;
}

void check_row_stochastic(std::span<const double> row, const char* what) {
  double sum = 0.0;
  for (double v : row) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(std::string(what) + ": entries must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ValidationError(std::string(what) + ": row does not sum to 1");
}

VarSet set_union(const VarSet& a, const VarSet& b) {
  VarSet out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void require_disjoint(std::initializer_list<const VarSet*> sets) {
  std::set<int> seen;
  for (const VarSet* s : sets) {
    for (int v : *s) {
      if (!seen.insert(v).second) throw ValidationError("variable sets must be disjoint");
    }
  }
}

}  // namespace

JointPmf::JointPmf(std::vector<int> alphabet, std::vector<double> p) : alphabet_(std::move(alphabet)), p_(std::move(p)) {
  if (alphabet_.empty()) throw ValidationError("a pmf needs at least one variable");
  for (int a : alphabet_) {
    if (a < 1) throw ValidationError("alphabet sizes must be positive");
  }
  if (table_size(alphabet_) != p_.size()) throw ValidationError("pmf table size does not match alphabet sizes");
  double sum = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("pmf entries must be finite and non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ValidationError("pmf does not sum to 1");
}

std::vector<int> JointPmf::decode(std::size_t index) const {
  std::vector<int> v(alphabet_.size());
  for (std::size_t k = alphabet_.size(); k-- > 0;) {
    v[k] = static_cast<int>(index % static_cast<std::size_t>(alphabet_[k]));
    index /= static_cast<std::size_t>(alphabet_[k]);
  }
  return v;
}

JointPmf JointPmf::marginal(const VarSet& vars) const {
  std::vector<int> alpha;
  for (int v : vars) {
    if (v < 0 || v >= num_vars()) throw ValidationError("marginal: unknown variable " + std::to_string(v));
    alpha.push_back(alphabet_[static_cast<std::size_t>(v)]);
  }
  if (vars.empty()) return JointPmf({1}, {1.0});
  // Stride of each full-table variable inside the marginal table.
  std::vector<std::size_t> stride(alphabet_.size(), 0);
  std::size_t s = 1;
  for (std::size_t k = vars.size(); k-- > 0;) {
    if (stride[static_cast<std::size_t>(vars[k])] != 0) throw ValidationError("marginal: repeated variable");
    stride[static_cast<std::size_t>(vars[k])] = s;
    s *= alpha[k];
  }
  std::vector<double> out(table_size(alpha), 0.0);
  std::vector<int> digit(alphabet_.size(), 0);
  std::size_t target = 0;
  for (std::size_t i = 0; i < p_.size(); ++i) {
    out[target] += p_[i];
    // odometer increment, last variable fastest
    for (std::size_t k = alphabet_.size(); k-- > 0;) {
      target += stride[k];
      if (++digit[k] < alphabet_[k]) break;
      target -= stride[k] * static_cast<std::size_t>(alphabet_[k]);
      digit[k] = 0;
    }
  }
  // Renormalise away summation drift so the result passes validation.
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= total;
  return JointPmf(std::move(alpha), std::move(out));
}

double entropy(const JointPmf& pmf, const VarSet& vars) {
  if (vars.empty()) return 0.0;
  require_disjoint({&vars});
  const JointPmf m = pmf.marginal(vars);
  double h = 0.0;
  for (double p : m.table()) h -= plogp(p);
  return h;
}

double conditional_entropy(const JointPmf& pmf, const VarSet& a, const VarSet& given) {
  require_disjoint({&a, &given});
  return entropy(pmf, set_union(a, given)) - entropy(pmf, given);
}

double mutual_information(const JointPmf& pmf, const VarSet& a, const VarSet& b, const VarSet& given) {
  require_disjoint({&a, &b, &given});
  const VarSet ac = set_union(a, given);
  const VarSet bc = set_union(b, given);
  const VarSet abc = set_union(ac, b);
  return entropy(pmf, ac) + entropy(pmf, bc) - entropy(pmf, abc) - entropy(pmf, given);
}

Channel::Channel(int inputs, int outputs, std::vector<double> rows) : inputs_(inputs), outputs_(outputs), p_(std::move(rows)) {
  if (inputs_ < 1 || outputs_ < 1) throw ValidationError("channel alphabets must be positive");
  if (p_.size() != static_cast<std::size_t>(inputs_ * outputs_)) throw ValidationError("channel table has the wrong size");
  for (int x = 0; x < inputs_; ++x) {
    check_row_stochastic(std::span<const double>(p_).subspan(static_cast<std::size_t>(x * outputs_), static_cast<std::size_t>(outputs_)),
                         "channel");
  }
}

Channel Channel::identity(int n) {
  std::vector<double> p(static_cast<std::size_t>(n * n), 0.0);
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i * n + i)] = 1.0;
  return Channel(n, n, std::move(p));
}

Channel Channel::constant(int inputs, std::vector<double> row) {
  const int outputs = static_cast<int>(row.size());
  std::vector<double> p;
  for (int x = 0; x < inputs; ++x) p.insert(p.end(), row.begin(), row.end());
  return Channel(inputs, outputs, std::move(p));
}

std::size_t ConditionalTable::rows() const { return table_size(given_alphabet); }

void ConditionalTable::validate(const char* what) const {
  if (outputs < 1) throw ValidationError(std::string(what) + ": no outputs");
  if (p.size() != rows() * static_cast<std::size_t>(outputs)) throw ValidationError(std::string(what) + ": table has the wrong size");
  for (std::size_t r = 0; r < rows(); ++r) {
    check_row_stochastic(std::span<const double>(p).subspan(r * static_cast<std::size_t>(outputs), static_cast<std::size_t>(outputs)), what);
  }
}

VarSet ComposedVars::xs(const std::vector<int>& js) const {
  VarSet v;
  for (int j : js) v.push_back(x(j));
  return v;
}

VarSet ComposedVars::us(const std::vector<int>& js) const {
  VarSet v;
  for (int j : js) v.push_back(u(j));
  return v;
}

void validate_problem(const Problem& problem) {
  const int J = problem.num_sources();
  if (J < 1 || J > kMaxSources) {
    throw ValidationError("exhaustive computation supports 1.." + std::to_string(kMaxSources) + " sources");
  }
  if (problem.data.num_vars() != J + 1) throw ValidationError("data pmf must cover X_1..X_J and Y");
  for (int a : problem.data.alphabet()) {
    if (a > kMaxAlphabet) throw ValidationError("alphabets larger than " + std::to_string(kMaxAlphabet) + " are refused");
  }
  for (int j = 0; j < J; ++j) {
    const auto& ch = problem.channels[static_cast<std::size_t>(j)];
    if (ch.inputs() != problem.data.alphabet()[static_cast<std::size_t>(j)]) {
      throw ValidationError("channel " + std::to_string(j + 1) + " input alphabet does not match X_" + std::to_string(j + 1));
    }
    if (ch.outputs() > kMaxAlphabet) throw ValidationError("channel output alphabets larger than 4 are refused");
  }
}

JointPmf compose(const Problem& problem) {
  validate_problem(problem);
  const int J = problem.num_sources();
  std::vector<int> alpha = problem.data.alphabet();
  for (const auto& ch : problem.channels) alpha.push_back(ch.outputs());
  std::size_t u_count = 1;
  for (const auto& ch : problem.channels) u_count *= static_cast<std::size_t>(ch.outputs());

  std::vector<double> p;
  p.reserve(problem.data.size() * u_count);
  std::vector<int> u(static_cast<std::size_t>(J), 0);
  for (std::size_t i = 0; i < problem.data.size(); ++i) {
    const auto x = problem.data.decode(i);
    const double px = problem.data[i];
    std::fill(u.begin(), u.end(), 0);
    for (std::size_t k = 0; k < u_count; ++k) {
      double v = px;
      for (int j = 0; j < J; ++j) v *= problem.channels[static_cast<std::size_t>(j)](x[static_cast<std::size_t>(j)], u[static_cast<std::size_t>(j)]);
      p.push_back(v);
      for (int j = J; j-- > 0;) {
        if (++u[static_cast<std::size_t>(j)] < problem.channels[static_cast<std::size_t>(j)].outputs()) break;
        u[static_cast<std::size_t>(j)] = 0;
      }
    }
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;
  return JointPmf(std::move(alpha), std::move(p));
}

Verdict theorem1_feasible(const Problem& problem, const DagNetwork& dag, const RateTuple& rates) {
  const JointPmf joint = compose(problem);
  const int J = problem.num_sources();
  if (static_cast<int>(dag.sources().size()) != J) throw ValidationError("graph sources and channels disagree in number");
  if (static_cast<int>(rates.rates.size()) != J) throw ValidationError("one rate per source is required");
  const ComposedVars cv{J};
  const std::vector<NodeId> source_ids(dag.sources().begin(), dag.sources().end());

  Verdict verdict;
  for (int j = 0; j < J; ++j) {
    if (rates.rates[static_cast<std::size_t>(j)] < 0.0) {
      verdict.violations.push_back({"non-negative", {source_ids[static_cast<std::size_t>(j)]}, rates.rates[static_cast<std::size_t>(j)], 0.0});
    }
  }

  for (unsigned mask = 1; mask < (1u << J); ++mask) {
    std::vector<int> in, out;
    double sum = 0.0;
    std::vector<NodeId> ids;
    for (int j = 0; j < J; ++j) {
      if (mask & (1u << j)) {
        in.push_back(j);
        sum += rates.rates[static_cast<std::size_t>(j)];
        ids.push_back(source_ids[static_cast<std::size_t>(j)]);
      } else {
        out.push_back(j);
      }
    }
    const double bound = mutual_information(joint, cv.us(in), cv.xs(in), cv.us(out));
    if (sum < bound - kRegionTol) verdict.violations.push_back({"berger-tung", ids, sum, bound});
  }

  std::vector<NodeId> non_decision;
  for (NodeId n = 1; n <= dag.num_nodes(); ++n) {
    if (n != dag.decision_node()) non_decision.push_back(n);
  }
  const std::size_t m = non_decision.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
    std::set<NodeId> cut;
    for (std::size_t k = 0; k < m; ++k) {
      if (mask & (std::size_t{1} << k)) cut.insert(non_decision[k]);
    }
    double sum = 0.0;
    bool touches = false;
    for (int j = 0; j < J; ++j) {
      if (cut.contains(source_ids[static_cast<std::size_t>(j)])) {
        touches = true;
        sum += rates.rates[static_cast<std::size_t>(j)];
      }
    }
    if (!touches) continue;
    const double cap = dag.cut_capacity(cut);
    if (sum > cap + kRegionTol) verdict.violations.push_back({"cut-set", {cut.begin(), cut.end()}, sum, cap});
  }
  verdict.feasible = verdict.violations.empty();
  return verdict;
}

double achievable_relevance(const Problem& problem) {
  const JointPmf joint = compose(problem);
  const ComposedVars cv{problem.num_sources()};
  std::vector<int> all(static_cast<std::size_t>(problem.num_sources()));
  std::iota(all.begin(), all.end(), 0);
  return mutual_information(joint, cv.us(all), {cv.y()});
}

namespace {

void require_five_node(const Problem& problem) {
  if (problem.num_sources() != 3) throw ValidationError("the five-node region needs exactly three sources");
}

}  // namespace

FiveNodeTerms five_node_terms(const Problem& problem) {
  require_five_node(problem);
  const JointPmf joint = compose(problem);
  const ComposedVars cv{3};
  FiveNodeTerms t;
  t.a1 = mutual_information(joint, cv.us({0}), cv.xs({0}), cv.us({1, 2}));
  t.a2 = mutual_information(joint, cv.us({1}), cv.xs({1}), cv.us({0, 2}));
  t.a3 = mutual_information(joint, cv.us({2}), cv.xs({2}), cv.us({0, 1}));
  t.a23 = mutual_information(joint, cv.xs({1, 2}), cv.us({1, 2}), cv.us({0}));
  t.a13 = mutual_information(joint, cv.xs({0, 2}), cv.us({0, 2}), cv.us({1}));
  t.a12 = mutual_information(joint, cv.xs({0, 1}), cv.us({0, 1}), cv.us({2}));
  t.a123 = mutual_information(joint, cv.xs({0, 1, 2}), cv.us({0, 1, 2}));
  t.relevance = mutual_information(joint, {cv.y()}, cv.us({0, 1, 2}));
  return t;
}

FiveNodeVerdict five_node_region_check(const FiveNodeTerms& t, const FiveNodeCapacities& c) {
  constexpr double tol = kRegionTol;
  FiveNodeVerdict v;
  // R1 only appears in "R1 <= C15" and in lower bounds, so R1 = C15 is
  // without loss of generality. What remains is a box for (R2, R3) plus an
  // interval for R2 + R3.
  const double r1 = c.c15;
  if (r1 < std::max(0.0, t.a1) - tol) v.reasons.push_back("C15 below I(U1;X1|U2,U3)");
  const double l2 = std::max({0.0, t.a2, t.a12 - r1});
  const double l3 = std::max({0.0, t.a3, t.a13 - r1});
  if (l2 > c.c24 + tol) v.reasons.push_back("C24 below the R2 lower bound");
  if (l3 > c.c34 + tol) v.reasons.push_back("C34 below the R3 lower bound");
  const double lo = std::max({l2 + l3, t.a23, t.a123 - r1});
  const double hi = std::min(c.c24 + c.c34, c.c45);
  if (lo > hi + tol) v.reasons.push_back("no R2 + R3 fits between the sum lower bounds and min(C24 + C34, C45)");
  v.feasible = v.reasons.empty();
  if (v.feasible) {
    const double r2 = std::min(c.c24, std::max(l2, lo - c.c34));
    const double r3 = std::max(lo - r2, l3);
    v.witness = std::vector<double>{r1, r2, r3};
  }
  return v;
}

FiveNodeVerdict five_node_region_check(const Problem& problem, const FiveNodeCapacities& caps) {
  return five_node_region_check(five_node_terms(problem), caps);
}

double sum_capacity_threshold(const FiveNodeTerms& t) { return t.a123 + t.a23; }

SumVerdict sum_region_check(const Problem& problem, double c_sum) {
  const FiveNodeTerms t = five_node_terms(problem);
  SumVerdict v;
  v.threshold = sum_capacity_threshold(t);
  v.relevance = t.relevance;
  v.feasible = c_sum >= 0.0 && c_sum >= v.threshold - kRegionTol;
  return v;
}

FmeReport fme_equivalence_test(const Problem& problem, double step) {
  if (!(step > 0.0)) throw ValidationError("grid step must be positive");
  const FiveNodeTerms t = five_node_terms(problem);
  FmeReport rep;
  rep.threshold = sum_capacity_threshold(t);
  rep.tolerance = 4.0 * step;

  // Each lower bound is at most a123, so rates above a123 + step never help.
  const auto n = static_cast<long>(std::ceil(std::max(0.0, t.a123) / step)) + 1;
  rep.grid_min_sum = std::numeric_limits<double>::infinity();
  constexpr double tol = kRegionTol;
  for (long i2 = 0; i2 <= n; ++i2) {
    const double r2 = static_cast<double>(i2) * step;
    if (r2 < t.a2 - tol) continue;
    for (long i3 = 0; i3 <= n; ++i3) {
      const double r3 = static_cast<double>(i3) * step;
      if (r3 < t.a3 - tol || r2 + r3 < t.a23 - tol) continue;
      const double r1 = std::max({0.0, t.a1, t.a12 - r2, t.a13 - r3, t.a123 - r2 - r3});
      const double total = r1 + 2.0 * (r2 + r3);
      if (total < rep.grid_min_sum) {
        rep.grid_min_sum = total;
        rep.grid_split = {r1, r2, r3, r2 + r3};
      }
    }
  }

  const bool split_ok = five_node_region_check(t, rep.grid_split).feasible;
  const bool not_below = rep.grid_min_sum >= rep.threshold - 1e-9;
  const bool close = rep.grid_min_sum <= rep.threshold + rep.tolerance;
  const bool sum_agrees = sum_region_check(problem, rep.grid_split.sum()).feasible;
  rep.passes = split_ok && not_below && close && sum_agrees;
  if (!split_ok) rep.detail += "grid split fails the five-node region; ";
  if (!not_below) rep.detail += "a split below the projected threshold is feasible; ";
  if (!close) rep.detail += "no split within tolerance of the projected threshold; ";
  if (!sum_agrees) rep.detail += "sum region rejects a feasible split; ";
  return rep;
}

double lagrangian_Ls(const Problem& problem, double s) {
  if (!(s >= 0.0)) throw ValidationError("s must be non-negative");
  require_five_node(problem);
  const JointPmf joint = compose(problem);
  const ComposedVars cv{3};
  const double h_y_u = conditional_entropy(joint, {cv.y()}, cv.us({0, 1, 2}));
  const double i_all = mutual_information(joint, cv.xs({0, 1, 2}), cv.us({0, 1, 2}));
  const double i_23 = mutual_information(joint, cv.xs({1, 2}), cv.us({1, 2}), cv.us({0}));
  return -h_y_u - s * (i_all + i_23);
}

std::vector<std::vector<double>> simplex_grid(int outputs, double step) {
  if (outputs < 1) throw ValidationError("simplex needs at least one coordinate");
  const long n = std::lround(1.0 / step);
  if (n < 1 || std::abs(static_cast<double>(n) * step - 1.0) > 1e-9) throw ValidationError("grid step must divide 1");
  std::vector<std::vector<double>> out;
  std::vector<long> counts(static_cast<std::size_t>(outputs), 0);
  // Enumerate compositions of n into `outputs` parts in lexicographic order.
  auto rec = [&](auto&& self, int k, long remaining) -> void {
    if (k == outputs - 1) {
      counts[static_cast<std::size_t>(k)] = remaining;
      std::vector<double> row(static_cast<std::size_t>(outputs));
      for (int i = 0; i < outputs; ++i) row[static_cast<std::size_t>(i)] = static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(n);
      out.push_back(std::move(row));
      return;
    }
    for (long c = 0; c <= remaining; ++c) {
      counts[static_cast<std::size_t>(k)] = c;
      self(self, k + 1, remaining - c);
    }
  };
  rec(rec, 0, n);
  return out;
}

namespace {

std::vector<Channel> channel_grid(int inputs, int outputs, double step) {
  const auto rows = simplex_grid(outputs, step);
  std::vector<Channel> out;
  std::vector<std::size_t> pick(static_cast<std::size_t>(inputs), 0);
  while (true) {
    std::vector<double> table;
    for (int x = 0; x < inputs; ++x) {
      const auto& r = rows[pick[static_cast<std::size_t>(x)]];
      table.insert(table.end(), r.begin(), r.end());
    }
    out.emplace_back(inputs, outputs, std::move(table));
    int k = inputs - 1;
    while (k >= 0 && ++pick[static_cast<std::size_t>(k)] == rows.size()) {
      pick[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return out;
}

// Sum over x of p(x) H(U | X = x) for one channel.
double conditional_output_entropy(const Channel& ch, std::span<const double> px) {
  double h = 0.0;
  for (int x = 0; x < ch.inputs(); ++x) {
    double hx = 0.0;
    for (int u = 0; u < ch.outputs(); ++u) hx -= plogp(ch(x, u));
    h += px[static_cast<std::size_t>(x)] * hx;
  }
  return h;
}

}  // namespace

std::vector<Prop1Point> prop1_points(const JointPmf& data, std::span<const double> s_values, double step,
                                     std::vector<int> output_sizes) {
  if (data.num_vars() != 4) throw ValidationError("prop1 needs a pmf over (X1, X2, X3, Y)");
  for (double s : s_values) {
    if (!(s >= 0.0)) throw ValidationError("s must be non-negative");
  }
  const auto& a = data.alphabet();
  for (int v : a) {
    if (v > kMaxAlphabet) throw ValidationError("alphabets larger than 4 are refused");
  }
  if (output_sizes.empty()) output_sizes = {a[0], a[1], a[2]};
  if (output_sizes.size() != 3) throw ValidationError("three output alphabet sizes expected");

  std::array<std::vector<Channel>, 3> grids;
  double combos = 1.0;
  for (int j = 0; j < 3; ++j) {
    grids[static_cast<std::size_t>(j)] = channel_grid(a[static_cast<std::size_t>(j)], output_sizes[static_cast<std::size_t>(j)], step);
    combos *= static_cast<double>(grids[static_cast<std::size_t>(j)].size());
  }
  if (combos > 2e9) throw ValidationError("channel grid too large for exhaustive search; use a coarser step");

  const int X1 = a[0], X2 = a[1], X3 = a[2], Y = a[3];
  const int U1 = output_sizes[0], U2 = output_sizes[1], U3 = output_sizes[2];
  const auto& p = data.table();
  auto pidx = [&](int x1, int x2, int x3, int y) { return static_cast<std::size_t>(((x1 * X2 + x2) * X3 + x3) * Y + y); };

  std::array<std::vector<double>, 3> px;
  double h_y = 0.0;
  {
    const JointPmf m0 = data.marginal({0}), m1 = data.marginal({1}), m2 = data.marginal({2}), my = data.marginal({3});
    px = {m0.table(), m1.table(), m2.table()};
    for (double v : my.table()) h_y -= plogp(v);
  }
  std::array<std::vector<double>, 3> hux;
  for (int j = 0; j < 3; ++j) {
    for (const auto& ch : grids[static_cast<std::size_t>(j)]) hux[static_cast<std::size_t>(j)].push_back(conditional_output_entropy(ch, px[static_cast<std::size_t>(j)]));
  }

  struct Best {
    double l = -std::numeric_limits<double>::infinity();
    double delta = 0.0, c = 0.0;
    std::size_t i1 = 0, i2 = 0, i3 = 0;
  };
  std::vector<Best> best(s_values.size());

  // q1[x2][x3][y][u1], q12[x3][y][u1][u2], pyu[y][u1][u2][u3]
  std::vector<double> q1(static_cast<std::size_t>(X2 * X3 * Y * U1));
  std::vector<double> q12(static_cast<std::size_t>(X3 * Y * U1 * U2));
  std::vector<double> pyu(static_cast<std::size_t>(Y * U1 * U2 * U3));
  std::vector<double> pu(static_cast<std::size_t>(U1 * U2 * U3));

  for (std::size_t i1 = 0; i1 < grids[0].size(); ++i1) {
    const Channel& c1 = grids[0][i1];
    std::fill(q1.begin(), q1.end(), 0.0);
    for (int x1 = 0; x1 < X1; ++x1)
      for (int x2 = 0; x2 < X2; ++x2)
        for (int x3 = 0; x3 < X3; ++x3)
          for (int y = 0; y < Y; ++y) {
            const double pv = p[pidx(x1, x2, x3, y)];
            for (int u1 = 0; u1 < U1; ++u1) q1[static_cast<std::size_t>(((x2 * X3 + x3) * Y + y) * U1 + u1)] += pv * c1(x1, u1);
          }
    double h_u1 = 0.0;
    {
      std::vector<double> m(static_cast<std::size_t>(U1), 0.0);
      for (std::size_t k = 0; k < q1.size(); ++k) m[k % static_cast<std::size_t>(U1)] += q1[k];
      for (double v : m) h_u1 -= plogp(v);
    }
    for (std::size_t i2 = 0; i2 < grids[1].size(); ++i2) {
      const Channel& c2 = grids[1][i2];
      std::fill(q12.begin(), q12.end(), 0.0);
      for (int x2 = 0; x2 < X2; ++x2)
        for (int x3 = 0; x3 < X3; ++x3)
          for (int y = 0; y < Y; ++y)
            for (int u1 = 0; u1 < U1; ++u1) {
              const double qv = q1[static_cast<std::size_t>(((x2 * X3 + x3) * Y + y) * U1 + u1)];
              for (int u2 = 0; u2 < U2; ++u2) q12[static_cast<std::size_t>(((x3 * Y + y) * U1 + u1) * U2 + u2)] += qv * c2(x2, u2);
            }
      for (std::size_t i3 = 0; i3 < grids[2].size(); ++i3) {
        const Channel& c3 = grids[2][i3];
        std::fill(pyu.begin(), pyu.end(), 0.0);
        for (int x3 = 0; x3 < X3; ++x3)
          for (int y = 0; y < Y; ++y)
            for (int u12 = 0; u12 < U1 * U2; ++u12) {
              const double qv = q12[static_cast<std::size_t>((x3 * Y + y) * U1 * U2 + u12)];
              double* dst = &pyu[static_cast<std::size_t>((y * U1 * U2 + u12) * U3)];
              for (int u3 = 0; u3 < U3; ++u3) dst[u3] += qv * c3(x3, u3);
            }
        std::fill(pu.begin(), pu.end(), 0.0);
        double h_yu = 0.0;
        for (std::size_t k = 0; k < pyu.size(); ++k) {
          h_yu -= plogp(pyu[k]);
          pu[k % pu.size()] += pyu[k];
        }
        double h_u = 0.0;
        for (double v : pu) h_u -= plogp(v);
        const double h_y_given_u = h_yu - h_u;
        const double c = 2.0 * h_u - h_u1 - hux[0][i1] - 2.0 * hux[1][i2] - 2.0 * hux[2][i3];
        for (std::size_t k = 0; k < s_values.size(); ++k) {
          const double l = -h_y_given_u - s_values[k] * c;
          if (l > best[k].l) best[k] = {l, h_y - h_y_given_u, c, i1, i2, i3};
        }
      }
    }
  }

  std::vector<Prop1Point> out;
  for (std::size_t k = 0; k < s_values.size(); ++k) {
    const Best& b = best[k];
    out.push_back({s_values[k], b.delta, b.c, b.l, {grids[0][b.i1], grids[1][b.i2], grids[2][b.i3]}});
  }
  return out;
}

Prop1Point prop1_point(const JointPmf& data, double s, double step) {
  const double sv[] = {s};
  return prop1_points(data, sv, step).front();
}

JointPmf compose_with_combiner(const Problem& problem, const ConditionalTable& combiner) {
  require_five_node(problem);
  combiner.validate("combiner");
  const int U2 = problem.channels[1].outputs();
  const int U3 = problem.channels[2].outputs();
  if (combiner.given_alphabet != std::vector<int>{U2, U3}) throw ValidationError("combiner must be conditioned on (U2, U3)");
  if (combiner.outputs > kMaxAlphabet) throw ValidationError("U4 alphabet larger than 4 is refused");
  const JointPmf base = compose(problem);
  std::vector<int> alpha = base.alphabet();
  alpha.push_back(combiner.outputs);
  std::vector<double> p;
  p.reserve(base.size() * static_cast<std::size_t>(combiner.outputs));
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto v = base.decode(i);
    const std::size_t row = static_cast<std::size_t>(v[5] * U3 + v[6]);
    for (int u4 = 0; u4 < combiner.outputs; ++u4) p.push_back(base[i] * combiner.at(row, u4));
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= total;
  return JointPmf(std::move(alpha), std::move(p));
}

namespace {

// Variable indices inside the augmented joint.
constexpr int kX1 = 0, kX2 = 1, kX3 = 2, kY = 3, kU1 = 4, kU2 = 5, kU3 = 6, kU4 = 7;

}  // namespace

double lagrangian_low(const Problem& problem, const ConditionalTable& combiner, double s) {
  if (!(s >= 0.0)) throw ValidationError("s must be non-negative");
  const JointPmf j = compose_with_combiner(problem, combiner);
  return -conditional_entropy(j, {kY}, {kU1, kU4}) - s * mutual_information(j, {kX1}, {kU1}) -
         2.0 * s * (mutual_information(j, {kX2}, {kU2}) + mutual_information(j, {kX3}, {kU3})) +
         2.0 * s * (mutual_information(j, {kU2}, {kU1}) + mutual_information(j, {kU3}, {kU1, kU2}));
}

LowerBoundReport lower_bound_check(const Problem& problem, const ConditionalTable& combiner, double s) {
  LowerBoundReport r;
  r.l_s = lagrangian_Ls(problem, s);
  r.l_s_low = lagrangian_low(problem, combiner, s);
  r.holds = r.l_s >= r.l_s_low - 1e-10;
  return r;
}

namespace {

// P(target | given) from a joint, uniform on zero-probability rows.
ConditionalTable conditional_from_joint(const JointPmf& joint, const VarSet& given, int target) {
  VarSet vars = given;
  vars.push_back(target);
  const JointPmf m = joint.marginal(vars);
  ConditionalTable t;
  for (int g : given) t.given_alphabet.push_back(joint.alphabet()[static_cast<std::size_t>(g)]);
  t.outputs = joint.alphabet()[static_cast<std::size_t>(target)];
  t.p = m.table();
  const auto k = static_cast<std::size_t>(t.outputs);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t v = 0; v < k; ++v) sum += t.p[r * k + v];
    for (std::size_t v = 0; v < k; ++v) t.p[r * k + v] = sum > 0.0 ? t.p[r * k + v] / sum : 1.0 / static_cast<double>(k);
  }
  return t;
}

}  // namespace

VariationalSet optimal_variational_set(const Problem& problem, const ConditionalTable& combiner) {
  const JointPmf j = compose_with_combiner(problem, combiner);
  return {conditional_from_joint(j, {kU1, kU4}, kY), conditional_from_joint(j, {kU1, kU2}, kU3),
          conditional_from_joint(j, {kU1}, kU2), conditional_from_joint(j, {}, kU1)};
}

VariationalReport variational_bound_check(const Problem& problem, const ConditionalTable& combiner,
                                          const VariationalSet& q, double s) {
  if (!(s >= 0.0)) throw ValidationError("s must be non-negative");
  const JointPmf j = compose_with_combiner(problem, combiner);
  const auto& a = j.alphabet();
  auto check = [](const ConditionalTable& t, std::vector<int> given, int outputs, const char* what) {
    t.validate(what);
    if (t.given_alphabet != given || t.outputs != outputs) throw ValidationError(std::string(what) + ": wrong alphabet");
  };
  check(q.y_given_u1u4, {a[kU1], a[kU4]}, a[kY], "Q_{Y|U1,U4}");
  check(q.u3_given_u1u2, {a[kU1], a[kU2]}, a[kU3], "Q_{U3}");
  check(q.u2_given_u1, {a[kU1]}, a[kU2], "Q_{U2}");
  check(q.u1, {}, a[kU1], "Q_{U1}");

  const auto& c1 = problem.channels[0];
  const auto& c2 = problem.channels[1];
  const auto& c3 = problem.channels[2];
  double e_log_q = 0.0, kl1 = 0.0, kl2 = 0.0, kl3 = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const double p = j[i];
    if (p <= 0.0) continue;
    const auto v = j.decode(i);
    e_log_q += p * std::log2(q.y_given_u1u4.at(static_cast<std::size_t>(v[kU1] * a[kU4] + v[kU4]), v[kY]));
    kl1 += p * std::log2(c1(v[kX1], v[kU1]) / q.u1.at(0, v[kU1]));
    kl2 += p * std::log2(c2(v[kX2], v[kU2]) / q.u2_given_u1.at(static_cast<std::size_t>(v[kU1]), v[kU2]));
    kl3 += p * std::log2(c3(v[kX3], v[kU3]) / q.u3_given_u1u2.at(static_cast<std::size_t>(v[kU1] * a[kU2] + v[kU2]), v[kU3]));
  }
  VariationalReport r;
  r.l_low = lagrangian_low(problem, combiner, s);
  r.l_vlow = e_log_q - s * kl1 - 2.0 * s * kl2 - 2.0 * s * kl3;
  r.gap = r.l_low - r.l_vlow;
  return r;
}

}  // namespace inl::info
