#pragma once

// Exhaustive information measures over small finite alphabets, and numeric
// checks of the relevance/complexity region of in-network inference. All
// quantities are in bits; 0 log 0 = 0.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inl/graph.hpp"

namespace inl::info {

inline constexpr int kMaxAlphabet = 4;
inline constexpr int kMaxSources = 3;

using VarSet = std::vector<int>;

// Probability table over variables 0..k-1 with the last variable varying fastest.
class JointPmf {
 public:
  JointPmf(std::vector<int> alphabet, std::vector<double> p);

  const std::vector<int>& alphabet() const { return alphabet_; }
  const std::vector<double>& table() const { return p_; }
  int num_vars() const { return static_cast<int>(alphabet_.size()); }
  std::size_t size() const { return p_.size(); }

  double operator[](std::size_t i) const { return p_[i]; }
  std::vector<int> decode(std::size_t index) const;

  // Marginal onto `vars`, in the order given.
  JointPmf marginal(const VarSet& vars) const;

 private:
  std::vector<int> alphabet_;
  std::vector<double> p_;
};

double entropy(const JointPmf& pmf, const VarSet& vars);
double conditional_entropy(const JointPmf& pmf, const VarSet& a, const VarSet& given);
// I(A; B | C); the three sets must be pairwise disjoint.
double mutual_information(const JointPmf& pmf, const VarSet& a, const VarSet& b, const VarSet& given = {});

// Row-stochastic table P(U = u | X = x), rows indexed by x.
class Channel {
 public:
  Channel(int inputs, int outputs, std::vector<double> rows);

  static Channel identity(int n);
  static Channel constant(int inputs, std::vector<double> row);

  int inputs() const { return inputs_; }
  int outputs() const { return outputs_; }
  double operator()(int x, int u) const { return p_[static_cast<std::size_t>(x * outputs_ + u)]; }
  const std::vector<double>& table() const { return p_; }

 private:
  int inputs_;
  int outputs_;
  std::vector<double> p_;
};

// Conditional table P(V | W_1..W_m) over a tuple of conditioning variables;
// rows are indexed by the conditioning tuple in row-major order.
struct ConditionalTable {
  std::vector<int> given_alphabet;
  int outputs = 0;
  std::vector<double> p;

  std::size_t rows() const;
  double at(std::size_t row, int v) const { return p[row * static_cast<std::size_t>(outputs) + static_cast<std::size_t>(v)]; }
  void validate(const char* what) const;
};

// Data pmf over (X_1, ..., X_J, Y) and one channel per source.
struct Problem {
  JointPmf data;
  std::vector<Channel> channels;

  int num_sources() const { return static_cast<int>(channels.size()); }
};

// Variable layout of the composed joint: X_1..X_J, Y, U_1..U_J (0-based j).
struct ComposedVars {
  int J = 0;
  int x(int j) const { return j; }
  int y() const { return J; }
  int u(int j) const { return J + 1 + j; }
  VarSet xs(const std::vector<int>& js) const;
  VarSet us(const std::vector<int>& js) const;
};

void validate_problem(const Problem& problem);

// P_{X,Y} * prod_j P_{U_j|X_j} as a table over X_1..X_J, Y, U_1..U_J.
JointPmf compose(const Problem& problem);

struct RateTuple {
  std::vector<double> rates;
};

struct Violation {
  std::string constraint;  // "berger-tung" or "cut-set" or "non-negative"
  std::vector<NodeId> subset;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct Verdict {
  bool feasible = true;
  std::vector<Violation> violations;
};

inline constexpr double kRegionTol = 1e-12;

// Checks both constraint families of the achievable-relevance theorem for the
// given rates: sum_{j in S} R_j >= I(U_S; X_S | U_{S^c}) for nonempty S in the
// source set, and sum_{j in S cap J} R_j <= C(S) for every S in [1..N-1]
// touching a source. Source ids map to pmf variables in ascending order.
Verdict theorem1_feasible(const Problem& problem, const DagNetwork& dag, const RateTuple& rates);

// I(U_1..U_J; Y) under the composed joint.
double achievable_relevance(const Problem& problem);

// Mutual-information terms of the five-node region (sources 1, 2, 3).
struct FiveNodeTerms {
  double a1 = 0, a2 = 0, a3 = 0;  // I(U_j; X_j | U_others)
  double a12 = 0, a13 = 0, a23 = 0;
  double a123 = 0;                // I(X_123; U_123)
  double relevance = 0;           // I(Y; U_123)
};
FiveNodeTerms five_node_terms(const Problem& problem);

struct FiveNodeCapacities {
  double c15 = 0, c24 = 0, c34 = 0, c45 = 0;
  double sum() const { return c15 + c24 + c34 + c45; }
};

struct FiveNodeVerdict {
  bool feasible = false;
  std::optional<std::vector<double>> witness;  // (R1, R2, R3) when feasible
  std::vector<std::string> reasons;
};

// Exact decision: does some (R1, R2, R3) >= 0 satisfy the five-node region?
FiveNodeVerdict five_node_region_check(const FiveNodeTerms& terms, const FiveNodeCapacities& caps);
FiveNodeVerdict five_node_region_check(const Problem& problem, const FiveNodeCapacities& caps);

// Threshold of the projected sum-capacity region:
// I(X_123; U_123) + I(X_23; U_23 | U_1).
double sum_capacity_threshold(const FiveNodeTerms& terms);

struct SumVerdict {
  bool feasible = false;
  double threshold = 0.0;
  double relevance = 0.0;
};
SumVerdict sum_region_check(const Problem& problem, double c_sum);

struct FmeReport {
  bool passes = false;
  double threshold = 0.0;          // from the projected region
  double grid_min_sum = 0.0;       // smallest split sum found by grid search
  FiveNodeCapacities grid_split;   // the split attaining it
  double tolerance = 0.0;
  std::string detail;
};

// Grid-searches capacity splits C15 + C24 + C34 + C45 for the smallest total
// that makes the five-node region feasible, and compares it with the projected
// threshold. `step` is the rate grid in bits.
FmeReport fme_equivalence_test(const Problem& problem, double step = 1e-3);

// -H(Y|U_123) - s [ I(X_123; U_123) + I(X_23; U_23 | U_1) ].
double lagrangian_Ls(const Problem& problem, double s);

struct Prop1Point {
  double s = 0.0;
  double delta = 0.0;   // I(Y; U*) = H(Y) + L_s(P*) + s C_s
  double c_s = 0.0;
  double l_s = 0.0;
  std::vector<Channel> channels;
};

// Enumerates every channel triple whose rows lie on a simplex grid with the
// given step (outputs per source from `output_sizes`) and returns the
// maximiser of L_s for each requested s.
std::vector<Prop1Point> prop1_points(const JointPmf& data, std::span<const double> s_values, double step = 0.05,
                                     std::vector<int> output_sizes = {});
Prop1Point prop1_point(const JointPmf& data, double s, double step = 0.05);

// Every row distribution of `outputs` symbols with entries on multiples of `step`.
std::vector<std::vector<double>> simplex_grid(int outputs, double step);

struct LowerBoundReport {
  double l_s = 0.0;
  double l_s_low = 0.0;
  bool holds = false;
};

// Both sides of L_s(P) >= L_s^low(P, P_{U4|U2,U3}) for the five-node problem.
// The combiner is a table P(U_4 | U_2, U_3).
LowerBoundReport lower_bound_check(const Problem& problem, const ConditionalTable& combiner, double s);
double lagrangian_low(const Problem& problem, const ConditionalTable& combiner, double s);

// Variational family {Q_{Y|U1,U4}, Q_{U3|U1,U2}, Q_{U2|U1}, Q_{U1}}.
struct VariationalSet {
  ConditionalTable y_given_u1u4;
  ConditionalTable u3_given_u1u2;
  ConditionalTable u2_given_u1;
  ConditionalTable u1;  // empty given_alphabet
};

// The choice at which the variational bound is tight.
VariationalSet optimal_variational_set(const Problem& problem, const ConditionalTable& combiner);

struct VariationalReport {
  double l_low = 0.0;
  double l_vlow = 0.0;
  double gap = 0.0;
};
VariationalReport variational_bound_check(const Problem& problem, const ConditionalTable& combiner,
                                          const VariationalSet& q, double s);

// Augmented joint over X1, X2, X3, Y, U1, U2, U3, U4 (indices 0..7).
JointPmf compose_with_combiner(const Problem& problem, const ConditionalTable& combiner);

}  // namespace inl::info
