#pragma once

// Scalar reverse-mode differentiation, used only as an independent oracle
// for the hand-written backward passes.

#include <cstddef>
#include <vector>

namespace inl::verify {

class Tape {
 public:
  using Var = int;

  Var constant(double v) { return push(v, -1, 0.0, -1, 0.0); }
  Var variable(double v) { return push(v, -1, 0.0, -1, 0.0); }

  Var add(Var a, Var b) { return push(val(a) + val(b), a, 1.0, b, 1.0); }
  Var sub(Var a, Var b) { return push(val(a) - val(b), a, 1.0, b, -1.0); }
  Var mul(Var a, Var b) { return push(val(a) * val(b), a, val(b), b, val(a)); }
  Var div(Var a, Var b);
  Var scale(Var a, double c) { return push(c * val(a), a, c, -1, 0.0); }
  Var add_const(Var a, double c) { return push(val(a) + c, a, 1.0, -1, 0.0); }
  Var exp(Var a);
  Var log(Var a);
  Var relu(Var a) { return push(val(a) > 0.0 ? val(a) : 0.0, a, val(a) > 0.0 ? 1.0 : 0.0, -1, 0.0); }
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var sum(const std::vector<Var>& xs);

  double val(Var a) const { return nodes_[static_cast<std::size_t>(a)].value; }
  std::size_t size() const { return nodes_.size(); }

  // d(output)/d(node) for every node on the tape.
  std::vector<double> gradient(Var output) const;

 private:
  struct Node {
    double value;
    int a, b;
    double da, db;
  };
  Var push(double v, int a, double da, int b, double db) {
    nodes_.push_back({v, a, b, da, db});
    return static_cast<Var>(nodes_.size() - 1);
  }
  std::vector<Node> nodes_;
};

}  // namespace inl::verify
