#include "inl/verify/tape.hpp"

#include <cmath>

namespace inl::verify {

Tape::Var Tape::div(Var a, Var b) {
  const double x = val(a), y = val(b);
  return push(x / y, a, 1.0 / y, b, -x / (y * y));
}

Tape::Var Tape::exp(Var a) {
  const double e = std::exp(val(a));
  return push(e, a, e, -1, 0.0);
}

Tape::Var Tape::log(Var a) { return push(std::log(val(a)), a, 1.0 / val(a), -1, 0.0); }

Tape::Var Tape::sigmoid(Var a) {
  const double s = 1.0 / (1.0 + std::exp(-val(a)));
  return push(s, a, s * (1.0 - s), -1, 0.0);
}

Tape::Var Tape::tanh(Var a) {
  const double t = std::tanh(val(a));
  return push(t, a, 1.0 - t * t, -1, 0.0);
}

Tape::Var Tape::sum(const std::vector<Var>& xs) {
  Var acc = constant(0.0);
  for (Var x : xs) acc = add(acc, x);
  return acc;
}

std::vector<double> Tape::gradient(Var output) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  adj[static_cast<std::size_t>(output)] = 1.0;
  for (std::size_t i = static_cast<std::size_t>(output) + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (adj[i] == 0.0) continue;
    if (n.a >= 0) adj[static_cast<std::size_t>(n.a)] += adj[i] * n.da;
    if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += adj[i] * n.db;
  }
  return adj;
}

}  // namespace inl::verify
