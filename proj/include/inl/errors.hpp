#pragma once

#include <stdexcept>
#include <string>

namespace inl {

// Tensor or layer dimensions do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operations called out of order, e.g. backward without a live forward cache.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Inputs that violate a documented precondition (negative rates, bad pmfs, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace inl
