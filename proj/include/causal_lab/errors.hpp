#pragma once

#include <stdexcept>
#include <string>

namespace causal_lab {

// Base class for all errors raised by the library. The CLI maps these to
// nonzero exit codes; tests match on the concrete type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A point, segment, or sample fell outside a model's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A path segment or edge fails a causality requirement (e.g. spacelike).
class CausalityError : public Error {
 public:
  using Error::Error;
};

// Bad user-supplied argument or config value.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Degenerate numerics: singular metric, non-invertible system, NaN.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Sampling produced an unusable point set (empty window, zero density).
class SamplingError : public Error {
 public:
  using Error::Error;
};

// Graph-shape requirement unmet (missing proximity edges, bad ids).
class StructureError : public Error {
 public:
  using Error::Error;
};

// An inductive construction (surface, hatting) could not continue.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// A node could not be classified into past/surface/future of a surface.
class SplitError : public Error {
 public:
  using Error::Error;
};

// Distance and order operations refuse graphs with causal cycles.
class CyclicGraphError : public Error {
 public:
  using Error::Error;
};

}  // namespace causal_lab
