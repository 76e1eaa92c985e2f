#pragma once

#include <stdexcept>

namespace qfc {

// A caller violated a documented precondition.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A fit could not locate or converge on its feature.
struct FitFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An integration step size violates the stability bound.
struct StabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tomography data cannot support a reconstruction.
struct ReconstructionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The requested quantity is undefined on the given inputs
// (all-zero visibility counts, zero-accidental CAR).
struct UndefinedValue : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qfc
