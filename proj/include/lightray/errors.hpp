#pragma once

#include <stdexcept>
#include <string>

namespace lightray {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A finite-difference stencil left the chart domain.
struct StencilError : Error {
  using Error::Error;
};
// kappa - |eta|^2 <= 0 somewhere in M.
struct CausalityError : Error {
  using Error::Error;
};
// A ray did not leave M within the step budget.
struct TrappedRayError : Error {
  using Error::Error;
};
// A field's support meets the boundary or is not covered by a time grid.
struct SupportError : Error {
  using Error::Error;
};
struct RankError : Error {
  using Error::Error;
};
struct ZeroMeanError : Error {
  using Error::Error;
};
struct DiscretizationError : Error {
  using Error::Error;
};
struct ResolutionError : Error {
  using Error::Error;
};
// Bad or missing configuration field; message names the field.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace lightray
