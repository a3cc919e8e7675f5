#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lightray/rays.hpp"

namespace lightray {

struct FoliationFailure {
  int curve = 0;
  double s = 0.0;
  Vec x;
  double margin = 0.0;
};

struct FoliationReport {
  bool pass = false;
  bool degenerate = false;   // d rho vanishes identically
  bool flipped = false;      // rho was negated so that the boundary is its maximum
  double worst_margin = 0.0; // min of d^2(rho o b)/ds^2 over tangencies
  int n_tangencies = 0;
  int n_curves = 0;
  std::vector<FoliationFailure> failures;
  std::vector<double> margins;
};

// Integrates n_curves G-curves from random inflow data and checks that every interior
// tangency with a level set of rho is a strict local minimum of rho along the curve.
FoliationReport foliation_check(const StationaryGeometry& geo, const ScalarField& rho,
                                int n_curves, std::uint64_t seed, const RayOptions& opt = {});

struct FoliationSweep {
  std::vector<double> eps;
  std::vector<bool> pass;
  std::vector<double> worst_margin;
  std::optional<double> threshold;  // smallest failing eps
};

// rotation(eps) on the flat disc with rho = 1 - |x|^2
FoliationSweep foliation_sweep(const std::vector<double>& eps, int n_curves, std::uint64_t seed,
                               const RayOptions& opt = {});

}  // namespace lightray
