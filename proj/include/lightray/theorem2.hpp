#pragma once

#include <string>
#include <vector>

#include "lightray/decomposition.hpp"
#include "lightray/transforms.hpp"

namespace lightray {

// alpha = f dt + omega + b g_bar on R x M with g_bar = -dt^2 + g, read off at time t.
// m = 1: f = alpha_0, omega = alpha_i. m = 2: b = -alpha_00, f_i = 2 alpha_0i,
// omega_ij = alpha_ij - b g_ij.
struct BlockSplit {
  TensorField f, omega;
  ScalarField b;  // zero for m = 1
};
BlockSplit split_blocks(const SpacetimeTensorField& alpha, double t);

struct Theorem2Options {
  int grid_n = 64;      // disc lattice cells per side
  int n_times = 41;     // time slices over [t_min, t_max], endpoints included
  int rays_np = 8, rays_nd = 8;
  int n_T = 9;          // translations per ray for the sinogram
  double ray_step = 0.01;
  double sinogram_tol = 1e-5;
  double grid_tol = 2e-2;  // relative, for the discretized identities
  // the a_0 identities pass through three nested solves and take omega^t as the
  // trace of omega - d^s a_1, which carries the O(h^2) error of the discrete d^s
  double nested_tol = 5e-2;
  // > 0: report whether max |hat omega^tfs(0)| clears 10 x this floor
  double noise_floor = 0.0;
  double detection_factor = 10.0;
};

struct Theorem2Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Theorem2Report {
  int rank = 0;
  double max_sinogram = 0.0;
  double alpha_scale = 0.0;     // max |alpha| over the sampled slices
  double tfs_zero_mode = 0.0;   // max |hat omega^tfs(0)| (hat omega^s(0) for m = 1)
  std::vector<Theorem2Check> checks;
  bool all_pass() const;
};

// Minkowski x flat disc, m in {1, 2}. Moments M_j[u] = int t^j u dt come from
// Richardson-extrapolated central differences of the windowed transform
// hat u(tau) = sum_k w_k e^{-i tau t_k} u(t_k) at tau = 0.
Theorem2Report theorem2_suite(const StationaryGeometry& geo, const SpacetimeTensorField& alpha,
                              const Theorem2Options& opt = {});

}  // namespace lightray
