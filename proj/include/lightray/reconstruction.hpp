#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <span>
#include <vector>

#include "lightray/transforms.hpp"

namespace lightray {

// L f(T, x, v) over time translations T and a fan-beam inflow grid.
struct Sinogram {
  int np = 0, nd = 0;  // boundary points x directions
  std::vector<InflowSample> inflow;
  std::vector<double> T;
  std::vector<double> values;  // values[ray * T.size() + k]

  size_t rays() const { return inflow.size(); }
  double operator()(size_t ray, size_t k) const { return values[ray * T.size() + k]; }
  double max_abs() const;
  void write_csv(std::ostream& os) const;  // ray,theta,psi,T,value
};

// Throws SupportError when T does not reach from t_min - max a to t_max - min a.
Sinogram forward_scan(const StationaryGeometry& geo, const SpacetimeTensorField& f, int np, int nd,
                      std::span<const double> T, const RayOptions& opt = {});

// g_tau(x, v) = trapezoid over T of e^{-i tau T} L f(T, x, v). On a static flat
// geometry this is int e^{i tau r} hat f(tau, gamma(r)) dr.
std::vector<cplx> slice(const Sinogram& s, double tau);

struct SliceStack {
  std::vector<double> taus;
  std::vector<std::vector<cplx>> data;  // [tau][ray]
  // false: e^{i tau r} stays inside the data and the inversion operator carries it
  bool phase_corrected = false;
  // max over (tau, -tau) pairs of |g_{-tau} - conj g_tau| / max |g|
  double hermitian_defect() const;
};
SliceStack slice_stack(const Sinogram& s, std::span<const double> taus);

// n x n pixels on [-1, 1]^2; images are (x index, y index) and zero outside the disc.
struct PixelGrid {
  int n = 64;
  double h() const { return 2.0 / n; }
  double centre(int i) const { return -1.0 + (i + 0.5) * h(); }
  bool inside(int i, int j) const;
};

// u -> int_0^{tau_+} e^{i tau r} u(x + r v) dr on straight chords of the unit disc,
// midpoint samples every half pixel, bilinear on pixel centres.
class WeightedRayOperator {
 public:
  WeightedRayOperator(std::span<const InflowSample> rays, const PixelGrid& grid);
  size_t rays() const { return first_.size() - 1; }
  const PixelGrid& grid() const { return grid_; }
  void forward(const Eigen::MatrixXcd& u, double tau, std::vector<cplx>& out) const;
  void adjoint(std::span<const cplx> g, double tau, Eigen::MatrixXcd& out) const;
  // largest eigenvalue of A*A at tau = 0, which bounds it for every tau
  double normal_norm(int iterations = 30) const;

 private:
  struct Sample {
    int base;  // index into the padded image
    float fx, fy;
  };
  PixelGrid grid_;
  std::vector<size_t> first_;
  std::vector<Sample> samples_;
  std::vector<double> dr_;
};

struct InversionOptions {
  double lambda_rel = 1e-4;  // Tikhonov weight relative to |A*A|
  int max_iter = 200;
  double tol = 1e-6;  // relative normal-equation residual
};

struct SliceInversion {
  Eigen::MatrixXcd image;
  int iterations = 0;
  double residual = 0.0;
};

// Ram-Lak x Hann filtered backprojection after fan-to-parallel rebinning. The
// data are ordered as sample_inflow(flat_disc(), np, nd) with real values.
Eigen::MatrixXd fbp(int np, int nd, std::span<const double> data, const PixelGrid& grid);

// tau = 0: FBP of the real part. Otherwise Tikhonov CG on the normal equations,
// warm started from `start` when given. Throws ResolutionError below 64 x 64 rays.
SliceInversion invert_slice(const WeightedRayOperator& A, int np, int nd, std::span<const cplx> g,
                            double tau, const InversionOptions& opt = {},
                            const Eigen::MatrixXcd* start = nullptr);

struct ReconstructionOptions {
  PixelGrid grid;
  double dtau = 0.1;
  int n_tau = 12;  // positive frequencies; the grid is k dtau, |k| <= n_tau
  std::vector<double> t_out;
  InversionOptions inversion;
};

// Uniform tau grid with period 2 pi / dtau = oversample * extent of the temporal
// support, reaching tau_max.
ReconstructionOptions nyquist_tau_grid(double t_extent, double tau_max, double oversample = 2.0);

struct Reconstruction {
  std::vector<double> t;
  std::vector<Eigen::MatrixXd> frames;  // real part at each t
  double imaginary_residual = 0.0;      // |Im| / |Re| over all frames
  std::vector<double> taus;
  std::vector<int> iterations;
  PixelGrid grid;
};

// Minkowski x flat disc only. Negative tau slices are the conjugates of the
// positive ones (real sinogram), so only tau >= 0 are inverted.
Reconstruction reconstruct_scalar(const StationaryGeometry& geo, const Sinogram& s,
                                  const ReconstructionOptions& opt);

// sqrt(sum (rec - f)^2 / sum f^2) over frames and pixels inside the disc
double relative_l2_error(const Reconstruction& rec, const SpacetimeTensorField& f);
// intensity-weighted centroid of |frame| restricted to a ball
Vec centroid(const Eigen::MatrixXd& frame, const PixelGrid& grid, const Vec& near, double radius);

struct GaussianBlob {
  Vec centre;
  double sx = 0.2;
  double t0 = 0.0;
  double st = 1.0;
  double amplitude = 1.0;
};
// Sum of space-time Gaussians, temporal support cut at 8 sigma_t.
SpacetimeTensorField gaussian_phantom(std::span<const GaussianBlob> blobs);

}  // namespace lightray
