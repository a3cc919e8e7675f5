#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "lightray/rays.hpp"

namespace lightray {

using cplx = std::complex<double>;

struct SupportBall {
  Vec centre;
  double radius = 0.0;
};

// Symmetric tensor field on R x M with coordinates (t, x).
struct SpacetimeTensorField {
  TensorField field;  // dim n + 1
  double t_min = -std::numeric_limits<double>::infinity();
  double t_max = std::numeric_limits<double>::infinity();
  std::optional<SupportBall> spatial;  // spatial support lies in this ball when set

  int rank() const { return field.rank; }
  SymTensor operator()(const Vec& tx) const { return field(tx); }
  // alpha(w, ..., w)
  double eval(const Vec& tx, const Vec& w) const { return field(tx).contract(w); }
  // true when alpha and its stencil neighbourhood of size `margin` vanish for sure
  bool vanishes_near(const Vec& tx, double margin) const;
};

// alpha_T(t, x) = alpha(t - T, x)
SpacetimeTensorField time_shifted(const SpacetimeTensorField& alpha, double T);

double light_ray_transform(const StationaryGeometry& geo, const SpacetimeTensorField& alpha,
                           const LiftedRay& ray);

// Geodesic transform on (M, g) along the geodesic of `man` from the sample.
double geodesic_ray_transform(const ChartedManifold& man, const TensorField& omega,
                              const InflowSample& sample, const RayOptions& opt = {});
double geodesic_ray_transform(const TensorField& omega, const SpatialCurve& gamma);
double generalized_ray_transform(const StationaryGeometry& geo, const ScalarField& f,
                                 const InflowSample& sample, const RayOptions& opt = {});
double generalized_ray_transform(const ScalarField& f, const SpatialCurve& curve);

// R_j omega = int (i r)^j omega(gamma(r), gamma'(r)^m) dr
cplx moment_transform(const ChartedManifold& man, const TensorField& omega,
                      const InflowSample& sample, int j, const RayOptions& opt = {});
cplx moment_transform(const TensorField& omega, const SpatialCurve& gamma, int j);

// hat f(tau, x) = int e^{-i tau t} f(t, x) dt over the temporal support
cplx time_fourier(const SpacetimeTensorField& f, const Vec& x, double tau, int intervals = 400);

struct SliceComparison {
  cplx lhs, rhs;
  double scale = 0.0;  // trapezoid of |L f| over the T grid
};
// lhs: trapezoid over T of e^{-i tau T} L f along the translated base ray;
// rhs: int e^{i tau a(s)} hat f(tau, b(s)) ds. Throws SupportError when the T grid
// does not cover [t_min - max a, t_max - min a].
SliceComparison fourier_slice(const StationaryGeometry& geo, const SpacetimeTensorField& f,
                              const LiftedRay& base, double tau, std::span<const double> T_grid);
SliceComparison fourier_slice(const StationaryGeometry& geo, const SpacetimeTensorField& f,
                              const InflowSample& sample, double tau,
                              std::span<const double> T_grid, const RayOptions& opt = {});
// uniform grid covering the temporal support seen by the ray, plus 10% margin
std::vector<double> covering_T_grid(const SpacetimeTensorField& f, const LiftedRay& ray,
                                    double dT);

// Christoffels and metric of g_bar_c cached along a ray.
struct PreparedRay {
  LiftedRay ray;
  std::vector<Christoffel> gamma;
  std::vector<Mat> g;
};
PreparedRay prepare_ray(const StationaryGeometry& geo, const LiftedRay& ray);

struct GaugeKernelResult {
  double max_abs = 0.0;      // max over rays of |L(d_bar^s T + Sym(U g_bar_c))|
  double field_scale = 0.0;  // max over rays of int |d_bar^s T(beta', ..)| ds
  std::vector<double> values;
};
// U may be null (m = 1). Throws SupportError if T or U reaches the boundary.
GaugeKernelResult verify_gauge_kernel(const StationaryGeometry& geo, const SpacetimeTensorField& T,
                                      const SpacetimeTensorField* U,
                                      std::span<const PreparedRay> rays);
GaugeKernelResult verify_gauge_kernel(const StationaryGeometry& geo, const SpacetimeTensorField& T,
                                      const SpacetimeTensorField* U,
                                      std::span<const LiftedRay> rays);

// alpha = d_bar^s T + Sym(U g_bar_c) as a field (FD derivative of T). U may be null.
// Throws SupportError if T or U reaches the boundary.
SpacetimeTensorField gauge_tensor(const StationaryGeometry& geo, const SpacetimeTensorField& T,
                                  const SpacetimeTensorField* U);

struct ConformalCheck {
  double lhs = 0.0, rhs = 0.0;
};
// lhs: alpha~ along the g~ = c g_bar_c null geodesic started at beta(0) with
// velocity beta'(0) / c; rhs: c^{1-m} alpha~ along the g_bar_c ray.
ConformalCheck conformal_reparam_check(const StationaryGeometry& geo,
                                       const SpacetimeTensorField& alpha, const ScalarField& c,
                                       bool c_static, const LiftedRay& ray);

}  // namespace lightray
