#pragma once

#include <string>
#include <vector>

#include "lightray/fields.hpp"
#include "lightray/manifold.hpp"

namespace lightray {

// g_bar = -(kappa - |eta|^2) dt^2 + dt (x) eta + eta (x) dt + g on R x M.
struct StationaryGeometry {
  std::string id;
  ChartedManifold base;
  ScalarField kappa;
  CovectorField eta;
  bool eta_zero = false;
  bool kappa_constant = false;

  int n() const { return base.dim; }
  // conformal factor 1 / (kappa - |eta|^2_g)
  double c(const Vec& x) const;
  Mat g_c(const Vec& x) const;
  Vec eta_c(const Vec& x) const;
  // (M, g_c)
  ChartedManifold conformal_manifold() const;
};

// Validates kappa - |eta|^2_g > 0 on a 32 x 32 probe grid; throws CausalityError.
StationaryGeometry make_stationary(std::string id, ChartedManifold base, ScalarField kappa,
                                   CovectorField eta, bool eta_zero, bool kappa_constant);

struct GeometrySpec {
  std::string base = "flat-disc";
  std::string kappa = "1.0";
  std::string eta = "zero";
};
// kappa: a number or "radial(k0, k2)" = k0 + k2 |x|^2.
// eta: "zero", "rotation(e)" = e(-y dx + x dy), "gradient(e)" = e d(xy).
StationaryGeometry make_geometry(const GeometrySpec& spec);
// "minkowski", "rotation(e)", "conformal-minkowski(a)", "conformal-rotation(e, a)"
StationaryGeometry make_geometry(std::string_view id);
std::vector<std::string> registered_geometries();

struct LorentzMetric {
  int n = 0;
  MetricField field;  // coordinates (t, x^1..x^n); never depends on t
  Mat at(const Vec& x) const;  // spatial point; (n+1) x (n+1)
  double eval(const Vec& tx, const Vec& v, const Vec& w) const;
};

LorentzMetric assemble(const StationaryGeometry& geo, bool conformal);
// closed-form block inverse of the conformal metric at a spatial point
Mat inverse_conformal_metric(const StationaryGeometry& geo, const Vec& x);

// Everything the reduced ray equation needs at one spatial point.
struct LocalData {
  Mat gc, gc_inv;
  Vec eta_c, eta_sharp;
  double q = 1.0;  // (kappa - |eta|^2) / kappa = 1 / (1 + |eta_c|^2_{g_c})
  Christoffel gamma;
  Mat deta;  // deta(m, k) = d_k (eta_c)_m
  bool static_flat_eta = false;
};

LocalData local_data(const StationaryGeometry& geo, const Vec& x);
// eta_c(v) + sign * sqrt(eta_c(v)^2 + |v|^2_{g_c})
double time_rate(const LocalData& d, const Vec& v, int sign);
// force term of the reduced equation b'' = -Gamma(b', b') + G(b, b')
Vec g_field(const LocalData& d, const Vec& v, int sign = +1);
Vec g_field(const StationaryGeometry& geo, const Vec& z, const Vec& v, int sign = +1);

struct ConformalGaugeSplit {
  TensorField T_prime;  // c^{1-m} T
  TensorField U;        // rank m-2; empty rank-0 zero field when m = 1
  bool U_identically_zero = false;
  // max |c^{1-m} d~T - d_bar T' - i U| at a point
  std::function<double(const Vec&)> residual;
};

// g~ = c g_bar with T of rank m-1 on the spacetime chart.
ConformalGaugeSplit conformal_gauge_decompose(const MetricField& gbar, const TensorField& T,
                                              ScalarField c, bool c_static);
ConformalGaugeSplit conformal_gauge_decompose(const StationaryGeometry& geo, const TensorField& T,
                                              ScalarField c, bool c_static);

}  // namespace lightray
