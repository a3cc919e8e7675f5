#include "lightray/stationary.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

namespace lightray {

namespace {

// g_c and eta_c together, so one stencil serves both
struct MetricAndEta {
  Mat g;
  Vec e;
};
MetricAndEta operator-(const MetricAndEta& a, const MetricAndEta& b) { return {a.g - b.g, a.e - b.e}; }
MetricAndEta operator*(const MetricAndEta& a, double s) { return {a.g * s, a.e * s}; }

double eta_norm2(const Mat& g, const Vec& eta) { return eta.dot(g.ldlt().solve(eta)); }

std::vector<Vec> probe_points(const ChartedManifold& m) {
  std::vector<Vec> pts;
  const int n = 32;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double u = static_cast<double>(i) / (n - 1);
      double v = static_cast<double>(j) / (n - 1);
      Vec x(2);
      switch (m.shape) {
        case ChartShape::disc: x << 2 * u - 1, 2 * v - 1; break;
        case ChartShape::square: x << u, v; break;
        case ChartShape::polar_disc: x << (i + 1.0) / n, 2 * std::numbers::pi * v; break;
      }
      if (m.rho(x) <= 0.0) pts.push_back(x);
    }
  return pts;
}

std::string fmt_point(const Vec& x) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

double StationaryGeometry::c(const Vec& x) const {
  if (eta_zero) return 1.0 / kappa(x);
  return 1.0 / (kappa(x) - eta_norm2(base.metric.eval(x), eta(x)));
}

Mat StationaryGeometry::g_c(const Vec& x) const { return c(x) * base.metric.eval(x); }

Vec StationaryGeometry::eta_c(const Vec& x) const {
  if (eta_zero) return Vec::Zero(n());
  return c(x) * eta(x);
}

ChartedManifold StationaryGeometry::conformal_manifold() const {
  ChartedManifold m = base;
  m.id = base.id + "/conformal";
  const StationaryGeometry self = *this;
  m.metric.eval = [self](const Vec& x) { return self.g_c(x); };
  m.metric.derivative = nullptr;
  if (eta_zero && kappa_constant && base.metric.derivative) {
    m.metric.derivative = [self](const Vec& x, std::array<Mat, kMaxDim>& dg) {
      self.base.metric.derivative(x, dg);
      const double c = self.c(x);
      for (int k = 0; k < self.n(); ++k) dg[k] *= c;
    };
  }
  return m;
}

StationaryGeometry make_stationary(std::string id, ChartedManifold base, ScalarField kappa,
                                   CovectorField eta, bool eta_zero, bool kappa_constant) {
  StationaryGeometry geo{std::move(id), std::move(base), std::move(kappa), std::move(eta),
                         eta_zero, kappa_constant};
  for (const Vec& x : probe_points(geo.base)) {
    double k = geo.kappa(x);
    double e2 = eta_zero ? 0.0 : eta_norm2(geo.base.metric.eval(x), geo.eta(x));
    if (!(k - e2 > 0.0))
      throw CausalityError("kappa - |eta|^2 = " + std::to_string(k - e2) + " <= 0 at " +
                           fmt_point(x) + " in geometry '" + geo.id + "'");
  }
  return geo;
}

StationaryGeometry make_geometry(const GeometrySpec& spec) {
  ChartedManifold base = make_manifold(spec.base);
  const bool polar = base.shape == ChartShape::polar_disc;

  ScalarField kappa;
  bool kappa_const = false;
  CallExpr k = parse_call(spec.kappa);
  if (k.name == "radial") {
    if (k.args.size() != 2) throw ConfigError("kappa 'radial' takes 2 arguments");
    double k0 = k.args[0], k2 = k.args[1];
    if (polar)
      kappa = [k0, k2](const Vec& x) { return k0 + k2 * x[0] * x[0]; };
    else
      kappa = [k0, k2](const Vec& x) { return k0 + k2 * x.squaredNorm(); };
  } else {
    char* end = nullptr;
    double k0 = std::strtod(spec.kappa.c_str(), &end);
    if (end == spec.kappa.c_str() || *end != '\0')
      throw ConfigError("unknown kappa expression '" + spec.kappa + "'");
    kappa = [k0](const Vec&) { return k0; };
    kappa_const = true;
  }

  CovectorField eta;
  bool eta_zero = false;
  CallExpr e = parse_call(spec.eta);
  if (e.name == "zero") {
    eta = [](const Vec& x) -> Vec { return Vec::Zero(x.size()); };
    eta_zero = true;
  } else if (e.name == "rotation") {
    if (e.args.size() != 1) throw ConfigError("eta 'rotation' takes 1 argument");
    double eps = e.args[0];
    if (polar) {
      eta = [eps](const Vec& x) -> Vec {
        Vec w(2);
        w << 0.0, eps * x[0] * x[0];
        return w;
      };
    } else {
      eta = [eps](const Vec& x) -> Vec {
        Vec w(2);
        w << -eps * x[1], eps * x[0];
        return w;
      };
    }
  } else if (e.name == "gradient") {
    if (e.args.size() != 1) throw ConfigError("eta 'gradient' takes 1 argument");
    if (polar) throw ConfigError("eta 'gradient' needs a Cartesian base");
    double eps = e.args[0];
    eta = [eps](const Vec& x) -> Vec {
      Vec w(2);
      w << eps * x[1], eps * x[0];
      return w;
    };
  } else {
    throw ConfigError("unknown eta expression '" + spec.eta + "'");
  }
  std::string id = spec.base + "|" + spec.kappa + "|" + spec.eta;
  return make_stationary(id, std::move(base), std::move(kappa), std::move(eta), eta_zero,
                         kappa_const);
}

StationaryGeometry make_geometry(std::string_view id) {
  CallExpr e = parse_call(id);
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  GeometrySpec spec;
  if (e.name == "minkowski" && e.args.empty()) {
  } else if (e.name == "rotation" && e.args.size() == 1) {
    spec.eta = "rotation(" + num(e.args[0]) + ")";
  } else if (e.name == "conformal-minkowski" && e.args.size() == 1) {
    spec.base = "conformal-disc(" + num(e.args[0]) + ")";
  } else if (e.name == "conformal-rotation" && e.args.size() == 2) {
    spec.base = "conformal-disc(" + num(e.args[1]) + ")";
    spec.eta = "rotation(" + num(e.args[0]) + ")";
  } else {
    throw ConfigError("unknown geometry id '" + std::string(id) + "'");
  }
  StationaryGeometry geo = make_geometry(spec);
  geo.id = std::string(id);
  return geo;
}

std::vector<std::string> registered_geometries() {
  return {"minkowski", "rotation(0.1)", "conformal-minkowski(0.3)", "conformal-rotation(0.1,0.3)"};
}

Mat LorentzMetric::at(const Vec& x) const {
  Vec tx(n + 1);
  tx[0] = 0.0;
  tx.tail(n) = x;
  return field.eval(tx);
}

double LorentzMetric::eval(const Vec& tx, const Vec& v, const Vec& w) const {
  return v.dot(field.eval(tx) * w);
}

LorentzMetric assemble(const StationaryGeometry& geo, bool conformal) {
  const int n = geo.n();
  LorentzMetric L;
  L.n = n;
  L.field.dim = n + 1;
  L.field.fd_step = geo.base.fd_step();
  L.field.constant_dirs = 1u;
  auto spatial_chart = geo.base.metric.chart_contains;
  if (spatial_chart)
    L.field.chart_contains = [spatial_chart, n](const Vec& tx) {
      return spatial_chart(tx.tail(n));
    };
  L.field.eval = [geo, conformal, n](const Vec& tx) -> Mat {
    const Vec x = tx.tail(n);
    Mat G(n + 1, n + 1);
    if (conformal) {
      const double c = geo.c(x);
      const Vec e = geo.eta_zero ? Vec(Vec::Zero(n)) : Vec(c * geo.eta(x));
      G(0, 0) = -1.0;
      G.block(0, 1, 1, n) = e.transpose();
      G.block(1, 0, n, 1) = e;
      G.block(1, 1, n, n) = c * geo.base.metric.eval(x);
    } else {
      const Mat g = geo.base.metric.eval(x);
      const Vec e = geo.eta(x);
      G(0, 0) = -(geo.kappa(x) - (geo.eta_zero ? 0.0 : eta_norm2(g, e)));
      G.block(0, 1, 1, n) = e.transpose();
      G.block(1, 0, n, 1) = e;
      G.block(1, 1, n, n) = g;
    }
    return G;
  };
  if (geo.eta_zero && geo.kappa_constant && geo.base.metric.derivative) {
    L.field.derivative = [geo, conformal, n](const Vec& tx, std::array<Mat, kMaxDim>& dg) {
      std::array<Mat, kMaxDim> db;
      const Vec x = tx.tail(n);
      geo.base.metric.derivative(x, db);
      const double s = conformal ? geo.c(x) : 1.0;
      dg[0] = Mat::Zero(n + 1, n + 1);
      for (int k = 0; k < n; ++k) {
        dg[k + 1] = Mat::Zero(n + 1, n + 1);
        dg[k + 1].block(1, 1, n, n) = s * db[k];
      }
    };
  }
  return L;
}

Mat inverse_conformal_metric(const StationaryGeometry& geo, const Vec& x) {
  const int n = geo.n();
  const Mat gc = geo.g_c(x);
  const Mat gci = gc.inverse();
  const Vec e = geo.eta_c(x);
  const Vec es = gci * e;
  const double q = 1.0 / (1.0 + e.dot(es));
  Mat H(n + 1, n + 1);
  H(0, 0) = -q;
  H.block(0, 1, 1, n) = q * es.transpose();
  H.block(1, 0, n, 1) = q * es;
  H.block(1, 1, n, n) = gci - q * es * es.transpose();
  return H;
}

LocalData local_data(const StationaryGeometry& geo, const Vec& x) {
  const int n = geo.n();
  LocalData d;
  if (geo.eta_zero && geo.kappa_constant) {
    const double c = geo.c(x);
    d.gc = c * geo.base.metric.eval(x);
    d.gc_inv = d.gc.inverse();
    d.eta_c = Vec::Zero(n);
    d.eta_sharp = Vec::Zero(n);
    d.q = 1.0;
    d.deta = Mat::Zero(n, n);
    d.static_flat_eta = true;
    // constant rescaling leaves the Christoffels unchanged
    if (geo.base.metric.derivative) {
      std::array<Mat, kMaxDim> dg;
      geo.base.metric.derivative(x, dg);
      d.gamma = christoffel(geo.base.metric.eval(x), dg);
    } else {
      d.gamma = christoffel(geo.base.metric, x);
    }
    return d;
  }
  auto both = [&geo, n](const Vec& p) -> MetricAndEta {
    const Mat g = geo.base.metric.eval(p);
    const Vec e = geo.eta_zero ? Vec(Vec::Zero(n)) : geo.eta(p);
    const double c = 1.0 / (geo.kappa(p) - (geo.eta_zero ? 0.0 : eta_norm2(g, e)));
    return {c * g, c * e};
  };
  const MetricAndEta here = both(x);
  d.gc = here.g;
  d.eta_c = here.e;
  d.gc_inv = d.gc.inverse();
  d.eta_sharp = d.gc_inv * d.eta_c;
  d.q = 1.0 / (1.0 + d.eta_c.dot(d.eta_sharp));
  std::array<Mat, kMaxDim> dg;
  d.deta = Mat::Zero(n, n);
  const double h = geo.base.fd_step();
  for (int k = 0; k < n; ++k) {
    MetricAndEta dk = partial4(both, x, k, h, geo.base.metric.chart_contains);
    dg[k] = dk.g;
    d.deta.col(k) = dk.e;
  }
  d.gamma = christoffel(d.gc, dg);
  return d;
}

double time_rate(const LocalData& d, const Vec& v, int sign) {
  const double ev = d.eta_c.dot(v);
  return ev + sign * std::sqrt(ev * ev + v.dot(d.gc * v));
}

Vec g_field(const LocalData& d, const Vec& v, int sign) {
  const int n = static_cast<int>(v.size());
  if (d.static_flat_eta) return Vec::Zero(n);
  // (nabla_v eta_c)(v)
  double nab = v.dot(d.deta.transpose() * v);
  const Vec gv = d.gamma.contract(v, v);
  nab -= d.eta_c.dot(gv);
  // d eta_c(., v) with (d eta)_{mk} = d_k eta_m - d_m eta_k
  const Vec deta_v = (d.deta - d.deta.transpose()) * v;
  const Vec F = d.gc_inv * deta_v - d.q * d.eta_sharp.dot(deta_v) * d.eta_sharp;
  return -d.q * nab * d.eta_sharp - time_rate(d, v, sign) * F;
}

Vec g_field(const StationaryGeometry& geo, const Vec& z, const Vec& v, int sign) {
  return g_field(local_data(geo, z), v, sign);
}

ConformalGaugeSplit conformal_gauge_decompose(const MetricField& gbar, const TensorField& T,
                                              ScalarField c, bool c_static) {
  const int m = T.rank + 1;
  MetricField gt = gbar;
  gt.derivative = nullptr;
  gt.eval = [gbar, c](const Vec& x) -> Mat { return c(x) * gbar.eval(x); };
  if (!c_static) gt.constant_dirs = 0;
  auto cpow = [c, m](const Vec& x) { return std::pow(c(x), 1 - m); };
  TensorField Tp = scaled(T, cpow);

  auto defect = [gbar, gt, T, Tp, cpow](const Vec& x) {
    return sym_cov_derivative(gt, T, x) * cpow(x) - sym_cov_derivative(gbar, Tp, x);
  };
  ConformalGaugeSplit out;
  out.T_prime = Tp;
  if (m == 1) {
    out.U_identically_zero = true;
    out.U = {T.dim, 0, [d = T.dim](const Vec&) { return SymTensor(d, 0); }};
    out.residual = [defect](const Vec& x) { return defect(x).max_abs(); };
    return out;
  }
  auto solveU = [gbar, defect](const Vec& x) {
    const Mat g = gbar.eval(x);
    return solve_ji(trace(defect(x), g.inverse()), g);
  };
  out.U = {T.dim, m - 2, solveU};
  out.residual = [gbar, defect](const Vec& x) {
    const Mat g = gbar.eval(x);
    return project_trace_free(defect(x), g).max_abs();
  };
  return out;
}

ConformalGaugeSplit conformal_gauge_decompose(const StationaryGeometry& geo, const TensorField& T,
                                              ScalarField c, bool c_static) {
  return conformal_gauge_decompose(assemble(geo, false).field, T, std::move(c), c_static);
}

}  // namespace lightray
