#include "lightray/suites.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "lightray/artifacts.hpp"
#include "lightray/decomposition.hpp"
#include "lightray/errors.hpp"
#include "lightray/foliation.hpp"
#include "lightray/parallel.hpp"
#include "lightray/reconstruction.hpp"
#include "lightray/theorem2.hpp"

namespace lightray {

// ---------------------------------------------------------------- config

namespace {

const json& empty_object() {
  static const json e = json::object();
  return e;
}

}  // namespace

Config::Config(json root)
    : Config(std::make_shared<const json>(std::move(root)), std::make_shared<json>(json::object()),
             nullptr, "") {}

Config::Config(std::shared_ptr<const json> root, std::shared_ptr<json> tol, const json* node,
               std::string prefix)
    : root_(std::move(root)), tol_(std::move(tol)), node_(node ? node : root_.get()),
      prefix_(std::move(prefix)) {
  if (!node_->is_object())
    throw ConfigError((prefix_.empty() ? std::string("config") : prefix_) + ": expected an object");
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    std::string what = e.what();
    std::replace(what.begin(), what.end(), '\n', ' ');
    throw ConfigError("config: " + what);
  }
  return Config(std::move(j));
}

std::string Config::path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

const json* Config::find(const std::string& key) const {
  auto it = node_->find(key);
  return it == node_->end() || it->is_null() ? nullptr : &*it;
}

bool Config::has(const std::string& key) const { return find(key) != nullptr; }

Config Config::section(const std::string& key) const {
  const json* j = find(key);
  return Config(root_, tol_, j ? j : &empty_object(), path(key));
}

double Config::number(const std::string& key, double fallback) const {
  const json* j = find(key);
  if (!j) return fallback;
  if (!j->is_number()) throw ConfigError(path(key) + ": expected a number");
  const double v = j->get<double>();
  if (!std::isfinite(v)) throw ConfigError(path(key) + ": not finite");
  return v;
}

int Config::integer(const std::string& key, int fallback, int min) const {
  const json* j = find(key);
  if (!j) return fallback;
  if (!j->is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
  const long long v = j->get<long long>();
  if (v < min || v > 1'000'000) throw ConfigError(path(key) + ": out of range (" + std::to_string(v) + ")");
  return static_cast<int>(v);
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  const json* j = find(key);
  if (!j) return fallback;
  if (!j->is_string()) throw ConfigError(path(key) + ": expected a string");
  return j->get<std::string>();
}

bool Config::flag(const std::string& key, bool fallback) const {
  const json* j = find(key);
  if (!j) return fallback;
  if (!j->is_boolean()) throw ConfigError(path(key) + ": expected true or false");
  return j->get<bool>();
}

std::vector<double> Config::numbers(const std::string& key, std::vector<double> fallback) const {
  const json* j = find(key);
  if (!j) return fallback;
  if (!j->is_array() || j->empty()) throw ConfigError(path(key) + ": expected a non-empty array of numbers");
  std::vector<double> out;
  for (const json& e : *j) {
    if (!e.is_number()) throw ConfigError(path(key) + ": expected a non-empty array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<int> Config::integers(const std::string& key, std::vector<int> fallback) const {
  const json* j = find(key);
  if (!j) return fallback;
  if (!j->is_array() || j->empty()) throw ConfigError(path(key) + ": expected a non-empty array of integers");
  std::vector<int> out;
  for (const json& e : *j) {
    if (!e.is_number_integer()) throw ConfigError(path(key) + ": expected a non-empty array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

std::vector<std::string> Config::texts(const std::string& key, std::vector<std::string> fallback) const {
  const json* j = find(key);
  if (!j) return fallback;
  if (!j->is_array() || j->empty()) throw ConfigError(path(key) + ": expected a non-empty array of strings");
  std::vector<std::string> out;
  for (const json& e : *j) {
    if (!e.is_string()) throw ConfigError(path(key) + ": expected a non-empty array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

double Config::tolerance(const std::string& key, double fallback) const {
  double v = fallback;
  auto t = root_->find("tolerances");
  if (t != root_->end() && !t->is_null()) {
    if (!t->is_object()) throw ConfigError("tolerances: expected an object");
    auto it = t->find(key);
    if (it != t->end()) {
      if (!it->is_number()) throw ConfigError("tolerances." + key + ": expected a number");
      v = it->get<double>();
    }
  }
  if (!(v > 0) || !std::isfinite(v)) throw ConfigError("tolerances." + key + ": must be positive");
  (*tol_)[key] = v;
  return v;
}

json Config::tolerances_used() const { return *tol_; }

StationaryGeometry Config::geometry_value(const json& value, const std::string& where) const {
  try {
    if (value.is_string()) return make_geometry(value.get<std::string>());
    if (!value.is_object()) throw ConfigError("expected an id string or an object");
    Config g(root_, tol_, &value, where);
    const std::string kind = g.text("kind", "stationary");
    if (kind != "stationary") throw ConfigError("kind: only 'stationary' is supported, got '" + kind + "'");
    if (g.has("id")) return make_geometry(g.text("id", ""));
    GeometrySpec spec;
    spec.base = g.text("base", spec.base);
    spec.kappa = g.text("kappa", spec.kappa);
    spec.eta = g.text("eta", spec.eta);
    try {
      return make_geometry(spec);
    } catch (const ConfigError& e) {
      // point at the sub-field the parser complained about
      const std::string what = e.what();
      for (const char* key : {"kappa", "eta", "base"})
        if (what.find(key) != std::string::npos) throw ConfigError(g.path(key) + ": " + what);
      throw;
    }
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(where, 0) == 0) throw;
    throw ConfigError(where + ": " + what);
  } catch (const CausalityError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

StationaryGeometry Config::geometry(const std::string& key, const std::string& fallback) const {
  const json* j = find(key);
  return geometry_value(j ? *j : json(fallback), path(key));
}

// ---------------------------------------------------------------- reports

void SuiteResult::at_most(std::string name, double value, double tol) {
  criteria.push_back({std::move(name), value, tol, "<=", value <= tol});
}

void SuiteResult::at_least(std::string name, double value, double bound) {
  criteria.push_back({std::move(name), value, bound, ">=", value >= bound});
}

void SuiteResult::flag(std::string name, bool ok) {
  criteria.push_back({std::move(name), ok ? 1.0 : 0.0, 1.0, "==", ok});
}

void SuiteResult::merge(const std::string& prefix, SuiteResult other) {
  for (Criterion& c : other.criteria) {
    c.name = prefix + "." + c.name;
    criteria.push_back(std::move(c));
  }
  data[prefix] = std::move(other.data);
  for (auto& [name, body] : other.artifacts) artifacts[name] = std::move(body);
}

bool SuiteResult::pass() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

json report_json(const SuiteResult& r, const Config& cfg, std::uint64_t seed) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.root().dump())));
  json crit = json::array();
  for (const Criterion& c : r.criteria)
    crit.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"op", c.op},
                    {"pass", c.pass}});
  return {{"schema", "report_v1"},  {"suite", r.suite},
          {"seed", seed},           {"config_hash", hash},
          {"tolerances", cfg.tolerances_used()},
          {"pass", r.pass()},       {"criteria", std::move(crit)},
          {"data", r.data}};
}

// ---------------------------------------------------------------- test data

SpacetimeTensorField random_bump_field(int n, int rank, std::uint64_t seed, const Vec& centre,
                                       double radius, double t0, double t_radius) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  const int N = n + 1;
  const int P = SymLayout::get(N, rank).size();
  std::vector<double> coef(static_cast<size_t>(P) * (N + 1));
  for (double& c : coef) c = U(rng);
  SpacetimeTensorField f;
  f.field = {N, rank, [=](const Vec& tx) {
               SymTensor out(N, rank);
               const double q = (tx[0] - t0) * (tx[0] - t0) / (t_radius * t_radius) +
                                (tx.tail(n) - centre).squaredNorm() / (radius * radius);
               if (q >= 1.0) return out;
               const double b = std::exp(-1.0 / (1.0 - q));
               for (int p = 0; p < P; ++p) {
                 const double* c = &coef[static_cast<size_t>(p) * (N + 1)];
                 double v = c[0];
                 for (int a = 0; a < N; ++a) v += c[a + 1] * tx[a];
                 out[p] = b * v;
               }
               return out;
             }};
  f.t_min = t0 - t_radius;
  f.t_max = t0 + t_radius;
  f.spatial = SupportBall{centre, radius};
  return f;
}

namespace {

using std::numbers::pi;

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

RayOptions ray_options(const Config& c) {
  RayOptions o;
  o.step = c.number("ray_step", 0.0);
  if (o.step < 0) throw ConfigError(c.path("ray_step") + ": must be >= 0");
  return o;
}

std::vector<LiftedRay> lifted_rays(const StationaryGeometry& geo, int np, int nd, const RayOptions& ro) {
  const std::vector<InflowSample> in = sample_inflow(geo.conformal_manifold(), np, nd);
  std::vector<LiftedRay> out(in.size());
  parallel_for(in.size(), [&](size_t i) {
    out[i] = lift_ray(geo, integrate_g_curve(geo, in[i].x, in[i].v, +1, ro), 0.0);
  });
  return out;
}

std::vector<GaussianBlob> blobs_from(const Config& c, std::vector<GaussianBlob> fallback) {
  if (!c.has("blobs")) return fallback;
  const json& arr = c.raw()["blobs"];
  if (!arr.is_array() || arr.empty()) throw ConfigError(c.path("blobs") + ": expected a non-empty array");
  std::vector<GaussianBlob> out;
  for (size_t i = 0; i < arr.size(); ++i) {
    const std::string where = c.path("blobs") + "[" + std::to_string(i) + "]";
    if (!arr[i].is_object()) throw ConfigError(where + ": expected an object");
    const Config b = Config(json{{"blob", arr[i]}}).section("blob");
    GaussianBlob g;
    std::vector<double> centre;
    try {
      centre = b.numbers("centre", {0.0, 0.0});
      g.sx = b.number("sx", g.sx);
      g.t0 = b.number("t0", g.t0);
      g.st = b.number("st", g.st);
      g.amplitude = b.number("amplitude", g.amplitude);
    } catch (const ConfigError& e) {
      throw ConfigError(where + "." + std::string(e.what()).substr(5));
    }
    if (centre.size() != 2) throw ConfigError(where + ".centre: expected two numbers");
    if (!(g.sx > 0) || !(g.st > 0)) throw ConfigError(where + ": sx and st must be positive");
    g.centre = vec2(centre[0], centre[1]);
    if (g.centre.norm() + 2 * g.sx >= 1.0)
      throw ConfigError(where + ": blob too close to the boundary (|centre| + 2 sx >= 1)");
    out.push_back(g);
  }
  return out;
}

double t_extent(std::span<const GaussianBlob> blobs) {
  double lo = 1e300, hi = -1e300;
  for (const GaussianBlob& b : blobs) {
    lo = std::min(lo, b.t0 - 4 * b.st);
    hi = std::max(hi, b.t0 + 4 * b.st);
  }
  return hi - lo;
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
  const int n = static_cast<int>(std::ceil((hi - lo) / step - 1e-9));
  std::vector<double> T(n + 1);
  for (int k = 0; k <= n; ++k) T[k] = lo + k * step;
  return T;
}

}  // namespace

// ---------------------------------------------------------------- 1: gauge kernel

SuiteResult gauge_suite(const Config& cfg, std::uint64_t seed) {
  SuiteResult r{"verify-gauge"};
  const auto ids = cfg.texts("geometries", {"minkowski", "rotation(0.1)"});
  const auto ranks = cfg.integers("ranks", {1, 2, 3});
  const int pairs = cfg.integer("pairs", 50);
  const int np = cfg.integer("rays_np", 20), nd = cfg.integer("rays_nd", 10);
  const RayOptions ro = ray_options(cfg);
  const double tol = cfg.tolerance("gauge_relative", 1e-5);
  const double tol_abs = cfg.tolerance("gauge_absolute", 1e-6);
  for (int m : ranks)
    if (m < 1 || m > 3) throw ConfigError(cfg.path("ranks") + ": ranks must be 1, 2 or 3");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0, 1);
  for (size_t gi = 0; gi < ids.size(); ++gi) {
    const StationaryGeometry geo = cfg.geometry_value(ids[gi], cfg.path("geometries") + "[" + std::to_string(gi) + "]");
    const std::vector<LiftedRay> lifted = lifted_rays(geo, np, nd, ro);
    std::vector<PreparedRay> rays(lifted.size());
    parallel_for(lifted.size(), [&](size_t i) { rays[i] = prepare_ray(geo, lifted[i]); });

    json g = json::object();
    for (int m : ranks) {
      double worst_rel = 0, worst_abs = 0, min_scale = 1e300;
      for (int k = 0; k < pairs; ++k) {
        // supports stay inside |x| <= 0.8; the rays start at t = 0 on the boundary and
        // cross the centre near t = 1, so t0 near 1 puts the support on the rays
        auto draw = [&](int rank, double rmax) {
          const double a = 2 * pi * U(rng), rho = 0.2 * std::sqrt(U(rng));
          const double radius = 0.4 + (rmax - 0.4) * U(rng);
          const double t0 = 0.7 + 0.6 * U(rng), tr = 0.5 + 0.5 * U(rng);
          return random_bump_field(2, rank, rng(), vec2(rho * std::cos(a), rho * std::sin(a)), radius, t0, tr);
        };
        const SpacetimeTensorField T = draw(m - 1, 0.6);
        std::optional<SpacetimeTensorField> Uf;
        if (m >= 2) Uf = draw(m - 2, 0.6);
        const GaugeKernelResult res =
            verify_gauge_kernel(geo, T, Uf ? &*Uf : nullptr, std::span<const PreparedRay>(rays));
        worst_abs = std::max(worst_abs, res.max_abs);
        worst_rel = std::max(worst_rel, res.field_scale > 0 ? res.max_abs / res.field_scale : res.max_abs);
        min_scale = std::min(min_scale, res.field_scale);
      }
      const std::string tag = ids[gi] + ".m" + std::to_string(m);
      r.at_most(tag + ".relative", worst_rel, tol);
      g["m" + std::to_string(m)] = {{"max_abs", worst_abs}, {"max_relative", worst_rel}, {"min_field_scale", min_scale}};
      if (geo.eta_zero) r.at_most(tag + ".absolute", worst_abs, tol_abs);
    }
    g["rays"] = rays.size();
    r.data[ids[gi]] = g;
  }
  r.data["pairs"] = pairs;
  return r;
}

// ---------------------------------------------------------------- 2: null preservation

SuiteResult null_suite(const Config& cfg) {
  SuiteResult r{"null-preservation"};
  const auto ids = cfg.texts("geometries", registered_geometries());
  const int np = cfg.integer("rays_np", 10), nd = cfg.integer("rays_nd", 10);
  const RayOptions ro = ray_options(cfg);
  const double tol = cfg.tolerance("null_defect", 1e-8);
  double worst = 0;
  for (size_t gi = 0; gi < ids.size(); ++gi) {
    const StationaryGeometry geo = cfg.geometry_value(ids[gi], cfg.path("geometries") + "[" + std::to_string(gi) + "]");
    const auto in = sample_inflow(geo.conformal_manifold(), np, nd);
    std::vector<double> lifted(in.size()), direct(in.size());
    parallel_for(in.size(), [&](size_t i) {
      lifted[i] = null_defect(geo, lift_ray(geo, integrate_g_curve(geo, in[i].x, in[i].v, +1, ro), 0.0));
      direct[i] = null_defect(geo, integrate_null_geodesic_direct(geo, 0.0, in[i].x, in[i].v, +1, ro));
    });
    const double l = *std::max_element(lifted.begin(), lifted.end());
    const double d = *std::max_element(direct.begin(), direct.end());
    r.data[ids[gi]] = {{"lifted_max", l}, {"direct_max", d}, {"rays", in.size()}};
    worst = std::max({worst, l, d});
  }
  r.at_most("max_defect", worst, tol);

  // RK4 order on the direct integrator, where the defect is truncation, not rounding
  const Config oc = cfg.section("order");
  const StationaryGeometry geo = oc.geometry("geometry", "conformal-rotation(0.3,0.3)");
  const double coarse = oc.number("coarse_step", 0.08);
  if (!(coarse > 0)) throw ConfigError(oc.path("coarse_step") + ": must be positive");
  const InflowSample s = make_inflow(geo.conformal_manifold(), oc.number("boundary_param", 0.4),
                                     oc.number("dir_param", 0.5));
  const double e1 = null_defect(geo, integrate_null_geodesic_direct(geo, 0, s.x, s.v, 1, RayOptions{coarse}));
  const double e2 = null_defect(geo, integrate_null_geodesic_direct(geo, 0, s.x, s.v, 1, RayOptions{coarse / 2}));
  r.at_least("halving_ratio", e1 / e2, cfg.tolerance("halving_ratio", 8.0));
  r.data["order"] = {{"coarse_defect", e1}, {"fine_defect", e2}};
  return r;
}

// ---------------------------------------------------------------- 3: reduced vs direct

SuiteResult direct_suite(const Config& cfg) {
  SuiteResult r{"reduced-vs-direct"};
  const auto ids = cfg.texts("geometries", registered_geometries());
  const int np = cfg.integer("rays_np", 10), nd = cfg.integer("rays_nd", 10);
  const RayOptions ro = ray_options(cfg);
  const double tol = cfg.tolerance("reduced_vs_direct", 1e-6);
  for (size_t gi = 0; gi < ids.size(); ++gi) {
    const StationaryGeometry geo = cfg.geometry_value(ids[gi], cfg.path("geometries") + "[" + std::to_string(gi) + "]");
    const auto in = sample_inflow(geo.conformal_manifold(), np, nd);
    std::vector<double> err(in.size());
    parallel_for(in.size(), [&](size_t i) {
      const LiftedRay a = lift_ray(geo, integrate_g_curve(geo, in[i].x, in[i].v, +1, ro), 0.0);
      const LiftedRay b = integrate_null_geodesic_direct(geo, 0.0, in[i].x, in[i].v, +1, ro);
      const int K = std::min(a.nodes.n_uniform, b.nodes.n_uniform);
      double e = 0;
      for (int k = 0; k < K; ++k) e = std::max({e, (a.b[k] - b.b[k]).norm(), std::abs(a.a[k] - b.a[k])});
      e = std::max({e, (a.b.back() - b.b.back()).norm(), std::abs(a.a.back() - b.a.back())});
      err[i] = e;
    });
    const double worst = *std::max_element(err.begin(), err.end());
    r.at_most(ids[gi], worst, tol);
    r.data[ids[gi]] = {{"max_chart_distance", worst}, {"rays", in.size()}};
  }
  return r;
}

// ---------------------------------------------------------------- sinogram

SuiteResult sinogram_suite(const Config& cfg) {
  SuiteResult r{"sinogram"};
  const StationaryGeometry geo = cfg.geometry("geometry", "rotation(0.1)");
  const auto blobs = blobs_from(cfg, {{vec2(0.2, -0.1), 0.15, 0.0, 0.5, 1.0}});
  const int np = cfg.integer("rays_np", 24), nd = cfg.integer("rays_nd", 12);
  const double dT = cfg.number("dT", 0.1);
  if (!(dT > 0)) throw ConfigError(cfg.path("dT") + ": must be positive");
  const RayOptions ro = ray_options(cfg);
  const SpacetimeTensorField f = gaussian_phantom(blobs);
  const double reach = cfg.number("time_reach", 3.0);  // upper bound of a(s) along a ray
  const std::vector<double> T = uniform_grid(f.t_min - reach, f.t_max + dT, dT);
  const Sinogram s = forward_scan(geo, f, np, nd, T, ro);
  // shifting the phantom by one grid step moves the data by one column
  const Sinogram sh = forward_scan(geo, time_shifted(f, dT), np, nd, T, ro);
  double shift = 0;
  for (size_t i = 0; i < s.rays(); ++i)
    for (size_t k = 1; k < T.size(); ++k) shift = std::max(shift, std::abs(sh(i, k) - s(i, k - 1)));
  r.at_most("time_shift", shift / std::max(s.max_abs(), 1e-300), cfg.tolerance("time_shift", 1e-9));
  r.data = {{"rays", s.rays()}, {"T_count", T.size()}, {"max_abs", s.max_abs()}, {"geometry", geo.id}};
  std::ostringstream csv;
  s.write_csv(csv);
  r.artifacts["sinogram.csv"] = csv.str();
  r.artifacts["sinogram.svg"] =
      svg_heatmap(sinogram_matrix(s), "L f over (ray, T): " + geo.id, false, "ray (point-major)", "T");
  return r;
}

// ---------------------------------------------------------------- 4: Fourier slice

SuiteResult fourier_slice_suite(const Config& cfg) {
  SuiteResult r{"fourier-slice"};
  const auto ids = cfg.texts("geometries", {"minkowski", "rotation(0.1)"});
  const auto taus = cfg.numbers("taus", {0.0, 0.5, 1.0, 2.0, 4.0});
  const auto blobs = blobs_from(cfg, {{vec2(0.1, -0.2), 0.3, 0.5, 0.4, 1.0}});
  const int np = cfg.integer("rays_np", 3), nd = cfg.integer("rays_nd", 3);
  const double dT = cfg.number("dT", 0.05);
  if (!(dT > 0)) throw ConfigError(cfg.path("dT") + ": must be positive");
  const RayOptions ro = ray_options(cfg);
  const double tol = cfg.tolerance("fourier_slice", 1e-4);
  const SpacetimeTensorField f = gaussian_phantom(blobs);
  for (size_t gi = 0; gi < ids.size(); ++gi) {
    const StationaryGeometry geo = cfg.geometry_value(ids[gi], cfg.path("geometries") + "[" + std::to_string(gi) + "]");
    const std::vector<LiftedRay> rays = lifted_rays(geo, np, nd, ro);
    std::vector<std::vector<double>> res(rays.size(), std::vector<double>(taus.size()));
    parallel_for(rays.size(), [&](size_t i) {
      const std::vector<double> T = covering_T_grid(f, rays[i], dT);
      for (size_t k = 0; k < taus.size(); ++k) {
        const SliceComparison sc = fourier_slice(geo, f, rays[i], taus[k], T);
        res[i][k] = std::abs(sc.lhs - sc.rhs) / std::max(std::abs(sc.lhs), sc.scale);
      }
    });
    json per_tau = json::object();
    for (size_t k = 0; k < taus.size(); ++k) {
      double w = 0;
      for (const auto& row : res) w = std::max(w, row[k]);
      char name[32];
      std::snprintf(name, sizeof name, "tau=%g", taus[k]);
      r.at_most(ids[gi] + "." + name, w, tol);
      per_tau[name] = w;
    }
    r.data[ids[gi]] = per_tau;
  }
  return r;
}

// ---------------------------------------------------------------- 5: moment identity

SuiteResult moment_suite(const Config& cfg, std::uint64_t seed) {
  SuiteResult r{"moment-identity"};
  const auto ranks = cfg.integers("ranks", {1, 2, 3});
  const int samples = cfg.integer("samples", 20), j_max = cfg.integer("j_max", 3);
  const int np = cfg.integer("rays_np", 3), nd = cfg.integer("rays_nd", 2);
  const RayOptions ro = ray_options(cfg);
  const double tol = cfg.tolerance("moment_identity", 1e-6);
  for (int m : ranks)
    if (m < 1 || m > 3) throw ConfigError(cfg.path("ranks") + ": ranks must be 1, 2 or 3");
  const ChartedManifold M = flat_disc();
  std::vector<SpatialCurve> curves;
  for (const InflowSample& s : sample_inflow(M, np, nd)) curves.push_back(integrate_geodesic(M, s.x, s.v, ro));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int m : ranks) {
    const int ru = m - 1;
    const int P = SymLayout::get(2, ru).size();
    std::vector<double> res(samples);
    std::vector<std::vector<double>> coefs(samples, std::vector<double>(5 * P));
    for (auto& c : coefs)
      for (double& x : c) x = U(rng);
    parallel_for(samples, [&](size_t q) {
      // (1 - |x|^2) times a random quadratic in each component: vanishes on the boundary
      const std::vector<double> a = coefs[q];
      const TensorField u{2, ru, [a, ru, P](const Vec& x) {
                            SymTensor t(2, ru);
                            for (int p = 0; p < P; ++p) {
                              const double* c = &a[5 * p];
                              t[p] = (1 - x.squaredNorm()) *
                                     (c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[1] + c[4] * x[1] * x[1]);
                            }
                            return t;
                          }};
      const TensorField du = sym_cov_derivative(M.metric, u);
      double w = 0;
      for (const SpatialCurve& c : curves)
        for (int j = 1; j <= j_max; ++j) {
          const cplx lhs = moment_transform(du, c, j);
          const cplx rhs = cplx(0, -j) * moment_transform(u, c, j - 1);
          w = std::max(w, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
        }
      res[q] = w;
    });
    const double worst = *std::max_element(res.begin(), res.end());
    r.at_most("rank" + std::to_string(m), worst, tol);
    r.data["rank" + std::to_string(m)] = worst;
  }
  r.data["curves"] = curves.size();
  return r;
}

// ---------------------------------------------------------------- 6: decompositions

namespace {

template <class F>
TensorField by_components(int rank, F f) {
  return {2, rank, [rank, f](const Vec& x) {
            SymTensor t(2, rank);
            for (int q = 0; q <= rank; ++q) {
              std::vector<int> idx(rank, 0);
              for (int k = rank - q; k < rank; ++k) idx[k] = 1;
              t[t.layout().packed_of(idx)] = f(x, q);
            }
            return t;
          }};
}

// vanishes on the edges of the unit square; trace-free variant for rank 2 has yy = -xx
TensorField square_potential(int rank, bool trace_free) {
  return by_components(rank, [rank, trace_free](const Vec& x, int q) {
    const double b = std::sin(pi * x[0]) * std::sin(pi * x[1]);
    const bool flip = trace_free && rank == 2 && q == 2;
    if (flip) q = 0;
    const double v = b * (1 + x[0] * x[1] + 0.5 * (q + 1) * x[0] * x[0] - 0.3 * q * x[1]);
    return flip ? -v : v;
  });
}

}  // namespace

SuiteResult decomposition_suite(const Config& cfg) {
  SuiteResult r{"decompose"};
  const int n0 = cfg.integer("grid_n", 32, 32);
  const double res_tol = cfg.tolerance("delta_residual", 1e-8);
  const double rt_tol = cfg.tolerance("round_trip", 1e-10);
  const double ratio = cfg.tolerance("convergence_ratio", 3.0);
  const double grid_tol = cfg.tolerance("gauge_modes", 2e-2);
  const MetricField& flat = flat_square().metric;

  for (int m = 1; m <= 3; ++m) {
    const TensorField p = square_potential(m - 1, false);
    const TensorField dp = sym_cov_derivative(flat, p);
    double eh[2], es[2], resid = 0, trip = 0;
    for (int k = 0; k < 2; ++k) {
      const GridSpec g{GridDomain::square, n0 << k};
      const HelmholtzSolver S(g, m, false);
      const GridField omega = GridField::sample(g, dp);
      const Helmholtz h = S.solve(omega);
      resid = std::max(resid, h.report.residual);
      trip = std::max(trip, (h.omega_s + S.apply_ds(h.h)).max_abs_diff(omega) / omega.max_abs());
      eh[k] = h.h.max_abs_diff(GridField::sample(g, p));
      es[k] = h.omega_s.max_abs();
      if (m == 2 && k == 1) {
        std::ostringstream os;
        h.h.write_csv(os);
        r.artifacts["helmholtz_h_m2.csv"] = os.str();
      }
    }
    const std::string tag = "helmholtz.m" + std::to_string(m);
    r.at_most(tag + ".delta_residual", resid, res_tol);
    r.at_most(tag + ".round_trip", trip, rt_tol);
    r.at_least(tag + ".h_error_ratio", eh[0] / eh[1], ratio);
    r.at_least(tag + ".omega_s_ratio", es[0] / es[1], ratio);
    r.data[tag] = {{"h_error", {eh[0], eh[1]}}, {"omega_s", {es[0], es[1]}}};
  }

  for (int m = 2; m <= 3; ++m) {
    // pure gauge input: omega^tfs and omega^t should vanish up to the grid error
    const TensorField h0 = square_potential(m - 1, true);
    const TensorField omega_c = sym_cov_derivative(flat, h0);
    double e[2], resid = 0, trip = 0, trace = 0, rel = 0;
    for (int k = 0; k < 2; ++k) {
      const GridSpec g{GridDomain::square, n0 << k};
      const HelmholtzSolver S(g, m, true);
      const GridField omega = GridField::sample(g, omega_c);
      const TfHelmholtz t = S.solve_tf(omega);
      resid = std::max(resid, t.report.residual);
      trace = std::max({trace, t.trace_defect, t.h_trace_defect});
      const GridField back = t.omega_tfs + grid_metric_product(t.omega_t) + S.apply_ds(t.h);
      trip = std::max(trip, back.max_abs_diff(omega) / omega.max_abs());
      e[k] = std::max(t.omega_tfs.max_abs(), t.omega_t.max_abs());
      rel = e[k] / omega.max_abs();
    }
    const std::string tag = "trace_free.m" + std::to_string(m);
    r.at_most(tag + ".delta_residual", resid, res_tol);
    r.at_most(tag + ".trace_defect", trace, res_tol);
    r.at_most(tag + ".round_trip", trip, rt_tol);
    r.at_least(tag + ".gauge_mode_ratio", e[0] / e[1], ratio);
    r.at_most(tag + ".gauge_modes", rel, grid_tol);
    r.data[tag] = {{"gauge_modes", {e[0], e[1]}}};
  }
  r.data["grids"] = {n0, 2 * n0};
  return r;
}

// ---------------------------------------------------------------- 7: reconstruction

SuiteResult reconstruction_suite(const Config& cfg) {
  SuiteResult r{"reconstruct"};
  const StationaryGeometry geo = cfg.geometry("geometry", "minkowski");
  const auto blobs = blobs_from(cfg, {{vec2(0.1, -0.05), 0.2, 0.0, 3.0, 1.0}});
  const int np = cfg.integer("rays_np", 128), nd = cfg.integer("rays_nd", 128);
  const int grid_n = cfg.integer("grid_n", 64, 8);
  const double dT = cfg.number("dT", 1.0);
  if (!(dT > 0)) throw ConfigError(cfg.path("dT") + ": must be positive");
  RayOptions ro = ray_options(cfg);
  if (!cfg.has("ray_step")) ro.step = 0.02;
  const double oversample = cfg.number("oversample", 2.0);
  double st_min = 1e300;
  for (const GaussianBlob& b : blobs) st_min = std::min(st_min, b.st);
  const double tau_max = cfg.number("tau_max_sigma", 4.3) / st_min;
  const double err_tol = cfg.tolerance("reconstruction_l2", 0.08);
  const double im_tol = cfg.tolerance("imaginary_residual", 1e-2);

  const SpacetimeTensorField f = gaussian_phantom(blobs);
  const std::vector<double> T = uniform_grid(f.t_min - geo.base.diameter, f.t_max, dT);
  const Sinogram s = forward_scan(geo, f, np, nd, T, ro);
  ReconstructionOptions opt = nyquist_tau_grid(t_extent(blobs), tau_max, oversample);
  opt.grid = PixelGrid{grid_n};
  opt.t_out = cfg.numbers("t_out", {-2.0, 0.0, 2.0});
  opt.inversion.lambda_rel = cfg.number("lambda_rel", opt.inversion.lambda_rel);
  if (!(opt.inversion.lambda_rel > 0)) throw ConfigError(cfg.path("lambda_rel") + ": must be positive");
  const Reconstruction rec = reconstruct_scalar(geo, s, opt);
  const double err = relative_l2_error(rec, f);
  r.at_most("relative_l2", err, err_tol);
  r.at_most("imaginary_residual", rec.imaginary_residual, im_tol);
  r.data = {{"relative_l2", err},
            {"imaginary_residual", rec.imaginary_residual},
            {"taus", rec.taus},
            {"cg_iterations", rec.iterations},
            {"rays", s.rays()},
            {"T_count", T.size()},
            {"grid_n", grid_n}};

  const PixelGrid& G = rec.grid;
  for (size_t k = 0; k < rec.t.size(); ++k) {
    Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(G.n, G.n);
    for (int i = 0; i < G.n; ++i)
      for (int j = 0; j < G.n; ++j)
        if (G.inside(i, j)) {
          Vec tx(3);
          tx << rec.t[k], G.centre(i), G.centre(j);
          truth(i, j) = f(tx)[0];
        }
    char t[32];
    std::snprintf(t, sizeof t, "%g", rec.t[k]);
    const std::string stem = "frame_" + std::to_string(k);
    r.artifacts[stem + ".csv"] = image_csv(rec.frames[k], G);
    r.artifacts[stem + ".svg"] = svg_heatmap(rec.frames[k], std::string("reconstruction, t = ") + t, false, "x", "y");
    r.artifacts[stem + "_error.svg"] =
        svg_heatmap(rec.frames[k] - truth, std::string("reconstruction - phantom, t = ") + t, true, "x", "y");
  }
  if (cfg.flag("write_sinogram", false)) {
    std::ostringstream csv;
    s.write_csv(csv);
    r.artifacts["sinogram.csv"] = csv.str();
  }
  return r;
}

// ---------------------------------------------------------------- 8: conformal suites

SuiteResult conformal_suite(const Config& cfg, std::uint64_t seed) {
  SuiteResult r{"conformal-check"};
  const StationaryGeometry geo = cfg.geometry("geometry", "rotation(0.1)");
  const double a = cfg.number("c_spatial", 0.3), b = cfg.number("c_time", 0.1);
  const ScalarField c = [a, b](const Vec& x) { return std::exp(a * std::sin(x[1]) * std::cos(x[2]) + b * x[0]); };
  const int fields = cfg.integer("fields", 3), np = cfg.integer("rays_np", 3), nd = cfg.integer("rays_nd", 3);
  const int points = cfg.integer("points", 10);
  const RayOptions ro = ray_options(cfg);
  const double reparam_tol = cfg.tolerance("reparametrization", 1e-5);
  const double lemma_tol = cfg.tolerance("conformal_gauge", 1e-6);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  const std::vector<LiftedRay> rays = lifted_rays(geo, np, nd, ro);
  for (int m : {0, 2}) {
    std::vector<SpacetimeTensorField> fs;
    for (int k = 0; k < fields; ++k) fs.push_back(random_bump_field(2, m, rng(), vec2(0.1 * U(rng), 0.1 * U(rng)), 0.7, 1.0, 0.9));
    std::vector<double> res(rays.size() * fs.size()), size(res.size());
    parallel_for(res.size(), [&](size_t q) {
      const ConformalCheck cc = conformal_reparam_check(geo, fs[q % fs.size()], c, false, rays[q / fs.size()]);
      res[q] = std::abs(cc.lhs - cc.rhs);
      size[q] = std::abs(cc.rhs);
    });
    const double worst = *std::max_element(res.begin(), res.end());
    r.at_most("reparametrization.m" + std::to_string(m), worst, reparam_tol);
    r.data["reparametrization_m" + std::to_string(m)] = {
        {"max_residual", worst}, {"max_transform", *std::max_element(size.begin(), size.end())}};
  }

  // T of rank m - 1 with smooth random trigonometric components
  const LorentzMetric L = assemble(geo, false);
  std::vector<Vec> pts;
  for (int k = 0; k < points; ++k) {
    Vec x(3);
    x << U(rng), 0.6 * U(rng), 0.6 * U(rng);
    pts.push_back(x);
  }
  for (int m : {1, 2}) {
    const int rt = m - 1, P = SymLayout::get(3, rt).size();
    std::vector<double> co(6 * P);
    for (double& v : co) v = U(rng);
    const TensorField T{3, rt, [co, rt, P](const Vec& x) {
                          SymTensor t(3, rt);
                          for (int p = 0; p < P; ++p) {
                            const double* k = &co[6 * p];
                            t[p] = k[0] * std::sin(k[1] * x[0] + k[2] * x[1] + k[3] * x[2]) + k[4] * x[1] * x[2] + k[5];
                          }
                          return t;
                        }};
    const ConformalGaugeSplit split = conformal_gauge_decompose(geo, T, c, false);
    double worst = 0, closed = 0;
    for (const Vec& x : pts) {
      worst = std::max(worst, split.residual(x));
      if (m == 2) {
        // U = -g~^{lk} d_k phi T_l, phi = -log(c) / 2
        const Mat gt = L.field.eval(x) * c(x);
        Vec dphi(3);
        for (int k = 0; k < 3; ++k) {
          Vec p = x, q = x;
          p[k] += 1e-5;
          q[k] -= 1e-5;
          dphi[k] = -0.5 * (std::log(c(p)) - std::log(c(q))) / 2e-5;
        }
        const SymTensor Tx = T(x);
        const Vec Tl = (Vec(3) << Tx[0], Tx[1], Tx[2]).finished();
        closed = std::max(closed, std::abs(split.U(x)[0] + Tl.dot(gt.inverse() * dphi)));
      }
    }
    r.at_most("gauge_lemma.m" + std::to_string(m), worst, lemma_tol);
    r.data["gauge_lemma_m" + std::to_string(m)] = worst;
    if (m == 1) {
      r.flag("U_identically_zero.m1", split.U_identically_zero);
      r.data["U_identically_zero_m1"] = split.U_identically_zero;
    } else {
      r.at_most("U_closed_form.m2", closed, lemma_tol);
      r.data["U_closed_form_m2"] = closed;
    }
  }
  return r;
}

// ---------------------------------------------------------------- 9: foliation

SuiteResult foliation_suite(const Config& cfg, std::uint64_t seed) {
  SuiteResult r{"foliation-check"};
  const int n = cfg.integer("n_curves", 60);
  const RayOptions ro = ray_options(cfg);
  const ScalarField rho = [](const Vec& x) { return 1.0 - x.squaredNorm(); };
  auto to_json = [](const FoliationReport& f) {
    json fails = json::array();
    for (const FoliationFailure& e : f.failures)
      fails.push_back({{"curve", e.curve}, {"s", e.s}, {"x", {e.x[0], e.x[1]}}, {"margin", e.margin}});
    return json{{"pass", f.pass},           {"worst_margin", f.worst_margin}, {"n_tangencies", f.n_tangencies},
                {"degenerate", f.degenerate}, {"flipped", f.flipped},         {"failures", fails}};
  };
  const FoliationReport flat = foliation_check(cfg.geometry("flat_geometry", "minkowski"), rho, n, seed, ro);
  const FoliationReport weak = foliation_check(cfg.geometry("weak_geometry", "rotation(0.05)"), rho, n, seed, ro);
  r.flag("flat_disc", flat.pass);
  r.flag("rotation_weak", weak.pass);
  r.data["flat_disc"] = to_json(flat);
  r.data["rotation_weak"] = to_json(weak);
  r.artifacts["margins_flat.svg"] = svg_histogram(flat.margins, 30, "tangency margins, flat disc");
  r.artifacts["margins_weak.svg"] = svg_histogram(weak.margins, 30, "tangency margins, weak rotation");

  const auto eps = cfg.numbers("sweep", {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99});
  for (double e : eps)
    if (!(e >= 0 && e < 1)) throw ConfigError(cfg.path("sweep") + ": eps must lie in [0, 1) for a causal metric");
  const FoliationSweep sw = foliation_sweep(eps, n, seed, ro);
  json rows = json::array();
  for (size_t k = 0; k < sw.eps.size(); ++k)
    rows.push_back({{"eps", sw.eps[k]}, {"pass", static_cast<bool>(sw.pass[k])}, {"worst_margin", sw.worst_margin[k]}});
  r.data["sweep"] = rows;
  r.data["threshold"] = sw.threshold ? json(*sw.threshold) : json(nullptr);
  return r;
}

// ---------------------------------------------------------------- theorem 2

namespace {

// chi(t) times a trace-free solenoidal field from the holomorphic F = (z - z0)^2 + 1/2
SpacetimeTensorField tfs_part(double amplitude) {
  SpacetimeTensorField a;
  a.field = {3, 2, [amplitude](const Vec& tx) {
               SymTensor w(3, 2);
               const double q = tx[0] * tx[0] / (1.5 * 1.5);
               if (q >= 1) return w;
               const double chi = std::exp(-1 / (1 - q));
               const std::complex<double> z(tx[1] - 0.2, tx[2] + 0.1), F = z * z + 0.5;
               w.set({1, 1}, amplitude * chi * F.real());
               w.set({2, 2}, -amplitude * chi * F.real());
               w.set({1, 2}, -amplitude * chi * F.imag());
               return w;
             }};
  a.t_min = -1.5;
  a.t_max = 1.5;
  return a;
}

SpacetimeTensorField sum(const SpacetimeTensorField& a, const SpacetimeTensorField& b) {
  SpacetimeTensorField s = a;
  s.field.fn = [fa = a.field.fn, fb = b.field.fn](const Vec& tx) { return fa(tx) + fb(tx); };
  s.t_min = std::min(a.t_min, b.t_min);
  s.t_max = std::max(a.t_max, b.t_max);
  s.spatial.reset();
  return s;
}

SuiteResult from_theorem2(const Theorem2Report& t) {
  SuiteResult r;
  for (const Theorem2Check& c : t.checks)
    r.criteria.push_back({c.name, c.value, c.tolerance, c.name.ends_with("_detection") ? ">=" : "<=", c.pass});
  r.data = {{"rank", t.rank},
            {"max_sinogram", t.max_sinogram},
            {"alpha_scale", t.alpha_scale},
            {"tfs_zero_mode", t.tfs_zero_mode}};
  return r;
}

}  // namespace

SuiteResult theorem2_gauge_suite(const Config& cfg, std::uint64_t seed) {
  SuiteResult r{"theorem2-suite"};
  const StationaryGeometry geo = cfg.geometry("geometry", "minkowski");
  Theorem2Options opt;
  opt.grid_n = cfg.integer("grid_n", opt.grid_n, 8);
  opt.n_times = cfg.integer("n_times", opt.n_times, 5);
  opt.rays_np = cfg.integer("rays_np", opt.rays_np);
  opt.rays_nd = cfg.integer("rays_nd", opt.rays_nd);
  opt.n_T = cfg.integer("n_T", opt.n_T, 2);
  opt.ray_step = cfg.number("ray_step", opt.ray_step);
  opt.sinogram_tol = cfg.tolerance("theorem2_sinogram", opt.sinogram_tol);
  opt.grid_tol = cfg.tolerance("theorem2_grid", opt.grid_tol);
  opt.nested_tol = cfg.tolerance("theorem2_nested", opt.nested_tol);
  opt.detection_factor = cfg.tolerance("theorem2_detection", opt.detection_factor);
  const double amplitude = cfg.number("tfs_amplitude", 0.2);

  const Vec centre = vec2(0.05, -0.02);
  const SpacetimeTensorField T0 = random_bump_field(2, 0, seed * 3 + 1, centre, 0.8, 0.0, 1.5);
  const SpacetimeTensorField T1 = random_bump_field(2, 1, seed * 3 + 2, centre, 0.8, 0.0, 1.5);
  const SpacetimeTensorField U0 = random_bump_field(2, 0, seed * 3 + 3, centre, 0.5, 0.0, 1.5);

  r.merge("m1_gauge", from_theorem2(theorem2_suite(geo, gauge_tensor(geo, T0, nullptr), opt)));
  const SpacetimeTensorField gauge2 = gauge_tensor(geo, T1, &U0);
  const Theorem2Report g2 = theorem2_suite(geo, gauge2, opt);
  r.merge("m2_gauge", from_theorem2(g2));
  Theorem2Options det = opt;
  det.noise_floor = g2.tfs_zero_mode;
  SuiteResult d = from_theorem2(theorem2_suite(geo, sum(gauge2, tfs_part(amplitude)), det));
  // with a non-gauge part nothing is expected to vanish; only the detection is a criterion
  json seen = json::object();
  for (const Criterion& c : d.criteria) seen[c.name] = c.value;
  d.data["values"] = seen;
  std::erase_if(d.criteria, [](const Criterion& c) { return !c.name.ends_with("_detection"); });
  r.merge("non_gauge", std::move(d));
  return r;
}

// ---------------------------------------------------------------- dispatch

std::vector<std::string> subcommands() {
  return {"transform", "slice",         "reconstruct",     "verify-gauge",
          "conformal-check", "decompose", "foliation-check", "theorem2-suite"};
}

SuiteResult run_subcommand(const std::string& name, const Config& cfg, std::uint64_t seed) {
  if (name == "transform") {
    SuiteResult r{name};
    r.merge("null", null_suite(cfg.section("null")));
    r.merge("direct", direct_suite(cfg.section("direct")));
    r.merge("sinogram", sinogram_suite(cfg.section("sinogram")));
    return r;
  }
  if (name == "slice") {
    SuiteResult r{name};
    r.merge("fourier", fourier_slice_suite(cfg.section("fourier")));
    r.merge("moments", moment_suite(cfg.section("moments"), seed));
    return r;
  }
  if (name == "reconstruct") return reconstruction_suite(cfg);
  if (name == "verify-gauge") return gauge_suite(cfg, seed);
  if (name == "conformal-check") return conformal_suite(cfg, seed);
  if (name == "decompose") return decomposition_suite(cfg);
  if (name == "foliation-check") return foliation_suite(cfg, seed);
  if (name == "theorem2-suite") return theorem2_gauge_suite(cfg, seed);
  throw ConfigError("subcommand: unknown '" + name + "'");
}

}  // namespace lightray
