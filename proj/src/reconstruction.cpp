#include "lightray/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "lightray/errors.hpp"
#include "lightray/parallel.hpp"

namespace lightray {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> trapezoid(std::span<const double> x) {
  std::vector<double> w(x.size(), 0.0);
  for (size_t i = 0; i + 1 < x.size(); ++i) {
    w[i] += 0.5 * (x[i + 1] - x[i]);
    w[i + 1] += 0.5 * (x[i + 1] - x[i]);
  }
  return w;
}

double norm2(const Eigen::MatrixXcd& u) { return u.squaredNorm(); }

}  // namespace

double Sinogram::max_abs() const {
  double m = 0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

void Sinogram::write_csv(std::ostream& os) const {
  os << "ray,theta,psi,T,value\n" << std::setprecision(12);
  for (size_t r = 0; r < rays(); ++r)
    for (size_t k = 0; k < T.size(); ++k)
      os << r << ',' << inflow[r].boundary_param << ',' << inflow[r].dir_param << ',' << T[k] << ','
         << (*this)(r, k) << '\n';
}

Sinogram forward_scan(const StationaryGeometry& geo, const SpacetimeTensorField& f, int np, int nd,
                      std::span<const double> T, const RayOptions& opt) {
  if (!std::isfinite(f.t_min) || !std::isfinite(f.t_max))
    throw SupportError("forward scan needs a field with finite temporal support");
  if (T.empty()) throw SupportError("empty T grid");
  Sinogram s;
  s.np = np;
  s.nd = nd;
  s.inflow = sample_inflow(geo.conformal_manifold(), np, nd);
  s.T.assign(T.begin(), T.end());
  s.values.assign(s.inflow.size() * T.size(), 0.0);
  parallel_for(s.inflow.size(), [&](size_t r) {
    const InflowSample& in = s.inflow[r];
    const LiftedRay ray = lift_ray(geo, integrate_g_curve(geo, in.x, in.v, +1, opt), 0.0);
    const auto [amin, amax] = std::minmax_element(ray.a.begin(), ray.a.end());
    if (T.front() > f.t_min - *amax || T.back() < f.t_max - *amin)
      throw SupportError("T grid does not cover the support of the field along every ray");
    const int K = ray.nodes.size();
    std::vector<Vec> pts(K), vel(K);
    for (int k = 0; k < K; ++k) {
      pts[k] = ray.point(k);
      vel[k] = ray.velocity(k);
    }
    std::vector<double> vals(K);
    for (size_t i = 0; i < T.size(); ++i) {
      for (int k = 0; k < K; ++k) {
        Vec tx = pts[k];
        tx[0] += T[i];
        vals[k] = f.vanishes_near(tx, 0.0) ? 0.0 : f.eval(tx, vel[k]);
      }
      s.values[r * T.size() + i] = ray.nodes.integrate(std::span<const double>(vals));
    }
  });
  return s;
}

std::vector<cplx> slice(const Sinogram& s, double tau) {
  const std::vector<double> w = trapezoid(s.T);
  std::vector<cplx> ph(s.T.size());
  for (size_t k = 0; k < s.T.size(); ++k) ph[k] = w[k] * std::exp(cplx(0.0, -tau * s.T[k]));
  std::vector<cplx> g(s.rays());
  for (size_t r = 0; r < s.rays(); ++r) {
    cplx acc = 0;
    for (size_t k = 0; k < s.T.size(); ++k) acc += ph[k] * s(r, k);
    g[r] = acc;
  }
  return g;
}

SliceStack slice_stack(const Sinogram& s, std::span<const double> taus) {
  SliceStack st;
  st.taus.assign(taus.begin(), taus.end());
  for (double tau : taus) st.data.push_back(slice(s, tau));
  return st;
}

double SliceStack::hermitian_defect() const {
  double peak = 0, d = 0;
  for (const auto& g : data)
    for (cplx z : g) peak = std::max(peak, std::abs(z));
  for (size_t a = 0; a < taus.size(); ++a)
    for (size_t b = 0; b < taus.size(); ++b) {
      if (taus[a] != -taus[b] || taus[a] < 0) continue;
      for (size_t r = 0; r < data[a].size(); ++r)
        d = std::max(d, std::abs(data[b][r] - std::conj(data[a][r])));
    }
  return peak > 0 ? d / peak : 0.0;
}

bool PixelGrid::inside(int i, int j) const {
  const double x = centre(i), y = centre(j);
  return x * x + y * y < 1.0;
}

WeightedRayOperator::WeightedRayOperator(std::span<const InflowSample> rays, const PixelGrid& grid)
    : grid_(grid) {
  const int n = grid.n;
  const double h = grid.h(), delta = 0.5 * h;
  first_.reserve(rays.size() + 1);
  dr_.reserve(rays.size());
  first_.push_back(0);
  for (const InflowSample& s : rays) {
    const Vec x = s.x, v = s.v.normalized();
    const double L = std::max(0.0, -2.0 * x.dot(v));
    const int N = std::max(1, static_cast<int>(std::ceil(L / delta)));
    const double dr = L / N;
    for (int k = 0; k < N; ++k) {
      const Vec p = x + (k + 0.5) * dr * v;
      const double X = std::clamp((p[0] + 1) / h - 0.5, -1.0, n - 1e-9);
      const double Y = std::clamp((p[1] + 1) / h - 0.5, -1.0, n - 1e-9);
      const int i0 = static_cast<int>(std::floor(X)), j0 = static_cast<int>(std::floor(Y));
      samples_.push_back({(i0 + 1) * (n + 2) + (j0 + 1), static_cast<float>(X - i0),
                          static_cast<float>(Y - j0)});
    }
    dr_.push_back(dr);
    first_.push_back(samples_.size());
  }
}

void WeightedRayOperator::forward(const Eigen::MatrixXcd& u, double tau, std::vector<cplx>& out) const {
  const int n = grid_.n, stride = n + 2;
  std::vector<cplx> pad(static_cast<size_t>(stride) * stride, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (grid_.inside(i, j)) pad[(i + 1) * stride + j + 1] = u(i, j);
  out.assign(rays(), 0.0);
  for (size_t r = 0; r < rays(); ++r) {
    const double dr = dr_[r];
    const cplx step = std::exp(cplx(0.0, tau * dr));
    cplx ph = std::exp(cplx(0.0, 0.5 * tau * dr)), acc = 0.0;
    for (size_t k = first_[r]; k < first_[r + 1]; ++k) {
      const Sample& s = samples_[k];
      const cplx* p = &pad[s.base];
      const double fx = s.fx, fy = s.fy;
      const cplx v = (1 - fx) * ((1 - fy) * p[0] + fy * p[1]) + fx * ((1 - fy) * p[stride] + fy * p[stride + 1]);
      acc += ph * v;
      ph *= step;
    }
    out[r] = acc * dr;
  }
}

void WeightedRayOperator::adjoint(std::span<const cplx> g, double tau, Eigen::MatrixXcd& out) const {
  const int n = grid_.n, stride = n + 2;
  std::vector<cplx> pad(static_cast<size_t>(stride) * stride, 0.0);
  for (size_t r = 0; r < rays(); ++r) {
    const double dr = dr_[r];
    const cplx step = std::exp(cplx(0.0, -tau * dr));
    cplx ph = std::exp(cplx(0.0, -0.5 * tau * dr)) * g[r] * dr;
    for (size_t k = first_[r]; k < first_[r + 1]; ++k) {
      const Sample& s = samples_[k];
      cplx* p = &pad[s.base];
      const double fx = s.fx, fy = s.fy;
      p[0] += (1 - fx) * (1 - fy) * ph;
      p[1] += (1 - fx) * fy * ph;
      p[stride] += fx * (1 - fy) * ph;
      p[stride + 1] += fx * fy * ph;
      ph *= step;
    }
  }
  out.setZero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (grid_.inside(i, j)) out(i, j) = pad[(i + 1) * stride + j + 1];
}

double WeightedRayOperator::normal_norm(int iterations) const {
  const int n = grid_.n;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Constant(n, n, 1.0), w;
  std::vector<cplx> g;
  double lam = 0;
  for (int it = 0; it < iterations; ++it) {
    u /= std::sqrt(norm2(u));
    forward(u, 0.0, g);
    adjoint(g, 0.0, w);
    lam = std::sqrt(norm2(w));
    u = w;
  }
  return lam;
}

Eigen::MatrixXd fbp(int np, int nd, std::span<const double> data, const PixelGrid& G) {
  if (data.size() != static_cast<size_t>(np) * nd) throw ResolutionError("fbp: data size mismatch");
  // rebin to parallel beams: normal angle phi_a = 2 pi a / np, offset p_k
  const double dp = 2.0 / nd;
  Eigen::MatrixXd P(np, nd);
  for (int a = 0; a < np; ++a)
    for (int k = 0; k < nd; ++k) {
      const double phi = 2 * kPi * a / np, p = -1 + (k + 0.5) * dp;
      const double psi = -std::asin(p);
      double u = (phi - 0.5 * kPi - psi) / (2 * kPi) * np;
      u -= std::floor(u / np) * np;
      const int i0 = static_cast<int>(std::floor(u)) % np, i1 = (i0 + 1) % np;
      const double fu = u - std::floor(u);
      const double w = std::clamp((psi + 0.5 * kPi) / (kPi / nd) - 0.5, 0.0, nd - 1.0);
      const int j0 = std::min(static_cast<int>(std::floor(w)), nd - 2);
      const double fw = w - j0;
      auto at = [&](int i, int j) { return data[static_cast<size_t>(i) * nd + j]; };
      P(a, k) = (1 - fu) * ((1 - fw) * at(i0, j0) + fw * at(i0, j0 + 1)) +
                fu * ((1 - fw) * at(i1, j0) + fw * at(i1, j0 + 1));
    }

  // Ram-Lak kernel, Hann window to the detector Nyquist frequency
  const int L = 2 * nd;
  std::vector<double> h(L, 0.0), H(L, 0.0), k(L, 0.0);
  for (int m = 0; m < L; ++m) {
    const int s = m <= L / 2 ? m : m - L;
    if (s == 0) h[m] = 1.0 / (4 * dp * dp);
    else if (s % 2) h[m] = -1.0 / (kPi * kPi * s * s * dp * dp);
  }
  for (int f = 0; f < L; ++f) {
    double acc = 0;
    for (int m = 0; m < L; ++m) acc += h[m] * std::cos(2 * kPi * f * m / L);
    const int fs = f <= L / 2 ? f : f - L;
    H[f] = acc * 0.5 * (1 + std::cos(2 * kPi * fs / L));
  }
  for (int m = 0; m < L; ++m) {
    double acc = 0;
    for (int f = 0; f < L; ++f) acc += H[f] * std::cos(2 * kPi * f * m / L);
    k[m] = acc / L;
  }
  Eigen::MatrixXd Q(np, nd);
  for (int a = 0; a < np; ++a)
    for (int i = 0; i < nd; ++i) {
      double acc = 0;
      for (int j = 0; j < nd; ++j) acc += k[((i - j) % L + L) % L] * P(a, j);
      Q(a, i) = acc * dp;
    }

  // f = (1/2) int_0^{2 pi} q(phi, x . omega) dphi
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(G.n, G.n);
  std::vector<double> cs(np), sn(np);
  for (int a = 0; a < np; ++a) {
    cs[a] = std::cos(2 * kPi * a / np);
    sn[a] = std::sin(2 * kPi * a / np);
  }
  for (int i = 0; i < G.n; ++i)
    for (int j = 0; j < G.n; ++j) {
      if (!G.inside(i, j)) continue;
      const double x = G.centre(i), y = G.centre(j);
      double acc = 0;
      for (int a = 0; a < np; ++a) {
        const double c = (x * cs[a] + y * sn[a] + 1) / dp - 0.5;
        if (c < 0 || c > nd - 1) continue;
        const int c0 = std::min(static_cast<int>(c), nd - 2);
        const double fc = c - c0;
        acc += (1 - fc) * Q(a, c0) + fc * Q(a, c0 + 1);
      }
      out(i, j) = 0.5 * acc * (2 * kPi / np);
    }
  return out;
}

SliceInversion invert_slice(const WeightedRayOperator& A, int np, int nd, std::span<const cplx> g,
                            double tau, const InversionOptions& opt, const Eigen::MatrixXcd* start) {
  if (np < 64 || nd < 64) throw ResolutionError("slice inversion needs at least 64 x 64 inflow samples");
  if (g.size() != A.rays()) throw ResolutionError("slice data do not match the ray operator");
  SliceInversion out;
  const int n = A.grid().n;
  if (tau == 0.0) {
    std::vector<double> re(g.size());
    for (size_t r = 0; r < g.size(); ++r) re[r] = g[r].real();
    out.image = fbp(np, nd, re, A.grid()).cast<cplx>();
    return out;
  }
  static thread_local std::pair<const WeightedRayOperator*, double> cached{nullptr, 0.0};
  if (cached.first != &A) cached = {&A, A.normal_norm()};
  const double lambda = opt.lambda_rel * cached.second;

  std::vector<cplx> tmp;
  Eigen::MatrixXcd b, Ap;
  A.adjoint(g, tau, b);
  const double bn = std::sqrt(norm2(b));
  Eigen::MatrixXcd x = start ? *start : Eigen::MatrixXcd::Zero(n, n);
  if (bn == 0.0) {
    out.image = Eigen::MatrixXcd::Zero(n, n);
    return out;
  }
  auto normal = [&](const Eigen::MatrixXcd& u, Eigen::MatrixXcd& res) {
    A.forward(u, tau, tmp);
    A.adjoint(tmp, tau, res);
    res += lambda * u;
  };
  Eigen::MatrixXcd r;
  normal(x, r);
  r = b - r;
  Eigen::MatrixXcd p = r;
  double rs = norm2(r);
  int it = 0;
  while (it < opt.max_iter && std::sqrt(rs) > opt.tol * bn) {
    normal(p, Ap);
    const double alpha = rs / (p.conjugate().cwiseProduct(Ap)).sum().real();
    x += alpha * p;
    r -= alpha * Ap;
    const double rs_new = norm2(r);
    p = r + (rs_new / rs) * p;
    rs = rs_new;
    ++it;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!A.grid().inside(i, j)) x(i, j) = 0.0;
  out.image = x;
  out.iterations = it;
  out.residual = std::sqrt(rs) / bn;
  return out;
}

ReconstructionOptions nyquist_tau_grid(double t_extent, double tau_max, double oversample) {
  ReconstructionOptions o;
  o.dtau = 2 * kPi / (oversample * t_extent);
  o.n_tau = static_cast<int>(std::ceil(tau_max / o.dtau));
  return o;
}

Reconstruction reconstruct_scalar(const StationaryGeometry& geo, const Sinogram& s,
                                  const ReconstructionOptions& opt) {
  Vec origin = Vec::Zero(geo.n());
  if (!geo.eta_zero || !geo.kappa_constant || geo.kappa(origin) != 1.0 || geo.base.id != "flat-disc")
    throw Error("scalar reconstruction is implemented for Minkowski x flat disc only");
  if (s.np < 64 || s.nd < 64) throw ResolutionError("reconstruction needs at least 64 x 64 inflow samples");
  if (opt.t_out.empty()) throw Error("no output times requested");
  const WeightedRayOperator A(s.inflow, opt.grid);
  Reconstruction rec;
  rec.grid = opt.grid;
  rec.t = opt.t_out;
  std::vector<Eigen::MatrixXcd> F;
  for (int k = 0; k <= opt.n_tau; ++k) {
    const double tau = k * opt.dtau;
    const std::vector<cplx> g = slice(s, tau);
    SliceInversion inv = invert_slice(A, s.np, s.nd, g, tau, opt.inversion, k > 1 ? &F.back() : nullptr);
    rec.taus.push_back(tau);
    rec.iterations.push_back(inv.iterations);
    F.push_back(std::move(inv.image));
  }
  // f(t) = (1/2 pi) sum_k w_k e^{i tau_k t} F_k over |k| <= n_tau, F_{-k} = conj F_k
  double re2 = 0, im2 = 0;
  for (double t : opt.t_out) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(opt.grid.n, opt.grid.n);
    for (int k = 0; k <= opt.n_tau; ++k) {
      const double w = (k == opt.n_tau ? 0.5 : 1.0) * opt.dtau;
      const cplx e = std::exp(cplx(0.0, k * opt.dtau * t));
      if (k == 0) acc += w * F[0];
      else acc += w * (e * F[k] + std::conj(e) * F[k].conjugate());
    }
    acc /= 2 * kPi;
    re2 += acc.real().squaredNorm();
    im2 += acc.imag().squaredNorm();
    rec.frames.push_back(acc.real());
  }
  rec.imaginary_residual = re2 > 0 ? std::sqrt(im2 / re2) : 0.0;
  return rec;
}

double relative_l2_error(const Reconstruction& rec, const SpacetimeTensorField& f) {
  double num = 0, den = 0;
  Vec tx(3);
  for (size_t k = 0; k < rec.t.size(); ++k)
    for (int i = 0; i < rec.grid.n; ++i)
      for (int j = 0; j < rec.grid.n; ++j) {
        if (!rec.grid.inside(i, j)) continue;
        tx << rec.t[k], rec.grid.centre(i), rec.grid.centre(j);
        const double ref = f(tx)[0];
        num += (rec.frames[k](i, j) - ref) * (rec.frames[k](i, j) - ref);
        den += ref * ref;
      }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

Vec centroid(const Eigen::MatrixXd& frame, const PixelGrid& G, const Vec& near, double radius) {
  Vec c = Vec::Zero(2);
  double m = 0;
  for (int i = 0; i < G.n; ++i)
    for (int j = 0; j < G.n; ++j) {
      Vec x(2);
      x << G.centre(i), G.centre(j);
      if ((x - near).norm() > radius) continue;
      const double w = std::abs(frame(i, j));
      c += w * x;
      m += w;
    }
  return m > 0 ? Vec(c / m) : c;
}

SpacetimeTensorField gaussian_phantom(std::span<const GaussianBlob> blobs) {
  SpacetimeTensorField f;
  std::vector<GaussianBlob> bs(blobs.begin(), blobs.end());
  f.field = {3, 0, [bs](const Vec& tx) {
               double v = 0;
               for (const GaussianBlob& b : bs) {
                 const double dt = tx[0] - b.t0;
                 if (std::abs(dt) > 8 * b.st) continue;
                 const double dx = tx[1] - b.centre[0], dy = tx[2] - b.centre[1];
                 v += b.amplitude * std::exp(-dt * dt / (2 * b.st * b.st) - (dx * dx + dy * dy) / (2 * b.sx * b.sx));
               }
               return SymTensor::scalar(v, 3);
             }};
  f.t_min = std::numeric_limits<double>::infinity();
  f.t_max = -std::numeric_limits<double>::infinity();
  for (const GaussianBlob& b : bs) {
    f.t_min = std::min(f.t_min, b.t0 - 8 * b.st);
    f.t_max = std::max(f.t_max, b.t0 + 8 * b.st);
  }
  return f;
}

}  // namespace lightray
