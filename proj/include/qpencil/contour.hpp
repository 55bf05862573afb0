#pragma once

// The integration contour: a circle |rho| = r0 traversed counterclockwise plus
// both banks of the real axis for r0 <= |rho| <= R.
//
// Orientation convention: for f analytic off the real axis,
//   int_gamma f = oint_{|rho|=r0, ccw} f + int_{r0<|t|<R} (f_below(t) - f_above(t)) dt,
// so ray nodes carry dtheta = -w above and +w below.

#include "qpencil/parallel.hpp"
#include "qpencil/weyl.hpp"

#include <cmath>
#include <vector>

namespace qpencil {

struct ContourNode {
  cplx rho;
  double weight = 0.0;  ///< arc-length weight |d rho|
  cplx dtheta;          ///< signed complex weight used in contour sums
  Side side = Side::Circle;
  long pair = -1;       ///< index of the mirror node on the other bank
};

struct Contour {
  double r0 = 0.0;
  double R = 0.0;
  std::size_t n_circle = 0;
  std::size_t n_ray = 0;  ///< nodes per bank of each half-line
  std::vector<ContourNode> nodes;

  std::size_t size() const { return nodes.size(); }
  /// Membership test for the open exterior region (off the circle and the real axis).
  bool exterior(cplx rho) const { return std::abs(rho) > r0 && rho.imag() != 0.0; }
};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
      }
      pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

struct PoleBoundOptions {
  double r_start = 0.5;
  double growth = 1.2;
  double r_cap = 64.0;
  std::size_t n_angles = 48;
  std::size_t n_path = 48;      ///< initial samples per path piece for the winding count
  double max_phase_step = 0.4;  ///< refinement threshold on the phase increment
};

namespace detail {

/// Phase change of f along path(t), t in [a, b], with fa = f(path(a)), fb = f(path(b)).
template <class F, class Path>
double phase_change(F& f, Path& path, double a, double b, cplx fa, cplx fb, double max_step, int depth) {
  const double d = std::arg(fb / fa);
  if (std::abs(d) <= max_step || depth >= 18) return d;
  const double t = 0.5 * (a + b);
  const cplx fm = f(path(t));
  return phase_change(f, path, a, t, fa, fm, max_step, depth + 1) +
         phase_change(f, path, t, b, fm, fb, max_step, depth + 1);
}

template <class F, class Path>
double path_phase(F& f, Path path, double a, double b, std::size_t n, double max_step) {
  std::vector<cplx> fv(n + 1);
  parallel_for(n + 1, [&](std::size_t k) { fv[k] = f(path(a + (b - a) * static_cast<double>(k) / static_cast<double>(n))); });
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t0 = a + (b - a) * static_cast<double>(k) / static_cast<double>(n);
    const double t1 = a + (b - a) * static_cast<double>(k + 1) / static_cast<double>(n);
    total += phase_change(f, path, t0, t1, fv[k], fv[k + 1], max_step, 0);
  }
  return total;
}

}  // namespace detail

/// Zeros of det U(E_s) in the half-disk {|rho| < r, s Im rho > 0}, by the argument principle
/// along the diameter and the half circle.
inline int half_disk_zero_count(const PencilCoefficients& c, const Transport& tr, double r, int s,
                                const PoleBoundOptions& opt = {}) {
  auto f = [&](cplx rho) -> cplx { return jost_boundary_form(c, tr, rho, s).determinant(); };
  const double sg = s > 0 ? 1.0 : -1.0;
  // counterclockwise for s = +1: diameter left to right, then the arc from 0 to pi
  const double w = detail::path_phase(f, [&](double t) { return cplx(t, 0.0); }, -r, r, opt.n_path, opt.max_phase_step) +
                   detail::path_phase(f, [&](double t) { return std::polar(r, sg * t); }, 0.0, kPi, opt.n_path,
                                      opt.max_phase_step);
  return static_cast<int>(std::lround(sg * w / (2.0 * kPi)));
}

/// Radius enclosing the poles of the Weyl matrix. Two ingredients: the ratio test
/// |det U(E)| / |rho|^m >= |det(I +- h1)| / 2 on every sampled circle from the returned radius
/// up to the cap, and a zero count of det U(E+-) in half-disks, which catches zeros lying
/// between sampled circles. Returns the smaller ladder radius satisfying both.
inline double estimate_pole_bound(const PencilCoefficients& c, const Transport& tr, const PoleBoundOptions& opt = {}) {
  const auto m = static_cast<Eigen::Index>(c.m);
  const double lead_up = std::abs((identity(m) + c.h1).determinant());
  const double lead_dn = std::abs((identity(m) - c.h1).determinant());
  std::vector<double> radii;
  for (double r = opt.r_start; r <= opt.r_cap * (1 + 1e-12); r *= opt.growth) radii.push_back(r);
  std::vector<char> pass(radii.size(), 1);
  parallel_for(radii.size(), [&](std::size_t k) {
    for (std::size_t a = 0; a < opt.n_angles && pass[k]; ++a) {
      const double phi = 2.0 * kPi * (static_cast<double>(a) + 0.5) / static_cast<double>(opt.n_angles);
      const cplx rho = std::polar(radii[k], phi);
      const int s = rho.imag() > 0 ? +1 : -1;
      const Matrix u = jost_boundary_form(c, tr, rho, s);
      const double ratio = std::abs(u.determinant()) / std::pow(radii[k], static_cast<double>(c.m));
      pass[k] = ratio >= 0.5 * (s > 0 ? lead_up : lead_dn);
    }
  });
  if (!pass.back()) throw AlgorithmError("estimate_pole_bound: ratio test fails at the radius cap");
  std::size_t first = radii.size() - 1;
  while (first > 0 && pass[first - 1]) --first;

  // Zero counts are nondecreasing in r; the outer radius is well inside the asymptotic regime.
  std::size_t outer = first;
  while (outer + 1 < radii.size() && radii[outer] < std::max(16.0, 4.0 * radii[first])) ++outer;
  int total[2];
  for (int s : {0, 1}) total[s] = half_disk_zero_count(c, tr, radii[outer], s == 0 ? +1 : -1, opt);
  auto enclosed = [&](std::size_t k) {
    for (int s : {0, 1})
      if (half_disk_zero_count(c, tr, radii[k], s == 0 ? +1 : -1, opt) < total[s]) return false;
    return true;
  };
  std::size_t lo = 0, hi = outer;  // smallest k with enclosed(k) lies in [lo, hi]
  if (enclosed(0)) hi = 0;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (enclosed(mid)) hi = mid;
    else lo = mid;
  }
  return radii[std::max(first, hi)];
}

struct ContourOptions {
  std::size_t panel_order = 16;
};

/// Circle nodes: Gauss-Legendre in angle on the upper and lower semicircles separately
/// (M jumps at rho = +-r0). Ray nodes: Gauss-Legendre panels on [r0, R], mirrored on both banks.
inline Contour build_contour(double pole_bound, double r0, double R, std::size_t n_circle, std::size_t n_ray,
                             const ContourOptions& opt = {}) {
  if (!(r0 > 0) || !(r0 > pole_bound)) throw InputError("build_contour: r0 must exceed the pole bound and 0");
  if (R < r0 || (R == r0 && n_ray > 0)) throw InputError("build_contour: need R > r0 for ray nodes");
  if (n_circle < 2 || n_circle % 2 != 0) throw InputError("build_contour: n_circle must be even and >= 2");
  if (R > r0 && n_ray == 0) throw InputError("build_contour: R > r0 needs ray nodes");
  Contour ct;
  ct.r0 = r0;
  ct.R = R;
  ct.n_circle = n_circle;
  ct.n_ray = n_ray;
  std::vector<double> gx, gw;
  const std::size_t half = n_circle / 2;
  gauss_legendre(half, gx, gw);
  for (int sheet = 0; sheet < 2; ++sheet) {
    const double a = sheet == 0 ? 0.0 : kPi;
    for (std::size_t k = 0; k < half; ++k) {
      const double phi = a + 0.5 * kPi * (gx[k] + 1.0);
      const double wphi = 0.5 * kPi * gw[k];
      ContourNode nd;
      nd.rho = std::polar(r0, phi);
      nd.weight = r0 * wphi;
      nd.dtheta = kI * nd.rho * wphi;
      nd.side = Side::Circle;
      ct.nodes.push_back(nd);
    }
  }
  if (n_ray == 0) return ct;
  const std::size_t order = std::min(opt.panel_order, n_ray);
  const std::size_t panels = (n_ray + order - 1) / order;
  gauss_legendre(order, gx, gw);
  std::vector<double> t, w;
  const double width = (R - r0) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = r0 + width * static_cast<double>(p);
    for (std::size_t k = 0; k < order; ++k) {
      t.push_back(lo + 0.5 * width * (gx[k] + 1.0));
      w.push_back(0.5 * width * gw[k]);
    }
  }
  ct.n_ray = t.size();
  for (double sgn : {+1.0, -1.0}) {
    for (std::size_t k = 0; k < t.size(); ++k) {
      const std::size_t kk = sgn > 0 ? k : t.size() - 1 - k;  // keep each bank ordered by increasing rho
      const cplx rho{sgn * t[kk], 0.0};
      const long above = static_cast<long>(ct.nodes.size());
      ct.nodes.push_back({rho, w[kk], cplx(-w[kk], 0.0), Side::Above, above + 1});
      ct.nodes.push_back({rho, w[kk], cplx(w[kk], 0.0), Side::Below, above});
    }
  }
  return ct;
}

/// Sum over nodes of f_j dtheta_j (scalar or matrix samples).
template <class T>
T contour_integral(const Contour& ct, const std::vector<T>& f) {
  if (f.size() != ct.size()) throw InputError("contour_integral: one sample per node required");
  T acc = f.front() * cplx(0.0);
  for (std::size_t j = 0; j < f.size(); ++j) acc = acc + f[j] * ct.nodes[j].dtheta;
  return acc;
}

/// Weyl matrix at every contour node (the above/below limits on the rays).
inline WeylSamples boundary_samples(const PencilCoefficients& c, const Transport& tr, const Contour& ct,
                                    const OdeTolerances& tol = {}) {
  WeylSamples ws;
  ws.m = c.m;
  ws.r0 = ct.r0;
  ws.R = ct.R;
  ws.n_circle = ct.n_circle;
  ws.n_ray = ct.n_ray;
  ws.samples.resize(ct.size());
  parallel_for(ct.size(), [&](std::size_t j) {
    const auto& nd = ct.nodes[j];
    ws.samples[j] = {nd.rho, nd.side, weyl_matrix(c, tr, nd.rho, nd.side, tol)};
  });
  return ws;
}

}  // namespace qpencil
