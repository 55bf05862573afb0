#pragma once

// Dormand-Prince 5(4) integrator for linear matrix ODEs, and the Cauchy
// problems built on top of it (transport matrices, base solutions).

#include "qpencil/pencil.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace qpencil {

struct OdeTolerances {
  double rtol = 1e-10;
  double atol = 1e-12;
  std::size_t max_steps = 20'000'000;
};

inline constexpr OdeTolerances kTightTolerances{1e-12, 1e-14, 20'000'000};

/// States at the requested output abscissas.
struct Trajectory {
  std::vector<double> x;
  std::vector<std::vector<cplx>> y;
  std::size_t steps = 0;
  std::size_t rejected = 0;
};

namespace detail {

struct DormandPrince {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrates y' = rhs(x, y) from x_from through the output abscissas, which must be
/// ordered along the direction of integration. rhs has signature
/// void(double x, const cplx* y, cplx* dy).
template <class Rhs>
Trajectory integrate_ivp(Rhs&& rhs, std::span<const cplx> y0, double x_from, std::span<const double> outputs,
                         const OdeTolerances& tol = {}) {
  using DP = detail::DormandPrince;
  Trajectory traj;
  const std::size_t n = y0.size();
  std::vector<cplx> y(y0.begin(), y0.end()), yn(n), tmp(n);
  std::vector<cplx> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  if (outputs.empty()) return traj;
  const double dir = outputs.back() >= x_from ? 1.0 : -1.0;
  double x = x_from;
  const double span = std::abs(outputs.back() - x_from);
  double h = span > 0 ? std::min(0.01 * span, 0.05) : 0.0;
  bool have_k1 = false;
  std::size_t steps = 0;

  for (double target : outputs) {
    if ((target - x) * dir < -1e-14 * std::max(1.0, std::abs(x)))
      throw InputError("integrate_ivp: outputs not ordered along the integration direction");
    while ((target - x) * dir > 0) {
      if (!have_k1) {
        rhs(x, y.data(), k1.data());
        have_k1 = true;
      }
      const double remaining = std::abs(target - x);
      bool clipped = false;
      double hs = h;
      if (hs >= remaining * (1 - 1e-12)) {
        hs = remaining;
        clipped = true;
      }
      const double hmin = 1e-13 * std::max(1.0, std::abs(x));
      if (hs < hmin && !clipped) throw IntegratorError("step size underflow", x);
      const double hd = dir * hs;
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hd * DP::a21 * k1[i];
      rhs(x + DP::c2 * hd, tmp.data(), k2.data());
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hd * (DP::a31 * k1[i] + DP::a32 * k2[i]);
      rhs(x + DP::c3 * hd, tmp.data(), k3.data());
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hd * (DP::a41 * k1[i] + DP::a42 * k2[i] + DP::a43 * k3[i]);
      rhs(x + DP::c4 * hd, tmp.data(), k4.data());
      for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + hd * (DP::a51 * k1[i] + DP::a52 * k2[i] + DP::a53 * k3[i] + DP::a54 * k4[i]);
      rhs(x + DP::c5 * hd, tmp.data(), k5.data());
      for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + hd * (DP::a61 * k1[i] + DP::a62 * k2[i] + DP::a63 * k3[i] + DP::a64 * k4[i] +
                              DP::a65 * k5[i]);
      const double xe = clipped ? target : x + hd;
      rhs(xe, tmp.data(), k6.data());
      for (std::size_t i = 0; i < n; ++i)
        yn[i] = y[i] + hd * (DP::b1 * k1[i] + DP::b3 * k3[i] + DP::b4 * k4[i] + DP::b5 * k5[i] + DP::b6 * k6[i]);
      rhs(xe, yn.data(), k7.data());
      double enorm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const cplx e = hd * (DP::e1 * k1[i] + DP::e3 * k3[i] + DP::e4 * k4[i] + DP::e5 * k5[i] + DP::e6 * k6[i] +
                             DP::e7 * k7[i]);
        const double sc = tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(yn[i]));
        enorm = std::max(enorm, std::abs(e) / sc);
      }
      if (!std::isfinite(enorm)) throw IntegratorError("non-finite state", x);
      if (++steps > tol.max_steps) throw IntegratorError("step budget exhausted", x);
      const double fac = enorm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0);
      if (enorm <= 1.0) {
        x = xe;
        y.swap(yn);
        k1.swap(k7);
        // A step shortened to land on an output node leaves the natural step alone.
        if (!clipped) h = hs * fac;
      } else {
        ++traj.rejected;
        h = hs * std::max(fac, 0.2);
      }
    }
    traj.x.push_back(target);
    traj.y.push_back(y);
  }
  traj.steps = steps;
  return traj;
}

/// Final state only.
template <class Rhs>
std::vector<cplx> integrate_ivp(Rhs&& rhs, std::span<const cplx> y0, double x_from, double x_to,
                                const OdeTolerances& tol = {}) {
  const double out[1] = {x_to};
  auto traj = integrate_ivp(std::forward<Rhs>(rhs), y0, x_from, std::span<const double>(out, 1), tol);
  return std::move(traj.y.back());
}

// ---------------------------------------------------------------------------

/// Matrix solution and its x-derivative at a list of abscissas.
struct SolutionField {
  cplx rho;
  std::vector<double> grid;
  std::vector<Matrix> Y;
  std::vector<Matrix> Yprime;
};

namespace detail {

inline std::vector<cplx> pack(std::initializer_list<const Matrix*> blocks) {
  std::vector<cplx> v;
  for (const Matrix* b : blocks) v.insert(v.end(), b->data(), b->data() + b->size());
  return v;
}

inline Matrix block(const std::vector<cplx>& v, std::size_t idx, std::size_t m) {
  return view(v.data() + idx * m * m, m);
}

/// Evaluates V1 = 2 i rho Q1(x) + Q0(x) into out.
inline void potential_into(const PencilCoefficients& c, cplx rho, double x, cplx* q1buf, cplx* out) {
  const std::size_t mm = c.m * c.m;
  c.q1.eval_into(x, q1buf);
  c.q0.eval_into(x, out);
  const cplx f = 2.0 * kI * rho;
  for (std::size_t e = 0; e < mm; ++e) out[e] += f * q1buf[e];
}

/// y'' = -(rho^2 + 2 i rho Q1 + Q0) y; star = true multiplies the potential from the right.
struct SecondOrderRhs {
  const PencilCoefficients& c;
  cplx rho;
  bool star;
  std::vector<cplx> q1buf, vbuf;

  SecondOrderRhs(const PencilCoefficients& coeffs, cplx r, bool s)
      : c(coeffs), rho(r), star(s), q1buf(coeffs.m * coeffs.m), vbuf(coeffs.m * coeffs.m) {}

  void operator()(double x, const cplx* y, cplx* dy) {
    const std::size_t m = c.m, mm = m * m;
    potential_into(c, rho, x, q1buf.data(), vbuf.data());
    const cplx r2 = rho * rho;
    for (std::size_t e = 0; e < mm; ++e) {
      dy[e] = y[mm + e];
      dy[mm + e] = -r2 * y[e];
    }
    if (star) mm_acc(y, vbuf.data(), dy + mm, m, -1.0);
    else mm_acc(vbuf.data(), y, dy + mm, m, -1.0);
  }
};

}  // namespace detail

/// P' = sign Q1 P (or P' = sign P Q1 for the star variant), P(0) = I, sampled on grid
/// with exact slopes so that Hermite interpolation is fourth order.
inline MatrixFunction solve_P(const PencilCoefficients& c, int sign, bool star, const std::vector<double>& grid,
                              const OdeTolerances& tol = kTightTolerances) {
  const std::size_t m = c.m, mm = m * m;
  std::vector<cplx> qbuf(mm);
  const double s = sign >= 0 ? 1.0 : -1.0;
  auto rhs = [&](double x, const cplx* y, cplx* dy) {
    c.q1.eval_into(x, qbuf.data());
    std::fill_n(dy, mm, cplx{});
    if (star) detail::mm_acc(y, qbuf.data(), dy, m, s);
    else detail::mm_acc(qbuf.data(), y, dy, m, s);
  };
  const Matrix eye = identity(static_cast<Eigen::Index>(m));
  const auto traj = integrate_ivp(rhs, std::span<const cplx>(eye.data(), mm), 0.0, grid, tol);
  std::vector<Matrix> vals(grid.size()), slopes(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    vals[k] = detail::view(traj.y[k].data(), m);
    const Matrix q = c.q1(grid[k]);
    slopes[k] = star ? Matrix(s * vals[k] * q) : Matrix(s * q * vals[k]);
  }
  return MatrixFunction(m, grid, vals, slopes);
}

/// T' = sign Q1 T + (1/2i)(Q1' + sign Q1^2 + sign Q0) P_sign with T(xmax) = 0, integrated
/// backwards together with P_sign (whose terminal value comes from a forward solve).
inline MatrixFunction solve_T(const PencilCoefficients& c, int sign, const std::vector<double>& grid,
                              const OdeTolerances& tol = kTightTolerances) {
  const std::size_t m = c.m, mm = m * m;
  const double s = sign >= 0 ? 1.0 : -1.0;
  const MatrixFunction P = solve_P(c, sign, false, grid, tol);
  std::vector<cplx> q1(mm), q1d(mm), q0(mm), src(mm);
  auto source = [&](double x, const cplx* p, cplx* out) {
    c.q1.eval_into(x, q1.data());
    c.q1d.eval_into(x, q1d.data());
    c.q0.eval_into(x, q0.data());
    for (std::size_t e = 0; e < mm; ++e) src[e] = q1d[e] + s * q0[e];
    detail::mm_acc(q1.data(), q1.data(), src.data(), m, s);
    std::fill_n(out, mm, cplx{});
    detail::mm_acc(src.data(), p, out, m, 1.0 / (2.0 * kI));
  };
  auto rhs = [&](double x, const cplx* y, cplx* dy) {
    // y = [P, T]
    source(x, y, dy + mm);
    c.q1.eval_into(x, q1.data());
    std::fill_n(dy, mm, cplx{});
    detail::mm_acc(q1.data(), y, dy, m, s);
    detail::mm_acc(q1.data(), y + mm, dy + mm, m, s);
  };
  std::vector<cplx> y0(2 * mm, cplx{});
  const Matrix pend = P.node_value(grid.size() - 1);
  std::copy_n(pend.data(), mm, y0.data());
  std::vector<double> rev(grid.rbegin(), grid.rend());
  const auto traj = integrate_ivp(rhs, y0, grid.back(), rev, tol);
  std::vector<Matrix> vals(grid.size()), slopes(grid.size());
  std::vector<cplx> d(2 * mm);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const std::size_t r = grid.size() - 1 - k;
    vals[k] = detail::block(traj.y[r], 1, m);
    rhs(grid[k], traj.y[r].data(), d.data());
    slopes[k] = detail::block(d, 1, m);
  }
  return MatrixFunction(m, grid, vals, slopes);
}

enum class BaseKind { Phi, S, PhiStar, SStar };

/// phi: phi(0) = I, phi'(0) = -(i rho h1 + h0). S: S(0) = 0, S'(0) = I.
/// Star kinds solve Z'' + Z V = 0 with the mirrored initial data.
inline SolutionField solve_base(const PencilCoefficients& c, cplx rho, BaseKind kind, const std::vector<double>& grid,
                                const OdeTolerances& tol = {}) {
  const std::size_t m = c.m;
  const auto mi = static_cast<Eigen::Index>(m);
  const bool star = kind == BaseKind::PhiStar || kind == BaseKind::SStar;
  Matrix y0, yp0;
  if (kind == BaseKind::Phi || kind == BaseKind::PhiStar) {
    y0 = identity(mi);
    yp0 = -(kI * rho * c.h1 + c.h0);
  } else {
    y0 = Matrix::Zero(mi, mi);
    yp0 = identity(mi);
  }
  const auto init = detail::pack({&y0, &yp0});
  detail::SecondOrderRhs rhs(c, rho, star);
  const auto traj = integrate_ivp(rhs, init, 0.0, grid, tol);
  SolutionField f;
  f.rho = rho;
  f.grid = grid;
  f.Y.reserve(grid.size());
  f.Yprime.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    f.Y.push_back(detail::block(traj.y[k], 0, m));
    f.Yprime.push_back(detail::block(traj.y[k], 1, m));
  }
  return f;
}

/// Wronskian <Z, Y> = Z' Y - Z Y'.
inline Matrix wronskian(const Matrix& z, const Matrix& zp, const Matrix& y, const Matrix& yp) {
  return zp * y - z * yp;
}

}  // namespace qpencil
