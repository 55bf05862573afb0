#pragma once

// Fundamental system E+ (exp(i rho x)-type) and E- (exp(-i rho x)-type).
//
// Two independent routes:
//  * successive approximations of the Volterra-type integral equations
//    (build_E_plus / build_E_minus), valid for |rho| >= rho_alpha;
//  * backward shooting of the factored equation for W = exp(-i s rho x) E from
//    the exact terminal data beyond xmax (jost_shoot). This one works for every
//    rho in the closed half-plane of decay and is the production route for the
//    Weyl matrix.

#include "qpencil/ode.hpp"

#include <array>
#include <span>
#include <vector>

namespace qpencil {

/// The four transport matrices P+, P-, P+*, P-* of one pencil.
struct Transport {
  MatrixFunction plus, minus, plus_star, minus_star;

  const MatrixFunction& get(int sign, bool star) const {
    if (sign >= 0) return star ? plus_star : plus;
    return star ? minus_star : minus;
  }
};

inline Transport make_transport(const PencilCoefficients& c, const OdeTolerances& tol = kTightTolerances) {
  const auto& g = c.grid();
  return {solve_P(c, +1, false, g, tol), solve_P(c, -1, false, g, tol), solve_P(c, +1, true, g, tol),
          solve_P(c, -1, true, g, tol)};
}

// ---------------------------------------------------------------------------
// Bounds controlling the successive approximations.

struct AuxiliaryBounds {
  std::vector<double> grid;
  std::vector<double> F;  ///< exp(int_0^x |Q1|)
  std::vector<double> G;  ///< 3 F (2|Q1'| + |Q1^2| + |Q0|)
  std::vector<double> H;  ///< int_x^xmax G F

  double H_at(double x) const {
    if (x >= grid.back()) return 0.0;
    if (x <= grid.front()) return H.front();
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - grid.begin()) - 1;
    const double t = (x - grid[k]) / (grid[k + 1] - grid[k]);
    return (1 - t) * H[k] + t * H[k + 1];
  }
  double F_max() const { return *std::max_element(F.begin(), F.end()); }
};

inline AuxiliaryBounds compute_aux_bounds(const PencilCoefficients& c) {
  AuxiliaryBounds b;
  b.grid = c.grid();
  const std::size_t n = b.grid.size();
  std::vector<double> nq1(n);
  b.F.resize(n);
  b.G.resize(n);
  b.H.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) nq1[k] = matrix_norm(c.q1.node_value(k));
  double acc = 0.0;
  b.F[0] = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    acc += 0.5 * (nq1[k] + nq1[k - 1]) * (b.grid[k] - b.grid[k - 1]);
    b.F[k] = std::exp(acc);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const Matrix q1 = c.q1.node_value(k);
    b.G[k] = 3.0 * b.F[k] *
             (2.0 * matrix_norm(c.q1d.node_value(k)) + matrix_norm(q1 * q1) + matrix_norm(c.q0.node_value(k)));
  }
  for (std::size_t k = n - 1; k-- > 0;) {
    b.H[k] = b.H[k + 1] + 0.5 * (b.G[k] * b.F[k] + b.G[k + 1] * b.F[k + 1]) * (b.grid[k + 1] - b.grid[k]);
  }
  return b;
}

struct JostConfig {
  double alpha = 0.0;
  double rho_alpha = 0.0;
  std::size_t max_iters = 400;
  double series_tol = 1e-13;
};

/// Smallest grid abscissa alpha such that |Q1(t)| <= |rho|/2 for t >= alpha and
/// 4 H(alpha) <= |rho|; rho_alpha is the threshold those two conditions imply.
inline JostConfig admissible_config(const PencilCoefficients& c, const AuxiliaryBounds& aux, double abs_rho) {
  const auto& g = c.grid();
  const std::size_t n = g.size();
  std::vector<double> tail_q1(n);
  double run = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    run = std::max(run, matrix_norm(c.q1.node_value(k)));
    tail_q1[k] = run;
  }
  JostConfig cfg;
  for (std::size_t k = 0; k < n; ++k) {
    if (tail_q1[k] <= abs_rho / 2 && 4.0 * aux.H[k] <= abs_rho) {
      cfg.alpha = g[k];
      cfg.rho_alpha = std::max(4.0 * aux.H[k], 2.0 * tail_q1[k]);
      return cfg;
    }
  }
  cfg.alpha = g.back();
  cfg.rho_alpha = 0.0;
  return cfg;
}

struct JostStats {
  std::size_t iterations = 0;
  std::vector<double> ratios;  ///< sup|Z_{k+1}| / sup|Z_k|
  double alpha = 0.0;
};

namespace detail {

inline constexpr std::array<double, 4> kGL4x{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                              0.8611363115940526};
inline constexpr std::array<double, 4> kGL4w{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                              0.3478548451374538};

/// Fine grid on [a, xmax] containing every requested output in [a, xmax] as a node.
inline std::vector<double> refine_grid(double a, double xmax, std::span<const double> outputs, double hmax) {
  std::vector<double> anchors{a};
  for (double x : outputs)
    if (x > a && x < xmax) anchors.push_back(x);
  anchors.push_back(xmax);
  std::sort(anchors.begin(), anchors.end());
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
  std::vector<double> fine{anchors.front()};
  for (std::size_t k = 1; k < anchors.size(); ++k) {
    const double len = anchors[k] - anchors[k - 1];
    const auto cells = static_cast<std::size_t>(std::max(1.0, std::ceil(len / hmax)));
    for (std::size_t j = 1; j <= cells; ++j)
      fine.push_back(j == cells ? anchors[k] : anchors[k - 1] + len * static_cast<double>(j) / cells);
  }
  return fine;
}

/// Position-dependent data of the successive approximations, at fine-grid nodes
/// and at four Gauss points per cell.
struct KernelTables {
  std::size_t m = 1;
  std::vector<double> pts;  // node k at index 5k, Gauss points of cell k at 5k+1..5k+4
  std::vector<Matrix> Pp, Pm, Pps, Pms, Q1, K, KQ1dK, A;
};

/// A = K (Q1' K (i s rho) - Q1^2 - Q0), used as g = A Y + KQ1dK Y'.
inline KernelTables make_tables(const PencilCoefficients& c, const Transport& tr, cplx rho, double s,
                                const std::vector<double>& fine) {
  KernelTables t;
  t.m = c.m;
  const auto mi = static_cast<Eigen::Index>(c.m);
  const std::size_t nc = fine.size() - 1;
  t.pts.resize(5 * fine.size());
  for (std::size_t k = 0; k < fine.size(); ++k) {
    t.pts[5 * k] = fine[k];
    if (k < nc) {
      const double mid = 0.5 * (fine[k] + fine[k + 1]), half = 0.5 * (fine[k + 1] - fine[k]);
      for (int q = 0; q < 4; ++q) t.pts[5 * k + 1 + q] = mid + half * kGL4x[q];
    } else {
      for (int q = 0; q < 4; ++q) t.pts[5 * k + 1 + q] = fine[k];
    }
  }
  const std::size_t np = t.pts.size();
  for (auto* v : {&t.Pp, &t.Pm, &t.Pps, &t.Pms, &t.Q1, &t.K, &t.KQ1dK, &t.A}) v->resize(np);
  const Matrix eye = identity(mi);
  for (std::size_t p = 0; p < np; ++p) {
    const double x = t.pts[p];
    t.Pp[p] = tr.plus(x);
    t.Pm[p] = tr.minus(x);
    t.Pps[p] = tr.plus_star(x);
    t.Pms[p] = tr.minus_star(x);
    t.Q1[p] = c.q1(x);
    const Matrix q1d = c.q1d(x);
    t.K[p] = (kI * rho * eye - t.Q1[p]).inverse();
    t.KQ1dK[p] = t.K[p] * q1d * t.K[p];
    t.A[p] = t.K[p] * (q1d * t.K[p] * (kI * s * rho) - t.Q1[p] * t.Q1[p] - c.q0(x));
  }
  return t;
}

/// Hermite cubic value and derivative on [x0, x1] from end values and slopes.
inline void hermite(double x0, double x1, const Matrix& y0, const Matrix& d0, const Matrix& y1, const Matrix& d1,
                    double x, Matrix& val, Matrix& der) {
  const double h = x1 - x0, t = (x - x0) / h, t2 = t * t, t3 = t2 * t;
  val = (2 * t3 - 3 * t2 + 1) * y0 + ((t3 - 2 * t2 + t) * h) * d0 + (-2 * t3 + 3 * t2) * y1 + ((t3 - t2) * h) * d1;
  der = ((6 * t2 - 6 * t) / h) * y0 + (3 * t2 - 4 * t + 1) * d0 + ((-6 * t2 + 6 * t) / h) * y1 + (3 * t2 - 2 * t) * d1;
}

inline double sup_norm(const std::vector<Matrix>& v) {
  double s = 0.0;
  for (const auto& a : v) s = std::max(s, matrix_norm(a));
  return s;
}

/// Continues a solution of l_rho(Y) = 0 from (Y, Y') at x = a to the outputs below a.
inline void continue_left(const PencilCoefficients& c, cplx rho, const Matrix& ya, const Matrix& ypa, double a,
                          std::span<const double> outputs, std::vector<Matrix>& Y, std::vector<Matrix>& Yp,
                          const OdeTolerances& tol) {
  std::vector<double> below;
  std::vector<std::size_t> idx;
  for (std::size_t k = outputs.size(); k-- > 0;) {
    if (outputs[k] < a) {
      below.push_back(outputs[k]);
      idx.push_back(k);
    }
  }
  if (below.empty()) return;
  SecondOrderRhs rhs(c, rho, false);
  const auto init = pack({&ya, &ypa});
  const auto traj = integrate_ivp(rhs, init, a, below, tol);
  for (std::size_t j = 0; j < below.size(); ++j) {
    Y[idx[j]] = block(traj.y[j], 0, c.m);
    Yp[idx[j]] = block(traj.y[j], 1, c.m);
  }
}

}  // namespace detail

/// E+ = exp(i rho x) Z by successive approximations for x >= alpha and a Cauchy
/// problem to the left of alpha. Requires Im rho >= 0 and |rho| >= cfg.rho_alpha.
inline SolutionField build_E_plus(const PencilCoefficients& c, const Transport& tr, cplx rho,
                                  const std::vector<double>& outputs, const JostConfig& cfg,
                                  JostStats* stats = nullptr, const OdeTolerances& tol = {}) {
  const double ar = std::abs(rho);
  if (rho.imag() < 0) throw InputError("build_E_plus: rho must lie in the closed upper half-plane");
  if (ar < cfg.rho_alpha || ar == 0.0) throw InputError("build_E_plus: |rho| below the admissibility threshold");
  const std::size_t m = c.m;
  const double hmax = std::min(0.02, 0.15 / ar);
  const auto fine = detail::refine_grid(cfg.alpha, c.xmax, outputs, hmax);
  const auto tab = detail::make_tables(c, tr, rho, +1.0, fine);
  const std::size_t n = fine.size(), nc = n - 1;

  // Z_0 = P-, Z_0' = -Q1 P-.
  std::vector<Matrix> Zk(n), Zpk(n), Z(n), Zp(n);
  for (std::size_t k = 0; k < n; ++k) {
    Zk[k] = tab.Pm[5 * k];
    Zpk[k] = -tab.Q1[5 * k] * tab.Pm[5 * k];
    Z[k] = Zk[k];
    Zp[k] = Zpk[k];
  }
  const auto mi = static_cast<Eigen::Index>(m);
  Matrix I1 = Matrix::Zero(mi, mi), I2 = Matrix::Zero(mi, mi), val(mi, mi), der(mi, mi);
  const AuxiliaryBounds aux = compute_aux_bounds(c);
  const double Fsup = aux.F_max(), Ha = aux.H_at(cfg.alpha);
  JostStats st;
  st.alpha = cfg.alpha;
  double bound = Fsup;
  std::size_t k_it = 0;
  double prev_sup = detail::sup_norm(Zk);
  while (true) {
    ++k_it;
    bound *= 2.0 * Ha / (ar * static_cast<double>(k_it));
    if (k_it > cfg.max_iters) throw AlgorithmError("build_E_plus: iteration cap reached");
    std::vector<Matrix> Zn(n), Zpn(n);
    I1.setZero();
    I2.setZero();
    Zn[nc] = Matrix::Zero(mi, mi);
    Zpn[nc] = Matrix::Zero(mi, mi);
    for (std::size_t j = nc; j-- > 0;) {
      const double x0 = fine[j], x1 = fine[j + 1], half = 0.5 * (x1 - x0);
      Matrix c1 = Matrix::Zero(mi, mi), c2 = Matrix::Zero(mi, mi);
      for (int q = 0; q < 4; ++q) {
        const std::size_t p = 5 * j + 1 + static_cast<std::size_t>(q);
        const double t = tab.pts[p];
        detail::hermite(x0, x1, Zk[j], Zpk[j], Zk[j + 1], Zpk[j + 1], t, val, der);
        const Matrix g = tab.A[p] * val + tab.KQ1dK[p] * der;
        const double w = half * detail::kGL4w[q];
        c1 += w * (tab.Pps[p] * g);
        c2 += (w * std::exp(2.0 * kI * rho * (t - x0))) * (tab.Pms[p] * g);
      }
      I1 += c1;
      I2 = std::exp(2.0 * kI * rho * (x1 - x0)) * I2 + c2;
      const std::size_t p0 = 5 * j;
      Zn[j] = -0.5 * (tab.Pm[p0] * I1 - tab.Pp[p0] * I2);
      Zpn[j] = 0.5 * tab.Q1[p0] * (tab.Pm[p0] * I1 + tab.Pp[p0] * I2) - kI * rho * (tab.Pp[p0] * I2);
    }
    const double sup = detail::sup_norm(Zn);
    st.ratios.push_back(prev_sup > 0 ? sup / prev_sup : 0.0);
    prev_sup = sup;
    for (std::size_t k = 0; k < n; ++k) {
      Z[k] += Zn[k];
      Zp[k] += Zpn[k];
    }
    Zk.swap(Zn);
    Zpk.swap(Zpn);
    if (bound < cfg.series_tol || sup == 0.0) break;
  }
  st.iterations = k_it;
  if (stats) *stats = st;

  SolutionField f;
  f.rho = rho;
  f.grid = outputs;
  f.Y.assign(outputs.size(), Matrix());
  f.Yprime.assign(outputs.size(), Matrix());
  for (std::size_t o = 0; o < outputs.size(); ++o) {
    const double x = outputs[o];
    if (x < cfg.alpha) continue;
    const auto it = std::lower_bound(fine.begin(), fine.end(), x - 1e-14 * std::max(1.0, x));
    const std::size_t k = static_cast<std::size_t>(it - fine.begin());
    const cplx e = std::exp(kI * rho * x);
    f.Y[o] = e * Z[k];
    f.Yprime[o] = e * (Zp[k] + kI * rho * Z[k]);
  }
  const cplx ea = std::exp(kI * rho * cfg.alpha);
  detail::continue_left(c, rho, ea * Z[0], ea * (Zp[0] + kI * rho * Z[0]), cfg.alpha, outputs, f.Y, f.Yprime, tol);
  return f;
}

/// E- = exp(-i rho x) xi for rho in the open upper half-plane.
inline SolutionField build_E_minus(const PencilCoefficients& c, const Transport& tr, cplx rho,
                                   const std::vector<double>& outputs, const JostConfig& cfg,
                                   JostStats* stats = nullptr, const OdeTolerances& tol = {}) {
  const double ar = std::abs(rho);
  if (!(rho.imag() > 0)) throw InputError("build_E_minus: rho must lie in the open upper half-plane");
  if (ar < cfg.rho_alpha) throw InputError("build_E_minus: |rho| below the admissibility threshold");
  const std::size_t m = c.m;
  const double hmax = std::min(0.02, 0.15 / ar);
  const auto fine = detail::refine_grid(cfg.alpha, c.xmax, outputs, hmax);
  const auto tab = detail::make_tables(c, tr, rho, -1.0, fine);
  const std::size_t n = fine.size(), nc = n - 1;
  const auto mi = static_cast<Eigen::Index>(m);

  std::vector<Matrix> Xk(n), Xpk(n), X(n), Xp(n);
  for (std::size_t k = 0; k < n; ++k) {
    Xk[k] = tab.Pp[5 * k];
    Xpk[k] = tab.Q1[5 * k] * tab.Pp[5 * k];
    X[k] = Xk[k];
    Xp[k] = Xpk[k];
  }
  const AuxiliaryBounds aux = compute_aux_bounds(c);
  const double Fsup = aux.F_max(), Ha = aux.H_at(cfg.alpha);
  JostStats st;
  st.alpha = cfg.alpha;
  double bound = Fsup;
  std::size_t k_it = 0;
  double prev_sup = detail::sup_norm(Xk);
  Matrix val(mi, mi), der(mi, mi);
  std::vector<Matrix> g(tab.pts.size());
  while (true) {
    ++k_it;
    bound *= 2.0 * Ha / ar;
    if (k_it > cfg.max_iters) throw AlgorithmError("build_E_minus: iteration cap reached");
    for (std::size_t j = 0; j < nc; ++j) {
      for (int q = 0; q < 4; ++q) {
        const std::size_t p = 5 * j + 1 + static_cast<std::size_t>(q);
        detail::hermite(fine[j], fine[j + 1], Xk[j], Xpk[j], Xk[j + 1], Xpk[j + 1], tab.pts[p], val, der);
        g[p] = tab.A[p] * val + tab.KQ1dK[p] * der;
      }
    }
    // J1(x) = int_x^xmax P-* g,  J2(x) = int_alpha^x exp(2 i rho (x - t)) P+* g.
    std::vector<Matrix> J1(n, Matrix::Zero(mi, mi)), J2(n, Matrix::Zero(mi, mi));
    for (std::size_t j = nc; j-- > 0;) {
      const double half = 0.5 * (fine[j + 1] - fine[j]);
      Matrix acc = Matrix::Zero(mi, mi);
      for (int q = 0; q < 4; ++q) {
        const std::size_t p = 5 * j + 1 + static_cast<std::size_t>(q);
        acc += (half * detail::kGL4w[q]) * (tab.Pms[p] * g[p]);
      }
      J1[j] = J1[j + 1] + acc;
    }
    for (std::size_t j = 0; j < nc; ++j) {
      const double x1 = fine[j + 1], half = 0.5 * (fine[j + 1] - fine[j]);
      Matrix acc = Matrix::Zero(mi, mi);
      for (int q = 0; q < 4; ++q) {
        const std::size_t p = 5 * j + 1 + static_cast<std::size_t>(q);
        acc += (half * detail::kGL4w[q] * std::exp(2.0 * kI * rho * (x1 - tab.pts[p]))) * (tab.Pps[p] * g[p]);
      }
      J2[j + 1] = std::exp(2.0 * kI * rho * (x1 - fine[j])) * J2[j] + acc;
    }
    std::vector<Matrix> Xn(n), Xpn(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t p0 = 5 * k;
      const Matrix a = tab.Pp[p0] * J1[k], b = tab.Pm[p0] * J2[k];
      Xn[k] = 0.5 * (a + b);
      Xpn[k] = 0.5 * tab.Q1[p0] * (a - b) + kI * rho * b;
    }
    const double sup = detail::sup_norm(Xn);
    st.ratios.push_back(prev_sup > 0 ? sup / prev_sup : 0.0);
    prev_sup = sup;
    for (std::size_t k = 0; k < n; ++k) {
      X[k] += Xn[k];
      Xp[k] += Xpn[k];
    }
    Xk.swap(Xn);
    Xpk.swap(Xpn);
    if (bound < cfg.series_tol || sup == 0.0) break;
  }
  st.iterations = k_it;
  if (stats) *stats = st;

  SolutionField f;
  f.rho = rho;
  f.grid = outputs;
  f.Y.assign(outputs.size(), Matrix());
  f.Yprime.assign(outputs.size(), Matrix());
  for (std::size_t o = 0; o < outputs.size(); ++o) {
    const double x = outputs[o];
    if (x < cfg.alpha) continue;
    const auto it = std::lower_bound(fine.begin(), fine.end(), x - 1e-14 * std::max(1.0, x));
    const std::size_t k = static_cast<std::size_t>(it - fine.begin());
    const cplx e = std::exp(-kI * rho * x);
    f.Y[o] = e * X[k];
    f.Yprime[o] = e * (Xp[k] - kI * rho * X[k]);
  }
  const cplx ea = std::exp(-kI * rho * cfg.alpha);
  detail::continue_left(c, rho, ea * X[0], ea * (Xp[0] - kI * rho * X[0]), cfg.alpha, outputs, f.Y, f.Yprime, tol);
  return f;
}

/// min over the grid of |det [[E+, E-], [E+', E-']]|.
inline double check_independence(const SolutionField& ep, const SolutionField& em) {
  if (ep.grid.size() != em.grid.size()) throw InputError("check_independence: grid mismatch");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ep.grid.size(); ++k) {
    const auto m = ep.Y[k].rows();
    Matrix b(2 * m, 2 * m);
    b << ep.Y[k], em.Y[k], ep.Yprime[k], em.Yprime[k];
    best = std::min(best, std::abs(b.determinant()));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Shooting route.

/// Solution of l_rho(E) = 0 (or of the star equation) equal to exp(i s rho x) C beyond xmax,
/// C = P_{-s}(xmax) (resp. P*_{-s}(xmax)). side s = +1 decays in the upper half-plane,
/// s = -1 in the lower one; on the real axis the side selects the boundary value.
/// Returns E, E' at the outputs (any order).
inline SolutionField jost_shoot(const PencilCoefficients& c, const Transport& tr, cplx rho, int side, bool star,
                                const std::vector<double>& outputs, const OdeTolerances& tol = {}) {
  const std::size_t m = c.m, mm = m * m;
  const double s = side >= 0 ? 1.0 : -1.0;
  const Matrix C = tr.get(side >= 0 ? -1 : +1, star).node_value(c.grid().size() - 1);
  std::vector<cplx> q1(mm), v(mm);
  const cplx two_i_s_rho = 2.0 * kI * s * rho;
  auto rhs = [&](double x, const cplx* y, cplx* dy) {
    // y = [W, W'],  W'' = -2 i s rho W' - V1 W,  V1 = 2 i rho Q1 + Q0.
    detail::potential_into(c, rho, x, q1.data(), v.data());
    for (std::size_t e = 0; e < mm; ++e) {
      dy[e] = y[mm + e];
      dy[mm + e] = -two_i_s_rho * y[mm + e];
    }
    if (star) detail::mm_acc(y, v.data(), dy + mm, m, -1.0);
    else detail::mm_acc(v.data(), y, dy + mm, m, -1.0);
  };
  std::vector<std::size_t> order(outputs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return outputs[a] > outputs[b]; });
  std::vector<double> xs;
  for (auto k : order) xs.push_back(std::min(outputs[k], c.xmax));
  std::vector<cplx> y0(2 * mm, cplx{});
  std::copy_n(C.data(), mm, y0.data());
  const auto traj = integrate_ivp(rhs, y0, c.xmax, xs, tol);
  SolutionField f;
  f.rho = rho;
  f.grid = outputs;
  f.Y.resize(outputs.size());
  f.Yprime.resize(outputs.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    const std::size_t k = order[j];
    const double x = outputs[k];
    const cplx e = std::exp(kI * s * rho * x);
    const Matrix W = detail::block(traj.y[j], 0, m), Wp = detail::block(traj.y[j], 1, m);
    f.Y[k] = e * W;
    f.Yprime[k] = e * (Wp + kI * s * rho * W);
  }
  return f;
}

/// Same data at x = 0 only, unscaled: returns {W(0), W'(0) + i s rho W(0)} = {E(0), E'(0)}.
inline std::pair<Matrix, Matrix> jost_at_zero(const PencilCoefficients& c, const Transport& tr, cplx rho, int side,
                                              bool star, const OdeTolerances& tol = {}) {
  const std::vector<double> zero{0.0};
  auto f = jost_shoot(c, tr, rho, side, star, zero, tol);
  return {f.Y[0], f.Yprime[0]};
}

}  // namespace qpencil
