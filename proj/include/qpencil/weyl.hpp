#pragma once

// Weyl solution and Weyl matrix, their star counterparts, and recovery of the
// boundary data from the large-|rho| behaviour of M.

#include "qpencil/jost.hpp"

#include <string>
#include <vector>

namespace qpencil {

enum class Side { Circle, Above, Below, Ladder };

inline const char* side_name(Side s) {
  switch (s) {
    case Side::Circle: return "circle";
    case Side::Above: return "above";
    case Side::Below: return "below";
    case Side::Ladder: return "ladder";
  }
  return "?";
}

inline Side parse_side(const std::string& s) {
  if (s == "circle") return Side::Circle;
  if (s == "above") return Side::Above;
  if (s == "below") return Side::Below;
  if (s == "ladder") return Side::Ladder;
  throw InputError("unknown side tag '" + s + "'");
}

/// +1 when M at (rho, side) is built from the exp(i rho x) solution, -1 otherwise.
inline int half_plane(cplx rho, Side side) {
  if (side == Side::Above) return +1;
  if (side == Side::Below) return -1;
  if (rho.imag() > 0) return +1;
  if (rho.imag() < 0) return -1;
  throw InputError("real rho needs an explicit above/below side");
}

/// Upper bound accepted for cond(U(E)) before rho is treated as a pole.
inline constexpr double kPoleCondition = 1e12;

namespace detail {

inline Matrix boundary_factor(const PencilCoefficients& c, cplx rho) { return kI * rho * c.h1 + c.h0; }

inline Matrix checked_inverse(const Matrix& u, cplx rho) {
  Eigen::PartialPivLU<Matrix> lu(u);
  const double rc = lu.rcond();
  if (!(rc > 1.0 / kPoleCondition))
    throw AlgorithmError("boundary form of the Jost solution is singular near rho=(" + std::to_string(rho.real()) +
                         "," + std::to_string(rho.imag()) + ")");
  return lu.inverse();
}

}  // namespace detail

/// U_rho(E) for the Jost-type solution of the given half-plane (s = +1 / -1).
inline Matrix jost_boundary_form(const PencilCoefficients& c, const Transport& tr, cplx rho, int s, bool star = false,
                                 const OdeTolerances& tol = {}) {
  const auto [e0, ep0] = jost_at_zero(c, tr, rho, s, star, tol);
  return star ? Matrix(ep0 + e0 * detail::boundary_factor(c, rho)) : Matrix(ep0 + detail::boundary_factor(c, rho) * e0);
}

/// M(rho) = Phi(0, rho) = E(0) U(E)^{-1}.
inline Matrix weyl_matrix(const PencilCoefficients& c, const Transport& tr, cplx rho, Side side = Side::Circle,
                          const OdeTolerances& tol = {}) {
  const int s = half_plane(rho, side);
  const auto [e0, ep0] = jost_at_zero(c, tr, rho, s, false, tol);
  const Matrix u = ep0 + detail::boundary_factor(c, rho) * e0;
  return e0 * detail::checked_inverse(u, rho);
}

/// M*(rho) = U*(E*)^{-1} E*(0) from the row-type equation.
inline Matrix star_weyl_matrix(const PencilCoefficients& c, const Transport& tr, cplx rho, Side side = Side::Circle,
                               const OdeTolerances& tol = {}) {
  const int s = half_plane(rho, side);
  const auto [e0, ep0] = jost_at_zero(c, tr, rho, s, true, tol);
  const Matrix u = ep0 + e0 * detail::boundary_factor(c, rho);
  return detail::checked_inverse(u, rho) * e0;
}

/// Phi = E U(E)^{-1} on the requested abscissas.
inline SolutionField weyl_solution(const PencilCoefficients& c, const Transport& tr, cplx rho,
                                   const std::vector<double>& grid, Side side = Side::Circle,
                                   const OdeTolerances& tol = {}) {
  const int s = half_plane(rho, side);
  std::vector<double> pts = grid;
  pts.push_back(0.0);
  auto f = jost_shoot(c, tr, rho, s, false, pts, tol);
  const Matrix u = f.Yprime.back() + detail::boundary_factor(c, rho) * f.Y.back();
  const Matrix ui = detail::checked_inverse(u, rho);
  SolutionField out;
  out.rho = rho;
  out.grid = grid;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.Y.push_back(f.Y[k] * ui);
    out.Yprime.push_back(f.Yprime[k] * ui);
  }
  return out;
}

/// Phi* = U*(E*)^{-1} E* on the requested abscissas.
inline SolutionField star_weyl_solution(const PencilCoefficients& c, const Transport& tr, cplx rho,
                                        const std::vector<double>& grid, Side side = Side::Circle,
                                        const OdeTolerances& tol = {}) {
  const int s = half_plane(rho, side);
  std::vector<double> pts = grid;
  pts.push_back(0.0);
  auto f = jost_shoot(c, tr, rho, s, true, pts, tol);
  const Matrix u = f.Yprime.back() + f.Y.back() * detail::boundary_factor(c, rho);
  const Matrix ui = detail::checked_inverse(u, rho);
  SolutionField out;
  out.rho = rho;
  out.grid = grid;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.Y.push_back(ui * f.Y[k]);
    out.Yprime.push_back(ui * f.Yprime[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct WeylSample {
  cplx rho;
  Side side = Side::Circle;
  Matrix M;
};

struct WeylSamples {
  std::size_t m = 1;
  double r0 = 0.0;
  double R = 0.0;
  std::size_t n_circle = 0;
  std::size_t n_ray = 0;
  std::string provenance = "forward-computed";
  std::vector<WeylSample> samples;

  std::vector<const WeylSample*> with_side(Side s) const {
    std::vector<const WeylSample*> out;
    for (const auto& w : samples)
      if (w.side == s) out.push_back(&w);
    return out;
  }
};

/// Geometric sigma ladder used for the asymptotic fit.
inline std::vector<double> default_ladder(double lo = 20.0, double hi = 200.0, std::size_t n = 12) {
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k)
    s[k] = lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(n - 1));
  return s;
}

/// M at rho = +i sigma and rho = -i sigma, tagged as ladder samples.
inline std::vector<WeylSample> ladder_samples(const PencilCoefficients& c, const Transport& tr,
                                              const std::vector<double>& sigmas, const OdeTolerances& tol = {}) {
  std::vector<WeylSample> out;
  for (double s : sigmas) {
    for (double sg : {+1.0, -1.0}) {
      const cplx rho{0.0, sg * s};
      out.push_back({rho, Side::Ladder, weyl_matrix(c, tr, rho, Side::Ladder, tol)});
    }
  }
  return out;
}

struct AsymptoticData {
  Matrix h1, h0, q1_at_0;
  Matrix q1_prime_at_0, q0_at_0;  ///< from the third coefficient
  Matrix h1_upper, h1_lower;        ///< h1 from each half-plane separately
  Matrix second_upper, second_lower;  ///< Q1(0) - h0 and -Q1(0) - h0
  double residual_upper = 0.0;  ///< max relative fit residual
  double residual_lower = 0.0;
  double half_plane_mismatch = 0.0;  ///< |h1_upper - h1_lower| entrywise max
};

namespace detail {

/// Least-squares fit M(t) ~ sum_{j=1..terms} t^j C_j for scalar abscissas t = 1/(i rho).
inline std::vector<Matrix> fit_power_series(const std::vector<cplx>& t, const std::vector<Matrix>& M,
                                            std::size_t terms, double* residual) {
  const std::size_t n = t.size();
  const auto m = M.front().rows();
  if (n < terms) throw InputError("asymptotic fit: not enough ladder samples");
  // Columns scaled by a typical |t|^j keep the Vandermonde system well conditioned.
  double tscale = 0.0;
  for (auto v : t) tscale = std::max(tscale, std::abs(v));
  Matrix V(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(terms));
  Eigen::VectorXd rowscale(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    rowscale(static_cast<Eigen::Index>(k)) = 1.0 / std::abs(t[k]);
    for (std::size_t j = 0; j < terms; ++j)
      V(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          std::pow(t[k] / tscale, static_cast<double>(j + 1)) * rowscale(static_cast<Eigen::Index>(k));
  }
  Matrix rhs(static_cast<Eigen::Index>(n), m * m);
  for (std::size_t k = 0; k < n; ++k)
    for (Eigen::Index e = 0; e < m * m; ++e)
      rhs(static_cast<Eigen::Index>(k), e) = M[k].data()[e] * rowscale(static_cast<Eigen::Index>(k));
  const Eigen::ColPivHouseholderQR<Matrix> qr(V);
  const Matrix coef = qr.solve(rhs);
  if (residual) {
    const Matrix r = V * coef - rhs;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < r.rows(); ++k) worst = std::max(worst, r.row(k).norm() / rhs.row(k).norm());
    *residual = worst;
  }
  std::vector<Matrix> out;
  for (std::size_t j = 0; j < terms; ++j) {
    Matrix cj(m, m);
    for (Eigen::Index e = 0; e < m * m; ++e)
      cj.data()[e] = coef(static_cast<Eigen::Index>(j), e) / std::pow(tscale, static_cast<double>(j + 1));
    out.push_back(cj);
  }
  return out;
}

}  // namespace detail

/// Recovers h1, h0 and Q1(0) from ladder samples in both half-planes. The leading
/// coefficient of M in t = 1/(i rho) is (I + h1)^{-1} above and (h1 - I)^{-1} below; the
/// second is (I +- h1)^{-1}(+-Q1(0) - h0)(I +- h1)^{-1}.
/// The Riccati expansion of Phi' Phi^{-1} = s k - s Q1 + (Q1' - s(Q0 + Q1^2))/(2k) + ..., k = i rho,
/// turns the third coefficient into Q1'(0) and Q0(0) as well.
inline AsymptoticData extract_asymptotic_data(const std::vector<WeylSample>& ladder, std::size_t terms = 8,
                                              double consistency_tol = 1e-3) {
  std::vector<cplx> tu, tl;
  std::vector<Matrix> mu, ml;
  for (const auto& s : ladder) {
    if (std::abs(s.rho.real()) > 1e-12 * std::abs(s.rho)) continue;
    const cplx t = 1.0 / (kI * s.rho);
    if (s.rho.imag() > 0) {
      tu.push_back(t);
      mu.push_back(s.M);
    } else {
      tl.push_back(t);
      ml.push_back(s.M);
    }
  }
  if (tu.size() < terms || tl.size() < terms)
    throw InputError("asymptotic fit needs imaginary-axis samples in both half-planes");
  AsymptoticData d;
  const auto cu = detail::fit_power_series(tu, mu, terms, &d.residual_upper);
  const auto cl = detail::fit_power_series(tl, ml, terms, &d.residual_lower);
  const auto m = cu[0].rows();
  const Matrix eye = identity(m);
  const Matrix ip = cu[0].inverse();  // I + h1
  const Matrix im = cl[0].inverse();  // h1 - I
  d.h1_upper = ip - eye;
  d.h1_lower = im + eye;
  d.h1 = 0.5 * (d.h1_upper + d.h1_lower);
  d.second_upper = ip * cu[1] * ip;
  d.second_lower = im * cl[1] * im;
  d.h0 = -0.5 * (d.second_upper + d.second_lower);
  d.q1_at_0 = 0.5 * (d.second_upper - d.second_lower);
  if (terms >= 3) {
    // C = A (C2 A C2 - C3) A with A = s I + h1 equals (Q1'(0) - s(Q0(0) + Q1(0)^2)) / 2
    const Matrix cp = ip * (cu[1] * ip * cu[1] - cu[2]) * ip;
    const Matrix cm = im * (cl[1] * im * cl[1] - cl[2]) * im;
    d.q1_prime_at_0 = cp + cm;
    d.q0_at_0 = cm - cp - d.q1_at_0 * d.q1_at_0;
  }
  d.half_plane_mismatch = (d.h1_upper - d.h1_lower).cwiseAbs().maxCoeff();
  if (d.half_plane_mismatch > consistency_tol)
    throw InputError("asymptotic fits of the two half-planes disagree on h1 by " +
                     std::to_string(d.half_plane_mismatch));
  return d;
}

}  // namespace qpencil
