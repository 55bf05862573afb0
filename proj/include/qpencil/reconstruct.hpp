#pragma once

// From main-equation solutions to coefficients: Omega*Omega, a = Omega^{-1} Omega',
// Omega itself, phi = Omega z, and finally Q1, Q0 by substitution into the equation.

#include "qpencil/main_equation.hpp"

#include <Eigen/Eigenvalues>

#include <string>
#include <vector>

namespace qpencil {

/// Spectral points where z, w and their duals are evaluated off the contour.
struct RecoveryPoints {
  std::vector<cplx> ref;      ///< for Omega*Omega
  std::vector<cplx> extract;  ///< for Q1, Q0
  cplx holdout;               ///< equation residual check only

  std::vector<cplx> all() const {
    std::vector<cplx> v = ref;
    v.insert(v.end(), extract.begin(), extract.end());
    v.push_back(holdout);
    return v;
  }
};

/// Imaginary-axis points scaled by the circle radius.
inline RecoveryPoints default_recovery_points(double r0) {
  RecoveryPoints p;
  for (double f : {1.5, 2.0, 2.5}) p.ref.push_back(kI * f * r0);
  for (double f : {0.5, 1.0, 1.5, 2.0}) p.extract.push_back(kI * f * r0);
  p.holdout = -kI * 1.25 * r0;
  return p;
}

struct OmegaProductSample {
  Matrix S;              ///< Omega* Omega
  Matrix dS;             ///< its x-derivative
  double spread = 0.0;   ///< max relative deviation between reference points
  double bracket = 0.0;  ///< max |z w* - w z*| relative to |z||w*|
};

/// (z w*' - w z*')^{-1} averaged over the given evaluation results, with the
/// derivative from differentiating the bracket.
inline OmegaProductSample omega_product(const std::vector<const EvalValues*>& ev) {
  if (ev.empty()) throw InputError("omega_product: no reference points");
  OmegaProductSample out;
  std::vector<Matrix> Ss;
  for (const EvalValues* e : ev) {
    const Matrix br = e->z[0] * e->ws[1] - e->w[0] * e->zs[1];
    const Matrix dbr = e->z[1] * e->ws[1] + e->z[0] * e->ws[2] - e->w[1] * e->zs[1] - e->w[0] * e->zs[2];
    Eigen::PartialPivLU<Matrix> lu(br);
    if (!(lu.rcond() > 1e-14)) throw AlgorithmError("omega_product: singular bracket");
    const Matrix S = lu.inverse();
    Ss.push_back(S);
    if (out.S.size() == 0) {
      out.S = S;
      out.dS = -S * dbr * S;
    } else {
      out.S += S;
      out.dS += -S * dbr * S;
    }
    const Matrix zero = e->z[0] * e->ws[0] - e->w[0] * e->zs[0];
    out.bracket = std::max(out.bracket, zero.norm() / (e->z[0].norm() * e->ws[0].norm()));
  }
  out.S /= static_cast<double>(ev.size());
  out.dS /= static_cast<double>(ev.size());
  for (const auto& S : Ss) out.spread = std::max(out.spread, (S - out.S).norm() / out.S.norm());
  return out;
}

/// Least-squares X with z* X z = z* S z' - z*' S z over the evaluation points; X is the
/// combination Omega*' Omega - Omega* Omega'. rank receives the numerical rank.
inline Matrix omega_bracket(const std::vector<const EvalValues*>& ev, const Matrix& S, int* rank = nullptr) {
  const auto m = S.rows(), mm = m * m;
  Matrix A(static_cast<Eigen::Index>(ev.size()) * mm, mm);
  Vector b(A.rows());
  Eigen::Index row = 0;
  for (const EvalValues* e : ev) {
    const Matrix& z = e->z[0];
    const Matrix& zs = e->zs[0];
    const Matrix rhs = zs * S * e->z[1] - e->zs[1] * S * z;
    // vec(zs X z) = (z^T kron zs) vec(X)
    const double scale = 1.0 / std::max(1e-300, z.norm() * zs.norm());
    for (Eigen::Index c = 0; c < m; ++c)
      for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index q = 0; q < m; ++q)
          for (Eigen::Index p = 0; p < m; ++p) A(row + c * m + r, q * m + p) = scale * z(q, c) * zs(r, p);
        b(row + c * m + r) = scale * rhs(r, c);
      }
    row += mm;
  }
  const Eigen::ColPivHouseholderQR<Matrix> qr(A);
  if (rank) *rank = static_cast<int>(qr.rank());
  const Vector x = qr.solve(b);
  return Eigen::Map<const Matrix>(x.data(), m, m);
}

/// a = (Omega* Omega)^{-1} Omega* Omega' with Omega* Omega' = (S' - X)/2.
inline Matrix omega_log_derivative(const Matrix& S, const Matrix& dS, const Matrix& X) {
  return S.partialPivLu().solve(0.5 * (dS - X));
}

/// Omega' = a Omega from grid.front() with Omega = I there.
inline MatrixFunction recover_omega(const MatrixFunction& a, const OdeTolerances& tol = kTightTolerances) {
  const std::size_t m = a.dim(), mm = m * m;
  std::vector<cplx> abuf(mm);
  auto rhs = [&](double x, const cplx* y, cplx* dy) {
    a.eval_into(x, abuf.data());
    std::fill_n(dy, mm, cplx{});
    detail::mm_acc(abuf.data(), y, dy, m);
  };
  const Matrix eye = identity(static_cast<Eigen::Index>(m));
  const auto& g = a.grid();
  const auto traj = integrate_ivp(rhs, std::span<const cplx>(eye.data(), mm), g.front(), g, tol);
  std::vector<Matrix> vals(g.size()), slopes(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    vals[k] = detail::view(traj.y[k].data(), m);
    slopes[k] = a.node_value(k) * vals[k];
  }
  return MatrixFunction(m, g, vals, slopes);
}

/// Principal Hermitian square root of a Hermitian positive-definite matrix.
inline Matrix omega_sqrt_hermitian(const Matrix& S, double herm_tol = 1e-8) {
  const double asym = (S - S.adjoint()).norm() / std::max(1e-300, S.norm());
  if (asym > herm_tol) throw InputError("omega_sqrt_hermitian: input is not Hermitian (" + std::to_string(asym) + ")");
  const Matrix H = 0.5 * (S + S.adjoint());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  if (es.eigenvalues().minCoeff() <= 0) throw InputError("omega_sqrt_hermitian: input is not positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

struct PotentialSample {
  Matrix q1, q0;
  double residual = 0.0;  ///< relative least-squares residual
  int rank = 0;
};

/// Solves 2 i rho_k Q1 phi_k + Q0 phi_k = -phi_k'' - rho_k^2 phi_k in least squares over k.
inline PotentialSample extract_potentials(const std::vector<cplx>& rhos, const std::vector<Matrix>& phi,
                                          const std::vector<Matrix>& phi2) {
  const std::size_t K = rhos.size();
  if (K < 2 || phi.size() != K || phi2.size() != K) throw InputError("extract_potentials: need K >= 2 consistent samples");
  const auto m = phi.front().rows();
  // [Q1 Q0] C = Rhs, C = [2 i rho_k phi_k; phi_k] stacked by columns; solve C^T [Q1 Q0]^T = Rhs^T.
  Matrix C(2 * m, static_cast<Eigen::Index>(K) * m), Rhs(m, static_cast<Eigen::Index>(K) * m);
  for (std::size_t k = 0; k < K; ++k) {
    const auto o = static_cast<Eigen::Index>(k) * m;
    const double s = 1.0 / std::max(1e-300, phi[k].norm() * std::max(1.0, std::abs(rhos[k])));
    C.block(0, o, m, m) = s * 2.0 * kI * rhos[k] * phi[k];
    C.block(m, o, m, m) = s * phi[k];
    Rhs.block(0, o, m, m) = -s * (phi2[k] + rhos[k] * rhos[k] * phi[k]);
  }
  const Matrix Ct = C.transpose();
  const Eigen::ColPivHouseholderQR<Matrix> qr(Ct);
  const Matrix sol = qr.solve(Matrix(Rhs.transpose())).transpose();  // m x 2m
  PotentialSample out;
  out.q1 = sol.leftCols(m);
  out.q0 = sol.rightCols(m);
  out.rank = static_cast<int>(qr.rank());
  out.residual = (sol * C - Rhs).norm() / std::max(1e-300, Rhs.norm());
  return out;
}

// ---------------------------------------------------------------------------

/// Per-x results of one reconstruction pass.
struct ConnectionData {
  std::string method = "cauchy-ode";
  std::vector<double> grid;
  std::vector<Matrix> omega_product, a, omega, q1, q0;
  std::vector<double> condition, product_spread, bracket_zero, extract_residual, holdout_residual;
  std::vector<int> bracket_rank;
};

/// Runs the per-x pipeline on already solved main-equation points (ordered by x, all
/// flagged solvable) whose evaluation list was built from pts.all().
inline ConnectionData reconstruct_segment(const std::vector<MainEqPoint>& sol, const RecoveryPoints& pts,
                                          bool hermitian_sqrt = false) {
  if (sol.size() < 2) throw InputError("reconstruct_segment: need at least two x points");
  const std::size_t nref = pts.ref.size(), next = pts.extract.size();
  ConnectionData cd;
  if (hermitian_sqrt) cd.method = "hermitian-sqrt";
  std::vector<Matrix> avals;
  for (const auto& p : sol) {
    std::vector<const EvalValues*> ref, all;
    for (std::size_t i = 0; i < nref; ++i) ref.push_back(&p.eval[i]);
    for (const auto& e : p.eval) all.push_back(&e);
    const auto prod = omega_product(ref);
    int rank = 0;
    const Matrix X = omega_bracket(all, prod.S, &rank);
    cd.grid.push_back(p.x);
    cd.omega_product.push_back(prod.S);
    cd.a.push_back(omega_log_derivative(prod.S, prod.dS, X));
    cd.condition.push_back(p.condition);
    cd.product_spread.push_back(prod.spread);
    cd.bracket_zero.push_back(prod.bracket);
    cd.bracket_rank.push_back(rank);
  }
  const std::size_t m = static_cast<std::size_t>(cd.a.front().rows());
  const auto afun = MatrixFunction::from_samples(m, cd.grid, cd.a);
  MatrixFunction om;
  if (hermitian_sqrt) {
    std::vector<Matrix> v;
    for (const auto& S : cd.omega_product) v.push_back(omega_sqrt_hermitian(S));
    om = MatrixFunction::from_samples(m, cd.grid, v);
  } else {
    om = recover_omega(afun);
  }
  for (std::size_t k = 0; k < sol.size(); ++k) {
    const Matrix O = om.node_value(k), a = cd.a[k], da = afun.node_slope(k);
    cd.omega.push_back(O);
    const Matrix lead = (da + a * a) * O;
    auto phi_at = [&](const EvalValues& e, Matrix& f, Matrix& f2) {
      f = O * e.z[0];
      f2 = lead * e.z[0] + 2.0 * a * O * e.z[1] + O * e.z[2];
    };
    std::vector<Matrix> ph(next), ph2(next);
    for (std::size_t i = 0; i < next; ++i) phi_at(sol[k].eval[nref + i], ph[i], ph2[i]);
    const auto qs = extract_potentials(pts.extract, ph, ph2);
    cd.q1.push_back(qs.q1);
    cd.q0.push_back(qs.q0);
    cd.extract_residual.push_back(qs.residual);
    Matrix f, f2;
    phi_at(sol[k].eval[nref + next], f, f2);
    const cplx r = pts.holdout;
    const Matrix res = f2 + (r * r * identity(static_cast<Eigen::Index>(m)) + 2.0 * kI * r * qs.q1 + qs.q0) * f;
    cd.holdout_residual.push_back(res.norm() / std::max(1e-300, std::abs(r * r) * f.norm()));
  }
  return cd;
}

}  // namespace qpencil
