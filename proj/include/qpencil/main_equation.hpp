#pragma once

// Nystrom discretization of the main equation on the contour.
//
// Row form, for the model pencil (tilde quantities) and the Weyl-matrix
// difference Mhat = M - Mtilde:
//   z(rho) + (1/2 pi i) int_gamma z(theta) Mhat(theta) D(x, rho, theta) dtheta = phi(rho),
//   D(x, rho, theta) = <phi*(theta), phi(rho)> / (rho - theta),
// and its column counterpart for z*, with D*(x, rho, theta) = D(x, theta, rho).
// Collapsing each above/below pair of ray nodes into one unknown (z is entire),
// the discrete system is Z (I + G Dm) = Phi with G = blockdiag(G_j); the column
// system is (I + Dm G) Z* = Phi*, solved through the push-through identity
// (I + Dm G)^{-1} = I - Dm (I + G Dm)^{-1} G so one LU factorization serves both.
// First and second x-derivatives come from differentiating the discrete system.

#include "qpencil/contour.hpp"
#include "qpencil/parallel.hpp"

#include <array>
#include <limits>
#include <vector>

namespace qpencil {

/// phi(rho) and phi*(theta) of one pencil on a list of abscissas plus
/// int_0^x phi*(theta)((rho + theta) I + 2 i Q1) phi(rho) ds.
struct PairFields {
  cplx rho, theta;
  std::vector<double> xs;
  std::vector<Matrix> phi, dphi, phis, dphis, integral;
};

inline PairFields compute_pair_fields(const PencilCoefficients& c, cplx rho, cplx theta, const std::vector<double>& xs,
                                      const OdeTolerances& tol = {}) {
  const std::size_t m = c.m, mm = m * m;
  const auto mi = static_cast<Eigen::Index>(m);
  std::vector<cplx> q1(mm), v(mm), vt(mm), tmp(mm);
  auto rhs = [&](double x, const cplx* y, cplx* dy) {
    // y = [phi, phi', phi*, phi*', J]
    c.q1.eval_into(x, q1.data());
    c.q0.eval_into(x, v.data());
    std::copy(v.begin(), v.end(), vt.begin());
    for (std::size_t e = 0; e < mm; ++e) {
      v[e] += 2.0 * kI * rho * q1[e];
      vt[e] += 2.0 * kI * theta * q1[e];
    }
    const cplx r2 = rho * rho, t2 = theta * theta;
    for (std::size_t e = 0; e < mm; ++e) {
      dy[e] = y[mm + e];
      dy[mm + e] = -r2 * y[e];
      dy[2 * mm + e] = y[3 * mm + e];
      dy[3 * mm + e] = -t2 * y[2 * mm + e];
      dy[4 * mm + e] = cplx{};
      tmp[e] = cplx{};
    }
    detail::mm_acc(v.data(), y, dy + mm, m, -1.0);
    detail::mm_acc(y + 2 * mm, vt.data(), dy + 3 * mm, m, -1.0);
    detail::mm_acc(y + 2 * mm, y, dy + 4 * mm, m, rho + theta);
    detail::mm_acc(y + 2 * mm, q1.data(), tmp.data(), m, 2.0 * kI);
    detail::mm_acc(tmp.data(), y, dy + 4 * mm, m);
  };
  const Matrix eye = identity(mi), zero = Matrix::Zero(mi, mi);
  const Matrix dr = -(kI * rho * c.h1 + c.h0), dt = -(kI * theta * c.h1 + c.h0);
  const auto init = detail::pack({&eye, &dr, &eye, &dt, &zero});
  const auto traj = integrate_ivp(rhs, init, 0.0, xs, tol);
  PairFields f;
  f.rho = rho;
  f.theta = theta;
  f.xs = xs;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    f.phi.push_back(detail::block(traj.y[k], 0, m));
    f.dphi.push_back(detail::block(traj.y[k], 1, m));
    f.phis.push_back(detail::block(traj.y[k], 2, m));
    f.dphis.push_back(detail::block(traj.y[k], 3, m));
    f.integral.push_back(detail::block(traj.y[k], 4, m));
  }
  return f;
}

struct KernelDValue {
  Matrix value;
  Matrix divided;   ///< empty when rho == theta
  Matrix integral;  ///< i h1 + int_0^x ...
  bool used_integral = false;
};

/// D(x, rho, theta) by the divided difference when |rho - theta| >= threshold and by
/// the integral representation otherwise.
inline KernelDValue kernel_D(const PencilCoefficients& c, double x, cplx rho, cplx theta, double threshold = 0.1,
                             const OdeTolerances& tol = {}) {
  const std::vector<double> xs{x};
  const auto f = compute_pair_fields(c, rho, theta, xs, tol);
  KernelDValue r;
  r.integral = kI * c.h1 + f.integral[0];
  if (rho != theta) r.divided = wronskian(f.phis[0], f.dphis[0], f.phi[0], f.dphi[0]) / (rho - theta);
  r.used_integral = std::abs(rho - theta) < threshold;
  r.value = r.used_integral ? r.integral : r.divided;
  return r;
}

// ---------------------------------------------------------------------------

/// Contour nodes with the ray banks merged: one unknown per distinct theta, with
/// G = (1/2 pi i) sum over merged nodes of dtheta * Mhat.
struct NystromNodes {
  std::vector<cplx> theta;
  std::vector<Matrix> G;
  std::vector<std::size_t> unique_of;  ///< contour node -> unknown index
};

inline NystromNodes collapse_nodes(const Contour& ct, const std::vector<Matrix>& mhat) {
  if (mhat.size() != ct.size()) throw InputError("collapse_nodes: one Mhat sample per contour node required");
  NystromNodes nn;
  nn.unique_of.assign(ct.size(), 0);
  const cplx inv2pii = 1.0 / (2.0 * kPi * kI);
  for (std::size_t j = 0; j < ct.size(); ++j) {
    const auto& nd = ct.nodes[j];
    if (nd.pair >= 0 && static_cast<std::size_t>(nd.pair) < j) {
      const std::size_t u = nn.unique_of[static_cast<std::size_t>(nd.pair)];
      nn.unique_of[j] = u;
      nn.G[u] += inv2pii * nd.dtheta * mhat[j];
      continue;
    }
    nn.unique_of[j] = nn.theta.size();
    nn.theta.push_back(nd.rho);
    nn.G.push_back(inv2pii * nd.dtheta * mhat[j]);
  }
  return nn;
}

/// Values of one solution family at an evaluation point: index 0, 1, 2 is the x-derivative order.
struct EvalValues {
  std::array<Matrix, 3> z, zs, w, ws;
};

struct MainEqOptions {
  double cond_limit = 1e8;
  double sv_ratio = 1e-8;
  bool keep_node_solution = false;
};

struct MainEqPoint {
  double x = 0.0;
  bool solvable = true;
  double condition = 1.0;  ///< estimated 1-norm condition number of the discrete system
  std::array<Matrix, 3> Z;   ///< m x N row blocks z(theta_j), kept on request
  std::array<Matrix, 3> Zs;  ///< N x m column blocks z*(theta_j), kept on request
  std::vector<EvalValues> eval;
};

/// Model-side data sampled on an x-grid: node fields and the Weyl solutions at
/// evaluation points off the contour.
class MainEquation {
 public:
  MainEquation(const PencilCoefficients& model, const Transport& model_tr, const Contour& ct,
               const std::vector<Matrix>& mhat, std::vector<double> xs, std::vector<cplx> eval_points,
               const OdeTolerances& tol = {})
      : model_(model), xs_(std::move(xs)), eval_rho_(std::move(eval_points)) {
    nodes_ = collapse_nodes(ct, mhat);
    const std::size_t n = nodes_.theta.size();
    fields_.resize(n);
    parallel_for(n, [&](std::size_t u) {
      fields_[u] = compute_pair_fields(model_, nodes_.theta[u], nodes_.theta[u], xs_, tol);
    });
    eval_fields_.resize(eval_rho_.size());
    eval_Phi_.resize(eval_rho_.size());
    eval_Phis_.resize(eval_rho_.size());
    parallel_for(eval_rho_.size(), [&](std::size_t k) {
      const cplx r = eval_rho_[k];
      eval_fields_[k] = compute_pair_fields(model_, r, r, xs_, tol);
      eval_Phi_[k] = weyl_solution(model_, model_tr, r, xs_, Side::Circle, tol);
      eval_Phis_[k] = star_weyl_solution(model_, model_tr, r, xs_, Side::Circle, tol);
    });
  }

  const std::vector<double>& xs() const { return xs_; }
  const NystromNodes& nodes() const { return nodes_; }
  const PairFields& node_field(std::size_t u) const { return fields_[u]; }
  const PairFields& eval_field(std::size_t k) const { return eval_fields_[k]; }
  const std::vector<cplx>& eval_points() const { return eval_rho_; }

  /// Solves both main equations at xs()[k].
  MainEqPoint solve(std::size_t k, const MainEqOptions& opt = {}) const {
    const std::size_t m = model_.m, n = nodes_.theta.size(), N = m * n;
    const auto mi = static_cast<Eigen::Index>(m), Ni = static_cast<Eigen::Index>(N);
    const double x = xs_[k];
    MainEqPoint out;
    out.x = x;

    Matrix Pc(mi, Ni), dPc(mi, Ni), Ps(Ni, mi), dPs(Ni, mi);
    for (std::size_t u = 0; u < n; ++u) {
      const auto o = static_cast<Eigen::Index>(u * m);
      Pc.middleCols(o, mi) = fields_[u].phi[k];
      dPc.middleCols(o, mi) = fields_[u].dphi[k];
      Ps.middleRows(o, mi) = fields_[u].phis[k];
      dPs.middleRows(o, mi) = fields_[u].dphis[k];
    }
    const Matrix q1 = model_.q1(x), q1d = model_.q1d(x), q0 = model_.q0(x);

    // Dm(a, b) = <phi*(theta_a), phi(theta_b)> / (theta_b - theta_a); diagonal from the integral form.
    Matrix Dm = dPs * Pc - Ps * dPc;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        auto blk = Dm.block(static_cast<Eigen::Index>(a * m), static_cast<Eigen::Index>(b * m), mi, mi);
        if (a == b) blk = kI * model_.h1 + fields_[a].integral[k];
        else blk /= (nodes_.theta[b] - nodes_.theta[a]);
      }
    }
    Matrix A = Dm;
    for (std::size_t j = 0; j < n; ++j) {
      const auto o = static_cast<Eigen::Index>(j * m);
      A.middleRows(o, mi) = nodes_.G[j] * Dm.middleRows(o, mi);
    }
    A.diagonal().array() += 1.0;
    // Unknowns z(theta_u) scale like |phi~(x, theta_u)|, which spreads exponentially in x over the
    // circle. Solve and measure conditioning on the similar matrix S A S^-1 with that scale.
    Vector sc(Ni);
    for (std::size_t u = 0; u < n; ++u) {
      const auto o = static_cast<Eigen::Index>(u * m);
      sc.segment(o, mi).setConstant(std::max(Pc.middleCols(o, mi).norm(), 1e-300));
    }
    const Vector isc = sc.cwiseInverse();
    const Eigen::PartialPivLU<Matrix> lu(sc.asDiagonal() * A * isc.asDiagonal());
    const double rc = lu.rcond();
    out.condition = rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    out.solvable = std::isfinite(out.condition) && out.condition <= opt.cond_limit && rc >= opt.sv_ratio;

    auto Gleft = [&](const Matrix& Zrow) {  // Zrow G (row blocks times G_j)
      Matrix Y(mi, Ni);
      for (std::size_t j = 0; j < n; ++j) {
        const auto o = static_cast<Eigen::Index>(j * m);
        Y.middleCols(o, mi) = Zrow.middleCols(o, mi) * nodes_.G[j];
      }
      return Y;
    };
    auto Gright = [&](const Matrix& Zcol) {  // G Zcol
      Matrix Y(Ni, mi);
      for (std::size_t j = 0; j < n; ++j) {
        const auto o = static_cast<Eigen::Index>(j * m);
        Y.middleRows(o, mi) = nodes_.G[j] * Zcol.middleRows(o, mi);
      }
      return Y;
    };
    auto row_solve = [&](const Matrix& rhs) -> Matrix {  // Z A = rhs
      const Matrix bt = (rhs * isc.asDiagonal()).transpose();
      Matrix xt(Ni, mi);
      lu.template _solve_impl_transposed<false>(bt, xt);
      return xt.transpose() * sc.asDiagonal();
    };
    auto col_solve = [&](const Matrix& rhs) -> Matrix {
      return rhs - Dm * (isc.asDiagonal() * lu.solve(sc.asDiagonal() * Gright(rhs)));
    };

    // theta-weighted copies
    Matrix ThPs = Ps, ThdPs = dPs, PcTh = Pc, dPcTh = dPc;
    for (std::size_t j = 0; j < n; ++j) {
      const auto o = static_cast<Eigen::Index>(j * m);
      ThPs.middleRows(o, mi) *= nodes_.theta[j];
      ThdPs.middleRows(o, mi) *= nodes_.theta[j];
      PcTh.middleCols(o, mi) *= nodes_.theta[j];
      dPcTh.middleCols(o, mi) *= nodes_.theta[j];
    }
    const Matrix eye = identity(mi);
    auto Wm = [&](cplx t) -> Matrix { return t * eye + 2.0 * kI * q1; };

    // Y Dm' and Y Dm'' for row blocks Y (m x N).
    auto row_dD = [&](const Matrix& Y, int order) {
      const Matrix S0 = Y * Ps, S1 = Y * ThPs;
      Matrix out_(mi, Ni);
      if (order == 1) {
        for (std::size_t i = 0; i < n; ++i) {
          const auto o = static_cast<Eigen::Index>(i * m);
          out_.middleCols(o, mi) = (S1 + S0 * Wm(nodes_.theta[i])) * Pc.middleCols(o, mi);
        }
        return out_;
      }
      const Matrix T0 = Y * dPs, T1 = Y * ThdPs;
      for (std::size_t i = 0; i < n; ++i) {
        const auto o = static_cast<Eigen::Index>(i * m);
        const Matrix w = Wm(nodes_.theta[i]);
        out_.middleCols(o, mi) = (T1 + T0 * w + 2.0 * kI * S0 * q1d) * Pc.middleCols(o, mi) +
                                 (S1 + S0 * w) * dPc.middleCols(o, mi);
      }
      return out_;
    };
    // Dm' Y and Dm'' Y for column blocks Y (N x m).
    auto col_dD = [&](const Matrix& Y, int order) {
      const Matrix U0 = Pc * Y, U1 = PcTh * Y;
      Matrix out_(Ni, mi);
      if (order == 1) {
        for (std::size_t i = 0; i < n; ++i) {
          const auto o = static_cast<Eigen::Index>(i * m);
          out_.middleRows(o, mi) = Ps.middleRows(o, mi) * (Wm(nodes_.theta[i]) * U0 + U1);
        }
        return out_;
      }
      const Matrix V0 = dPc * Y, V1 = dPcTh * Y;
      for (std::size_t i = 0; i < n; ++i) {
        const auto o = static_cast<Eigen::Index>(i * m);
        const Matrix w = Wm(nodes_.theta[i]);
        out_.middleRows(o, mi) = dPs.middleRows(o, mi) * (w * U0 + U1) +
                                 Ps.middleRows(o, mi) * (2.0 * kI * q1d * U0 + w * V0 + V1);
      }
      return out_;
    };

    // Second derivatives of the free terms: phi'' = -V phi, phi*'' = -phi* V.
    Matrix ddPc(mi, Ni), ddPs(Ni, mi);
    for (std::size_t u = 0; u < n; ++u) {
      const auto o = static_cast<Eigen::Index>(u * m);
      const cplx t = nodes_.theta[u];
      const Matrix V = t * t * eye + 2.0 * kI * t * q1 + q0;
      ddPc.middleCols(o, mi) = -V * Pc.middleCols(o, mi);
      ddPs.middleRows(o, mi) = -Ps.middleRows(o, mi) * V;
    }

    std::array<Matrix, 3> Z, Y, Zs, Ys;
    Z[0] = row_solve(Pc);
    Y[0] = Gleft(Z[0]);
    Z[1] = row_solve(dPc - row_dD(Y[0], 1));
    Y[1] = Gleft(Z[1]);
    Z[2] = row_solve(ddPc - 2.0 * row_dD(Y[1], 1) - row_dD(Y[0], 2));
    Y[2] = Gleft(Z[2]);
    Zs[0] = col_solve(Ps);
    Ys[0] = Gright(Zs[0]);
    Zs[1] = col_solve(dPs - col_dD(Ys[0], 1));
    Ys[1] = Gright(Zs[1]);
    Zs[2] = col_solve(ddPs - 2.0 * col_dD(Ys[1], 1) - col_dD(Ys[0], 2));
    Ys[2] = Gright(Zs[2]);

    // Evaluation off the nodes.
    out.eval.resize(eval_rho_.size());
    for (std::size_t e = 0; e < eval_rho_.size(); ++e) {
      const cplx r = eval_rho_[e];
      const Matrix V = r * r * eye + 2.0 * kI * r * q1 + q0;
      const Matrix w = Wm(r);
      // Row sums with 1/(r - theta_j) weights.
      Matrix PsR = Ps, dPsR = dPs, PcR = Pc, dPcR = dPc;
      for (std::size_t j = 0; j < n; ++j) {
        const auto o = static_cast<Eigen::Index>(j * m);
        const cplx f = 1.0 / (r - nodes_.theta[j]);
        PsR.middleRows(o, mi) *= f;
        dPsR.middleRows(o, mi) *= f;
        PcR.middleCols(o, mi) *= -f;  // 1/(theta_j - r)
        dPcR.middleCols(o, mi) *= -f;
      }
      // Row family (z, w): target f in {phi, Phi} at r.
      auto row_eval = [&](const Matrix& f0, const Matrix& f1) {
        std::array<Matrix, 3> res;
        const Matrix f2 = -V * f0;
        std::array<Matrix, 3> a0, a1, S0, S1, T0, T1;
        for (int d = 0; d < 3; ++d) {
          a0[d] = Y[d] * PsR;
          a1[d] = Y[d] * dPsR;
          S0[d] = Y[d] * Ps;
          S1[d] = Y[d] * ThPs;
          T0[d] = Y[d] * dPs;
          T1[d] = Y[d] * ThdPs;
        }
        auto sumD = [&](int d) -> Matrix { return a1[d] * f0 - a0[d] * f1; };
        auto sumdD = [&](int d) -> Matrix { return (S1[d] + S0[d] * w) * f0; };
        auto sumddD = [&](int d) -> Matrix {
          return (T1[d] + T0[d] * w + 2.0 * kI * S0[d] * q1d) * f0 + (S1[d] + S0[d] * w) * f1;
        };
        res[0] = f0 - sumD(0);
        res[1] = f1 - sumD(1) - sumdD(0);
        res[2] = f2 - sumD(2) - 2.0 * sumdD(1) - sumddD(0);
        return res;
      };
      // Column family (z*, w*): target g in {phi*, Phi*} at r.
      auto col_eval = [&](const Matrix& g0, const Matrix& g1) {
        std::array<Matrix, 3> res;
        const Matrix g2 = -g0 * V;
        std::array<Matrix, 3> b0, b1, U0, U1, V0, V1;
        for (int d = 0; d < 3; ++d) {
          b0[d] = PcR * Ys[d];
          b1[d] = dPcR * Ys[d];
          U0[d] = Pc * Ys[d];
          U1[d] = PcTh * Ys[d];
          V0[d] = dPc * Ys[d];
          V1[d] = dPcTh * Ys[d];
        }
        auto sumD = [&](int d) -> Matrix { return g1 * b0[d] - g0 * b1[d]; };
        auto sumdD = [&](int d) -> Matrix { return g0 * (w * U0[d] + U1[d]); };
        auto sumddD = [&](int d) -> Matrix {
          return g1 * (w * U0[d] + U1[d]) + g0 * (2.0 * kI * q1d * U0[d] + w * V0[d] + V1[d]);
        };
        res[0] = g0 - sumD(0);
        res[1] = g1 - sumD(1) - sumdD(0);
        res[2] = g2 - sumD(2) - 2.0 * sumdD(1) - sumddD(0);
        return res;
      };
      const auto& pf = eval_fields_[e];
      out.eval[e].z = row_eval(pf.phi[k], pf.dphi[k]);
      out.eval[e].w = row_eval(eval_Phi_[e].Y[k], eval_Phi_[e].Yprime[k]);
      out.eval[e].zs = col_eval(pf.phis[k], pf.dphis[k]);
      out.eval[e].ws = col_eval(eval_Phis_[e].Y[k], eval_Phis_[e].Yprime[k]);
    }
    if (opt.keep_node_solution) {
      out.Z = std::move(Z);
      out.Zs = std::move(Zs);
    }
    return out;
  }

 private:
  const PencilCoefficients& model_;
  std::vector<double> xs_;
  std::vector<cplx> eval_rho_;
  NystromNodes nodes_;
  std::vector<PairFields> fields_;
  std::vector<PairFields> eval_fields_;
  std::vector<SolutionField> eval_Phi_, eval_Phis_;
};

}  // namespace qpencil
