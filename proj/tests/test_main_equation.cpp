#include "support.hpp"

using namespace qtest;

namespace {

struct Pair {
  PencilCoefficients c, model;
  Transport tr, mtr;
  Contour ct;
  std::vector<Matrix> mhat;
};

// Shipped skew-Gaussian pencil against its partner on a modest contour.
Pair make_pair(std::size_t n_circle, std::size_t n_ray, double R = 20.0) {
  Pair p;
  const auto& np = shipped_pencil("skew-gaussian");
  p.c = build_pencil(np.pencil);
  p.model = build_pencil(*np.partner);
  p.tr = make_transport(p.c);
  p.mtr = make_transport(p.model);
  const double pb = std::max(estimate_pole_bound(p.c, p.tr), estimate_pole_bound(p.model, p.mtr));
  p.ct = build_contour(pb, 1.5 * pb, R, n_circle, n_ray);
  p.mhat.resize(p.ct.size());
  parallel_for(p.ct.size(), [&](std::size_t j) {
    const auto& nd = p.ct.nodes[j];
    p.mhat[j] = weyl_matrix(p.c, p.tr, nd.rho, nd.side) - weyl_matrix(p.model, p.mtr, nd.rho, nd.side);
  });
  return p;
}

}  // namespace

TEST(KernelD, FreeScalarClosedForm) {
  const auto c = zero_pencil(scalar1(0.0), scalar1(0.0));
  const double rho = 2.0, theta = 1.0;
  const auto d = kernel_D(c, 1.0, rho, theta);
  const double want = (rho * std::sin(rho) * std::cos(theta) - theta * std::cos(rho) * std::sin(theta)) / (rho - theta);
  EXPECT_NEAR(std::abs(d.value(0, 0) - want), 0.0, 1e-9);
  EXPECT_NEAR(want, 1.3328, 1e-4);
  EXPECT_FALSE(d.used_integral);
}

TEST(KernelD, DiagonalIntegralFormIsTheLimit) {
  const auto c = preset("non-normal");
  const cplx rho{1.2, 0.7};
  const auto on = kernel_D(c, 1.5, rho, rho);
  EXPECT_TRUE(on.used_integral);
  EXPECT_TRUE(all_finite(on.value));
  const auto near = kernel_D(c, 1.5, rho, rho + 1e-4, 0.0);
  EXPECT_LT(rel(near.value, on.value), 1e-3);
}

TEST(KernelD, GrowthBoundHoldsWithFittedConstant) {
  const auto c = preset("skew-gaussian");
  const double x = 1.0;
  std::vector<std::pair<cplx, cplx>> pairs;
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      if (a != b) pairs.push_back({std::polar(1.0 + a, 0.4 * a), std::polar(1.0 + 0.7 * b, -0.9 * b)});
  std::vector<double> ratio;
  for (const auto& [r, t] : pairs) {
    const double bound = (std::abs(r) + std::abs(t) + 1) / (std::abs(r - t) + 1) *
                         std::exp((std::abs(r.imag()) + std::abs(t.imag())) * x);
    ratio.push_back(kernel_D(c, x, r, t).value.norm() / bound);
  }
  const double cx = *std::max_element(ratio.begin(), ratio.end());
  EXPECT_TRUE(std::isfinite(cx));
  EXPECT_LT(cx, 20.0);
}

TEST(MainEquation, ZeroDifferenceGivesFreeTerms) {
  const auto c = preset("non-normal");
  const auto tr = make_transport(c);
  const double pb = estimate_pole_bound(c, tr);
  const auto ct = build_contour(pb, 1.5 * pb, 10.0, 16, 16);
  const std::vector<Matrix> mhat(ct.size(), Matrix::Zero(2, 2));
  const std::vector<double> xs{0.0, 0.8, 2.0};
  const std::vector<cplx> ev{kI * 2.0 * ct.r0, -kI * 1.5 * ct.r0};
  const MainEquation me(c, tr, ct, mhat, xs, ev);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto p = me.solve(k);
    EXPECT_TRUE(p.solvable);
    EXPECT_LT(p.condition, 1.0 + 1e-12);
    for (std::size_t e = 0; e < ev.size(); ++e) {
      const auto phi = solve_base(c, ev[e], BaseKind::Phi, {xs[k]});
      const auto phis = solve_base(c, ev[e], BaseKind::PhiStar, {xs[k]});
      const auto big = weyl_solution(c, tr, ev[e], {xs[k]});
      EXPECT_LT(rel(p.eval[e].z[0], phi.Y[0]), 1e-8);
      EXPECT_LT(rel(p.eval[e].z[1], phi.Yprime[0]), 1e-8);
      EXPECT_LT(rel(p.eval[e].zs[0], phis.Y[0]), 1e-8);
      EXPECT_LT(rel(p.eval[e].w[0], big.Y[0]), 1e-8);
    }
  }
}

TEST(MainEquation, OracleFactorizationOnSkewPair) {
  auto p = make_pair(64, 128);
  const std::vector<double> xs{0.5, 1.5, 3.0};
  const auto f = oracle_factorization(p.c, p.tr, p.model, p.mtr, p.ct, p.mhat, xs);
  EXPECT_TRUE(f.all_solvable);
  EXPECT_LT(f.max_phi_error, 1e-3);
  EXPECT_LT(f.max_product_error, 1e-3);
}

TEST(MainEquation, WeylTermDecaysAlongImaginaryAxis) {
  auto p = make_pair(32, 64);
  const std::vector<double> xs{1.0};
  const std::vector<cplx> ev{kI * 2.0 * p.ct.r0, kI * 4.0 * p.ct.r0, kI * 8.0 * p.ct.r0};
  const MainEquation me(p.model, p.mtr, p.ct, p.mhat, xs, ev);
  const auto s = me.solve(0);
  EXPECT_GT(s.eval[0].w[0].norm(), s.eval[1].w[0].norm());
  EXPECT_GT(s.eval[1].w[0].norm(), s.eval[2].w[0].norm());
}

TEST(MainEquation, CollapseRequiresOneSamplePerNode) {
  const auto ct = build_contour(0.5, 1.0, 5.0, 8, 8);
  EXPECT_THROW(collapse_nodes(ct, std::vector<Matrix>(3, Matrix::Zero(1, 1))), InputError);
}
