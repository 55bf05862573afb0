#include "support.hpp"

using namespace qtest;

namespace {

std::vector<double> grid_on(double a, double b, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return g;
}

}  // namespace

TEST(AuxBounds, ZeroPencil) {
  const auto b = compute_aux_bounds(zero_pencil_reference());
  for (std::size_t k = 0; k < b.grid.size(); k += 50) {
    EXPECT_EQ(b.F[k], 1.0);
    EXPECT_EQ(b.G[k], 0.0);
    EXPECT_EQ(b.H[k], 0.0);
  }
}

TEST(AuxBounds, StepQ0ByHand) {
  // Q0 = 1 on [0, 1], 0 beyond; sampled pointwise on a fine grid.
  const auto g = uniform_grid(3.0, 3000);
  std::vector<Matrix> q1(g.size(), scalar1(0.0)), q0;
  for (double x : g) q0.push_back(scalar1(x <= 1.0 ? 1.0 : 0.0));
  const auto c = make_pencil_from_samples(1, g, q1, q0, scalar1(0.0), scalar1(0.0));
  const auto b = compute_aux_bounds(c);
  EXPECT_EQ(b.F[500], 1.0);
  EXPECT_DOUBLE_EQ(b.G[500], 3.0);
  EXPECT_EQ(b.G[2000], 0.0);
  EXPECT_NEAR(b.H[0], 3.0, 2e-3);
}

TEST(AuxBounds, HIsNonincreasing) {
  const auto b = compute_aux_bounds(preset("non-normal"));
  for (std::size_t k = 1; k < b.H.size(); ++k) EXPECT_LE(b.H[k], b.H[k - 1]);
}

TEST(Jost, FreeExponentials) {
  const auto c = zero_pencil_reference();
  const auto tr = make_transport(c);
  const cplx rho{3.0, 1.0};
  const auto xs = grid_on(0.0, 5.0, 11);
  const auto cfg = admissible_config(c, compute_aux_bounds(c), std::abs(rho));
  const auto ep = build_E_plus(c, tr, rho, xs, cfg);
  const auto em = build_E_minus(c, tr, rho, xs, cfg);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    EXPECT_LT((ep.Y[k] - std::exp(kI * rho * xs[k]) * identity(2)).norm(), 1e-10);
    EXPECT_LT((em.Y[k] - std::exp(-kI * rho * xs[k]) * identity(2)).norm() / std::abs(std::exp(-kI * rho * xs[k])),
              1e-10);
  }
}

TEST(Jost, SeriesAgreesWithShooting) {
  const auto c = preset("skew-gaussian");
  const auto tr = make_transport(c);
  const cplx rho{30.0, 5.0};
  const auto xs = grid_on(0.0, 4.0, 9);
  const auto cfg = admissible_config(c, compute_aux_bounds(c), std::abs(rho));
  const auto series = build_E_plus(c, tr, rho, xs, cfg);
  const auto shot = jost_shoot(c, tr, rho, +1, false, xs);
  for (std::size_t k = 0; k < xs.size(); ++k)
    EXPECT_LT(rel(series.Y[k], shot.Y[k]), 1e-7) << "x = " << xs[k];
}

TEST(Jost, NormalisedSolutionTendsToTransport) {
  const auto c = preset("skew-gaussian");
  const auto tr = make_transport(c);
  const cplx rho{2.0, 1.0};
  const std::vector<double> xs{9.0, 9.5};
  const auto f = jost_shoot(c, tr, rho, +1, false, xs);
  for (std::size_t k = 0; k < xs.size(); ++k)
    EXPECT_LT((std::exp(-kI * rho * xs[k]) * f.Y[k] - tr.minus(xs[k])).norm(), 1e-4);
}

TEST(Jost, RemainderBeatsOneOverRho) {
  const auto c = preset("non-normal");
  const auto tr = make_transport(c);
  const auto tp = solve_T(c, +1, c.grid()), tm = solve_T(c, -1, c.grid());
  std::vector<double> r, e;
  for (double s : {20.0, 40.0, 80.0, 160.0}) {
    const cplx rho = s * cplx{6.0, 1.0} / std::abs(cplx{6.0, 1.0});
    r.push_back(s);
    e.push_back(jost_remainder(c, tr, tm, tp, rho, +1));
  }
  EXPECT_LT(loglog_slope(r, e), -0.7);
}

TEST(Jost, IndependenceOfFreePair) {
  const auto c = zero_pencil(scalar1(0.0), scalar1(0.0));
  const auto tr = make_transport(c);
  const cplx rho{1.0, 1.0};
  const std::vector<double> xs{0.0, 0.5};
  JostConfig cfg;
  const auto ep = build_E_plus(c, tr, rho, xs, cfg);
  const auto em = build_E_minus(c, tr, rho, xs, cfg);
  EXPECT_NEAR(check_independence(ep, em), 2.0 * std::abs(rho), 1e-10);
  auto ep2 = ep, em2 = em;
  const cplx k{0.5, 2.0};
  for (auto* f : {&ep2, &em2})
    for (std::size_t j = 0; j < xs.size(); ++j) {
      f->Y[j] *= k;
      f->Yprime[j] *= k;
    }
  EXPECT_NEAR(check_independence(ep2, em2), std::pow(std::abs(k), 2) * 2.0 * std::abs(rho), 1e-9);
}

TEST(Jost, IndependenceOnPresetAboveThreshold) {
  const auto c = preset("skew-gaussian");
  const auto tr = make_transport(c);
  const cplx rho{25.0, 3.0};
  const auto cfg = admissible_config(c, compute_aux_bounds(c), std::abs(rho));
  const std::vector<double> xs{cfg.alpha, cfg.alpha + 1.0};
  const auto ep = build_E_plus(c, tr, rho, xs, cfg);
  const auto em = build_E_minus(c, tr, rho, xs, cfg);
  EXPECT_GT(check_independence(ep, em), 1e-8);
}

TEST(Weyl, ClosedFormForZeroPotential) {
  const auto c = zero_pencil_reference();
  const auto tr = make_transport(c);
  for (cplx rho : {cplx{0.3, 2.0}, cplx{-4.0, 1.0}, cplx{1.0, -3.0}, cplx{7.0, -0.2}})
    EXPECT_LT(rel(weyl_matrix(c, tr, rho), zero_pencil_weyl(c, rho)), 1e-10);
}

TEST(Weyl, WeylSolutionFreeCase) {
  const auto c = zero_pencil(Matrix::Zero(2, 2), Matrix::Zero(2, 2));
  const auto tr = make_transport(c);
  const cplx rho{0.8, 1.1};
  const auto xs = grid_on(0.0, 3.0, 7);
  const auto f = weyl_solution(c, tr, rho, xs);
  for (std::size_t k = 0; k < xs.size(); ++k)
    EXPECT_LT((f.Y[k] - std::exp(kI * rho * xs[k]) / (kI * rho) * identity(2)).norm(), 1e-9);
}

TEST(Weyl, BoundaryFormOfWeylSolutionIsIdentity) {
  const auto c = preset("non-normal");
  const auto tr = make_transport(c);
  const cplx rho{1.5, 2.0};
  const auto f = weyl_solution(c, tr, rho, {0.0});
  const Matrix u = f.Yprime[0] + (kI * rho * c.h1 + c.h0) * f.Y[0];
  EXPECT_LT((u - identity(2)).norm(), 1e-8);
}

TEST(Weyl, SolutionDecaysOnImaginaryAxis) {
  const auto c = preset("skew-gaussian");
  const auto tr = make_transport(c);
  const double sigma = 12.0;
  const auto xs = grid_on(0.0, 3.0, 13);
  const auto f = weyl_solution(c, tr, kI * sigma, xs);
  const double c0 = f.Y[0].norm();
  for (std::size_t k = 0; k < xs.size(); ++k) EXPECT_LE(f.Y[k].norm(), 3.0 * c0 * std::exp(-sigma * xs[k]));
}

TEST(Weyl, LeadingAsymptotics) {
  const auto c = preset("skew-gaussian");
  const auto tr = make_transport(c);
  const Matrix lead = (identity(2) + c.h1).inverse();
  double prev = 1e300;
  for (double s : {20.0, 80.0, 320.0}) {
    const double e = (kI * (kI * s) * weyl_matrix(c, tr, kI * s, Side::Ladder) - lead).norm();
    EXPECT_LT(e, prev);
    prev = e;
  }
  EXPECT_LT(prev, 5e-3);
}

TEST(Weyl, StarMatrixAgrees) {
  for (const auto* name : {"scalar", "skew-gaussian", "non-normal"}) {
    const auto c = preset(name);
    const auto tr = make_transport(c);
    for (cplx rho : {cplx{1.5, 1.0}, cplx{-2.0, -0.7}, cplx{0.2, 3.0}})
      EXPECT_LT(rel(star_weyl_matrix(c, tr, rho), weyl_matrix(c, tr, rho)), 1e-6) << name;
  }
}

TEST(Weyl, StarMatrixClosedFormForZeroPotential) {
  const auto c = zero_pencil_reference();
  const auto tr = make_transport(c);
  const cplx rho{0.5, 2.5};
  EXPECT_LT(rel(star_weyl_matrix(c, tr, rho), zero_pencil_weyl(c, rho)), 1e-10);
}

TEST(Weyl, RealAxisNeedsSide) {
  const auto c = preset("scalar");
  const auto tr = make_transport(c);
  EXPECT_THROW(weyl_matrix(c, tr, cplx{3.0, 0.0}, Side::Circle), InputError);
  const Matrix up = weyl_matrix(c, tr, cplx{3.0, 0.0}, Side::Above);
  const Matrix dn = weyl_matrix(c, tr, cplx{3.0, 0.0}, Side::Below);
  EXPECT_GT((up - dn).norm(), 1e-6);
}

TEST(Weyl, JumpBeyondTwoTermExpansionIsSmall) {
  // Leading terms differ between the banks; what is left after the two-term expansion
  // on each bank shrinks faster than 1/rho^2.
  const auto c = preset("skew-gaussian");
  const auto tr = make_transport(c);
  const Matrix eye = identity(2);
  auto expansion = [&](double t, double s) {
    const Matrix a = (s * eye + c.h1).inverse();
    const cplx k = kI * t;
    return Matrix(a / k + a * (s * c.q1(0.0) - c.h0) * a / (k * k));
  };
  std::vector<double> e;
  for (double t : {10.0, 20.0, 40.0, 80.0}) {
    const Matrix up = weyl_matrix(c, tr, t, Side::Above) - expansion(t, +1);
    const Matrix dn = weyl_matrix(c, tr, t, Side::Below) - expansion(t, -1);
    e.push_back((up - dn).norm() * t * t);
  }
  for (std::size_t k = 1; k < e.size(); ++k) EXPECT_LT(e[k], e[k - 1]);
  EXPECT_LT(e.back(), 0.5 * e.front());
}

TEST(Asymptotics, ZeroPencilRecoversBoundaryData) {
  const auto c = zero_pencil_reference();
  const auto tr = make_transport(c);
  const auto ad = extract_asymptotic_data(ladder_samples(c, tr, default_ladder()));
  EXPECT_LT((ad.h1 - c.h1).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((ad.h0 - c.h0).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(ad.q1_at_0.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Asymptotics, SkewPresetRecoversQ1AtZero) {
  const auto c = preset("skew-gaussian");
  const auto tr = make_transport(c);
  const auto ad = extract_asymptotic_data(ladder_samples(c, tr, default_ladder()));
  EXPECT_LT((ad.q1_at_0 - mat2(0, 0.3, -0.3, 0)).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT((ad.h1_upper - ad.h1_lower).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT((ad.h0 - c.h0).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Asymptotics, TooFewSamplesIsAnError) {
  const auto c = preset("scalar");
  const auto tr = make_transport(c);
  EXPECT_THROW(extract_asymptotic_data(ladder_samples(c, tr, {20.0, 40.0})), InputError);
}
