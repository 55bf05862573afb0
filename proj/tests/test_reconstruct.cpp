#include "support.hpp"

#include <random>

using namespace qtest;

TEST(HermitianSqrt, Examples) {
  EXPECT_LT((omega_sqrt_hermitian(identity(2)) - identity(2)).norm(), 1e-15);
  EXPECT_LT((omega_sqrt_hermitian(diag2(4, 9)) - diag2(2, 3)).norm(), 1e-14);
}

TEST(HermitianSqrt, RandomGramMatrixAgainstEigendecomposition) {
  std::srand(3);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = Matrix::Random(3, 3) + 2.0 * identity(3);
    const Matrix s = a.adjoint() * a;
    const Matrix r = omega_sqrt_hermitian(s);
    EXPECT_LT((r * r - s).norm() / s.norm(), 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    const Matrix oracle = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
    EXPECT_LT((r - oracle).norm(), 1e-10);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (r + r.adjoint())).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(HermitianSqrt, RejectsNonHermitian) { EXPECT_THROW(omega_sqrt_hermitian(mat2(1, 1, 0, 1)), InputError); }

TEST(RecoverOmega, ZeroAndConstantRate) {
  const auto g = uniform_grid(2.0, 100);
  std::vector<Matrix> z(g.size(), scalar1(0.0)), c(g.size(), scalar1(0.7));
  const auto om0 = recover_omega(MatrixFunction::from_samples(1, g, z));
  const auto om1 = recover_omega(MatrixFunction::from_samples(1, g, c));
  for (double x : {0.0, 1.0, 2.0}) {
    EXPECT_LT(std::abs(om0(x)(0, 0) - 1.0), 1e-14);
    EXPECT_LT(std::abs(om1(x)(0, 0) - std::exp(0.7 * x)), 1e-10);
  }
}

TEST(LogDerivative, ScalarIdentity) {
  // With Omega* = Omega and X = 0 the log-derivative reduces to S' / (2 S).
  const Matrix S = scalar1(2.5), dS = scalar1(-0.4), X = scalar1(0.0);
  EXPECT_NEAR(std::abs(omega_log_derivative(S, dS, X)(0, 0) - (-0.4 / 5.0)), 0.0, 1e-15);
}

TEST(ExtractPotentials, RecoversKnownCoefficientsFromSyntheticFields) {
  std::mt19937 gen(11);
  std::normal_distribution<double> nd;
  const Matrix q1 = mat2(0, 0.3, -0.3, 0), q0 = mat2(0.2, 0.1, 0.0, 0.4);
  std::vector<cplx> rhos{kI * 1.0, kI * 2.0, kI * 3.0};
  std::vector<Matrix> phi, phi2;
  for (cplx r : rhos) {
    Matrix f(2, 2);
    for (Eigen::Index k = 0; k < 4; ++k) f.data()[k] = cplx{nd(gen), nd(gen)};
    phi.push_back(f);
    phi2.push_back(-(r * r * identity(2) + 2.0 * kI * r * q1 + q0) * f);
  }
  const auto all = extract_potentials(rhos, phi, phi2);
  EXPECT_LT((all.q1 - q1).norm(), 1e-12);
  EXPECT_LT((all.q0 - q0).norm(), 1e-12);
  EXPECT_LT(all.residual, 1e-12);
  const auto two = extract_potentials({rhos[0], rhos[1]}, {phi[0], phi[1]}, {phi2[0], phi2[1]});
  EXPECT_LT((two.q1 - all.q1).norm(), 1e-4);
  EXPECT_LT((two.q0 - all.q0).norm(), 1e-4);
}

TEST(ExtractPotentials, FreeFieldsGiveZero) {
  const std::vector<cplx> rhos{kI * 1.0, kI * 2.5};
  std::vector<Matrix> phi, phi2;
  for (cplx r : rhos) {
    phi.push_back(std::cos(r * 0.8) * identity(2));
    phi2.push_back(-r * r * std::cos(r * 0.8) * identity(2));
  }
  const auto q = extract_potentials(rhos, phi, phi2);
  EXPECT_LT(q.q1.norm(), 1e-6);
  EXPECT_LT(q.q0.norm(), 1e-6);
}

TEST(ExtractPotentials, NeedsTwoPoints) {
  EXPECT_THROW(extract_potentials({kI}, {identity(1)}, {identity(1)}), InputError);
}

TEST(Segment, SelfModelGivesIdentityAndZeroCorrection) {
  const auto c = preset("non-normal");
  const auto tr = make_transport(c);
  const double pb = estimate_pole_bound(c, tr);
  const auto ct = build_contour(pb, 1.5 * pb, 10.0, 16, 16);
  const std::vector<Matrix> mhat(ct.size(), Matrix::Zero(2, 2));
  const auto pts = default_recovery_points(ct.r0);
  std::vector<double> xs;
  for (int k = 0; k <= 20; ++k) xs.push_back(0.1 * k);
  const MainEquation me(c, tr, ct, mhat, xs, pts.all());
  std::vector<MainEqPoint> sol;
  for (std::size_t k = 0; k < xs.size(); ++k) sol.push_back(me.solve(k));
  const auto seg = reconstruct_segment(sol, pts);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    EXPECT_LT((seg.omega_product[k] - identity(2)).norm(), 1e-8);
    EXPECT_LT(seg.a[k].norm(), 1e-6);
    EXPECT_LT((seg.omega[k] - identity(2)).norm(), 1e-6);
    EXPECT_LT((seg.q1[k] - c.q1(xs[k])).norm(), 1e-5);
    EXPECT_LT((seg.q0[k] - c.q0(xs[k])).norm(), 1e-4);
  }
  // Two different reference subsets agree.
  const auto& e = sol[10].eval;
  const auto s1 = omega_product({&e[0]}).S, s2 = omega_product({&e[2]}).S;
  EXPECT_LT((s1 - s2).norm(), 1e-4);
}
