#include "support.hpp"

using namespace qtest;

namespace {

template <class F>
cplx contour_sum(const Contour& ct, F f, bool circle_only = false) {
  cplx s = 0.0;
  for (const auto& nd : ct.nodes)
    if (!circle_only || nd.side == Side::Circle) s += f(nd.rho) * nd.dtheta;
  return s;
}

}  // namespace

TEST(Contour, CircleOnlyWeightsSumToCircumference) {
  const auto ct = build_contour(1.0, 2.0, 2.0, 64, 0);
  double w = 0.0;
  for (const auto& nd : ct.nodes) w += nd.weight;
  EXPECT_NEAR(w, 4.0 * kPi, 1e-12);
  EXPECT_EQ(ct.size(), 64u);
}

TEST(Contour, RaysCoverBothBanks) {
  const auto ct = build_contour(1.0, 2.0, 50.0, 32, 64);
  double above = 0.0, below = 0.0, lo = 1e9, hi = 0.0;
  std::size_t na = 0, nb = 0;
  for (const auto& nd : ct.nodes) {
    if (nd.side == Side::Circle) continue;
    EXPECT_EQ(nd.rho.imag(), 0.0);
    lo = std::min(lo, std::abs(nd.rho.real()));
    hi = std::max(hi, std::abs(nd.rho.real()));
    (nd.side == Side::Above ? above : below) += nd.weight;
    (nd.side == Side::Above ? na : nb) += 1;
    ASSERT_GE(nd.pair, 0);
    const auto& mate = ct.nodes[static_cast<std::size_t>(nd.pair)];
    EXPECT_EQ(mate.rho, nd.rho);
    EXPECT_NE(mate.side, nd.side);
  }
  EXPECT_EQ(na, nb);
  EXPECT_NEAR(above, 96.0, 1e-10);
  EXPECT_NEAR(below, 96.0, 1e-10);
  EXPECT_GT(lo, 2.0);
  EXPECT_LT(hi, 50.0);
}

TEST(Contour, ResidueOfSimplePole) {
  const auto ct = build_contour(1.0, 2.0, 2.0, 64, 0);
  const cplx v = contour_sum(ct, [](cplx t) { return 1.0 / (t - 1.0); });
  EXPECT_LT(std::abs(v - 2.0 * kPi * kI), 1e-12);
}

TEST(Contour, ZeroAndAnalyticIntegrands) {
  const auto ct = build_contour(1.0, 2.0, 30.0, 64, 128);
  EXPECT_EQ(contour_sum(ct, [](cplx) { return cplx{}; }), cplx{});
  EXPECT_LT(std::abs(contour_sum(ct, [](cplx t) { return std::exp(t); }, true)), 1e-12);
  // A function without a jump contributes nothing on the rays.
  const cplx rays = contour_sum(ct, [](cplx t) { return 1.0 / (t * t); }) -
                    contour_sum(ct, [](cplx t) { return 1.0 / (t * t); }, true);
  EXPECT_LT(std::abs(rays), 1e-14);
}

TEST(Contour, RejectsBadGeometry) {
  EXPECT_THROW(build_contour(2.0, 1.5, 20.0, 64, 64), InputError);
  EXPECT_THROW(build_contour(1.0, 2.0, 20.0, 63, 64), InputError);
  EXPECT_THROW(build_contour(1.0, 2.0, 20.0, 64, 0), InputError);
}

TEST(PoleBound, ExactPoleAtI) {
  const auto c = zero_pencil(identity(2), Matrix::Zero(2, 2));
  const auto tr = make_transport(c);
  EXPECT_GE(estimate_pole_bound(c, tr), 1.0);
}

TEST(PoleBound, NoFinitePolesGivesStartRadius) {
  const auto c = zero_pencil(Matrix::Zero(2, 2), diag2(0.5, -0.5));
  const auto tr = make_transport(c);
  EXPECT_DOUBLE_EQ(estimate_pole_bound(c, tr), PoleBoundOptions{}.r_start);
}

TEST(PoleBound, RatioTestHoldsOnReturnedCircle) {
  for (const auto* name : {"scalar", "skew-gaussian", "non-normal"}) {
    const auto c = preset(name);
    const auto tr = make_transport(c);
    const double b = estimate_pole_bound(c, tr);
    const double lead = 0.5 * std::abs((identity(static_cast<Eigen::Index>(c.m)) + c.h1).determinant());
    for (int k = 1; k < 24; ++k) {
      const cplx rho = std::polar(b, kPi * k / 24.0);
      const double r = std::abs(jost_boundary_form(c, tr, rho, +1).determinant()) / std::pow(b, c.m);
      EXPECT_GE(r, lead) << name << " angle " << k;
    }
  }
}

TEST(BoundarySamples, ZeroPencilMatchesClosedForm) {
  const auto c = zero_pencil_reference();
  const auto tr = make_transport(c);
  const double pb = estimate_pole_bound(c, tr);
  EXPECT_GE(pb, 4.0);  // det vanishes at rho = 4i
  const auto ct = build_contour(pb, 1.5 * pb, 20.0, 32, 64);
  const auto ws = boundary_samples(c, tr, ct);
  ASSERT_EQ(ws.samples.size(), ct.size());
  for (const auto& s : ws.samples) EXPECT_LT(rel(s.M, zero_pencil_weyl(c, s.rho, s.side)), 1e-9);
}
