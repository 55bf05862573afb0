#include "support.hpp"

using namespace qtest;

namespace {

VerifyConfig quick() {
  VerifyConfig vc;
  vc.n_circle = 32;
  vc.n_ray = 64;
  vc.x_samples = 4;
  return vc;
}

}  // namespace

TEST(Verify, ZeroPencilPassesWithoutModel) {
  const auto c = zero_pencil_reference();
  const auto rep = run_invariants(c, nullptr, quick());
  ASSERT_EQ(rep.checks.size(), invariant_names().size());
  for (const auto& ck : rep.checks) {
    if (ck.name == "contour-identity") {
      EXPECT_TRUE(ck.skipped);
      continue;
    }
    EXPECT_TRUE(ck.passed) << ck.name << ": " << ck.measured << " " << ck.detail;
  }
  EXPECT_TRUE(rep.ok());
  EXPECT_FALSE(format_report_table(rep).empty());
}

TEST(Verify, InvalidBoundaryDataSkipsTheRest) {
  const auto c = zero_pencil(diag2(0.1, 0.2), identity(2));
  const auto rep = run_invariants(c, nullptr, quick());
  const auto* v = rep.find("validation");
  ASSERT_NE(v, nullptr);
  EXPECT_FALSE(v->passed);
  EXPECT_GE(v->measured, 1.0);
  for (const auto& ck : rep.checks)
    if (ck.name != "validation") EXPECT_TRUE(ck.skipped) << ck.name;
  EXPECT_FALSE(rep.ok());
}

TEST(Verify, SkewPairContourIdentity) {
  const auto& np = shipped_pencil("skew-gaussian");
  const auto c = build_pencil(np.pencil), model = build_pencil(*np.partner);
  auto vc = quick();
  vc.n_circle = 64;
  vc.n_ray = 128;
  const auto rep = run_invariants(c, &model, vc);
  const auto* ck = rep.find("contour-identity");
  ASSERT_NE(ck, nullptr);
  EXPECT_FALSE(ck->skipped);
  EXPECT_LE(ck->measured, 1e-3) << ck->detail;
  EXPECT_TRUE(rep.ok()) << format_report_table(rep);
}

TEST(Verify, MissingToleranceIsASetupError) {
  auto vc = quick();
  vc.tolerances.erase("main-self");
  EXPECT_THROW(run_invariants(zero_pencil_reference(), nullptr, vc), InputError);
}

TEST(Verify, LogLogSlopeOfPowerLaw) {
  std::vector<double> x, y;
  for (double s : default_ladder(20.0, 200.0, 8)) {
    x.push_back(s);
    y.push_back(3.0 / (s * s));
  }
  EXPECT_NEAR(loglog_slope(x, y), -2.0, 1e-12);
}
