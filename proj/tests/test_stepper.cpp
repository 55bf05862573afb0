#include "support.hpp"

using namespace qtest;

namespace {

ContourSettings small_contour() {
  ContourSettings cs;
  cs.R = 12.0;
  cs.n_circle = 32;
  cs.n_ray = 64;
  return cs;
}

}  // namespace

TEST(ModelExtension, GeometricTail) {
  const auto c = preset("skew-gaussian");
  const double delta = 1.0, lambda = 2.0;
  const auto g = uniform_grid(12.0, 4800);
  ModelCheck chk;
  const auto ext = extend_model_Q1(c.q1, delta, lambda, g, &chk);
  EXPECT_TRUE(chk.ok());
  const double nd = matrix_norm(c.q1(delta));
  std::vector<double> tx, tf;
  for (double x : g)
    if (x >= delta) {
      tx.push_back(x);
      tf.push_back(matrix_norm(ext(x)));
    }
  EXPECT_NEAR(trapezoid(tx, tf), nd / 2.0, 1e-5);
  for (std::size_t k = 1; k < tf.size(); ++k) EXPECT_LE(tf[k], tf[k - 1]);
  for (double x : {0.0, 0.4, 1.0}) EXPECT_LT((ext(x) - c.q1(x)).norm(), 1e-12);
}

TEST(ModelExtension, ZeroAtDeltaIsDegenerate) {
  const auto c = zero_pencil_reference();
  ModelCheck chk;
  const auto ext = extend_model_Q1(c.q1, 2.0, 3.0, c.grid(), &chk);
  EXPECT_TRUE(chk.ok());
  for (double x : {1.0, 2.5, 9.0}) EXPECT_EQ(ext(x).norm(), 0.0);
}

TEST(ModelExtension, DecayRateMustExceedOne) {
  const auto c = preset("scalar");
  EXPECT_THROW(extend_model_Q1(c.q1, 1.0, 1.0, c.grid()), InputError);
}

TEST(Breakpoint, ThresholdProfile) {
  std::vector<double> xs, cond;
  for (int k = 0; k <= 60; ++k) {
    xs.push_back(0.1 * k);
    cond.push_back(std::exp(6.0 * xs.back()));
  }
  EXPECT_TRUE(std::isinf(detect_breakpoint(xs, std::vector<double>(xs.size(), 1.0), 1e8, 0.0)));
  // exp(6 x) crosses 6.6e7 at x = 3.
  const double d = detect_breakpoint(xs, cond, std::exp(18.0) * 1.0001, 0.0);
  EXPECT_NEAR(d, 3.0, 1e-12);
  const double d2 = detect_breakpoint(xs, cond, std::exp(18.0) * 0.9999, 0.0);
  EXPECT_LT(d2, 3.0);
  EXPECT_GT(d2, 2.8);
  double prev = 1e300;
  for (double t = 1e9; t > 10; t /= 2) {
    const double dt = detect_breakpoint(xs, cond, t, 0.0);
    EXPECT_LE(dt, prev);
    prev = dt;
  }
  EXPECT_EQ(detect_breakpoint(xs, cond, 0.5, 1.0), 1.0);
}

TEST(Breakpoint, CommitIndexFromFlags) {
  const std::vector<double> cond{1, 10, 1e3, 1e5, 1e7, 1e9};
  const std::vector<char> none(6, 0);
  auto b = detect_breakpoint(cond, none, 1e8);
  EXPECT_TRUE(b.reached_end);
  EXPECT_EQ(b.index, 5u);
  std::vector<char> flag{0, 0, 0, 0, 0, 1};
  b = detect_breakpoint(cond, flag, 1e8);
  EXPECT_FALSE(b.reached_end);
  EXPECT_EQ(b.flagged, 5u);
  EXPECT_EQ(b.index, 4u);
  b = detect_breakpoint(cond, flag, 1e4);
  EXPECT_EQ(b.index, 2u);
  flag = {1, 0, 0, 0, 0, 0};
  EXPECT_EQ(detect_breakpoint(cond, flag, 1e8).index, 0u);
}

TEST(Stepper, ZeroPencilRecoversZero) {
  const auto c = zero_pencil(diag2(0.05, 0.1), diag2(0.5, -0.5));
  const auto fr = run_forward(c, small_contour());
  StepperConfig cfg;
  cfg.x_end = 2.0;
  cfg.dx = 0.1;
  const auto rec = reconstruct_piecewise(fr.samples, cfg);
  ASSERT_EQ(rec.steps.size(), 1u);
  EXPECT_TRUE(rec.steps[0].reached_end);
  EXPECT_LT((rec.h0 - c.h0).norm(), 1e-6);
  for (std::size_t k = 0; k < rec.grid.size(); ++k) {
    EXPECT_LT(rec.q1[k].norm(), 1e-6);
    EXPECT_LT(rec.q0[k].norm(), 1e-5);
  }
}

TEST(Stepper, SingleStepMatchesSingleModel) {
  const auto c = preset("skew-gaussian");
  const auto fr = run_forward(c, small_contour());
  StepperConfig cfg;
  cfg.x_end = 1.5;
  cfg.dx = 0.1;
  const auto piecewise = reconstruct_piecewise(fr.samples, cfg);
  cfg.single_model = true;
  const auto single = reconstruct_piecewise(fr.samples, cfg);
  ASSERT_EQ(piecewise.steps.size(), 1u);
  ASSERT_EQ(piecewise.grid.size(), single.grid.size());
  for (std::size_t k = 0; k < single.grid.size(); ++k) {
    EXPECT_LT((piecewise.q1[k] - single.q1[k]).norm(), 1e-6);
    EXPECT_LT((piecewise.q0[k] - single.q0[k]).norm(), 1e-6);
  }
  EXPECT_EQ(piecewise.steps[0].committed_hash, committed_hash(piecewise, piecewise.grid.size()));
  EXPECT_THROW(committed_hash(piecewise, piecewise.grid.size() + 1), InputError);
}

TEST(Stepper, RejectsRangeBeyondModel) {
  const auto c = preset("scalar");
  const auto fr = run_forward(c, small_contour());
  StepperConfig cfg;
  cfg.x_end = 20.0;
  EXPECT_THROW(reconstruct_piecewise(fr.samples, cfg), InputError);
}

TEST(Stepper, RejectsTruncatedSamples) {
  const auto c = preset("scalar");
  auto fr = run_forward(c, small_contour());
  fr.samples.samples.erase(fr.samples.samples.begin() + 40);
  EXPECT_THROW(reconstruct_piecewise(fr.samples, StepperConfig{}), InputError);
}
