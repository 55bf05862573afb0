#include "support.hpp"

#include <filesystem>

using namespace qtest;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("qpencil_test_io_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Json, MatrixRoundTripIsExact) {
  const Matrix a = mat2(cplx{0.1, -1e-300}, cplx{1.0 / 3.0, 2.0}, cplx{-7.25, 0.0}, cplx{3e17, 4.9e-324});
  const json j = json::parse(matrix_to_json(a).dump());
  EXPECT_EQ(matrix_from_json(j, 2, "m"), a);
  EXPECT_EQ(matrix_from_json(json(2.0), 2, "m"), 2.0 * identity(2));
  EXPECT_THROW(matrix_from_json(json::array({1, 2, 3}), 2, "m"), InputError);
}

TEST(Json, PencilConfigRoundTrip) {
  const auto& pc = shipped_pencil("non-normal").pencil;
  const json j = json::parse(pencil_config_to_json(pc).dump());
  const auto back = pencil_config_from_json(j);
  EXPECT_EQ(back.m, pc.m);
  EXPECT_EQ(back.h0, pc.h0);
  ASSERT_EQ(back.q1.presets.size(), 1u);
  EXPECT_EQ(back.q1.presets[0].shape, pc.q1.presets[0].shape);
  const auto a = build_pencil(pc), b = build_pencil(back);
  for (double x : {0.0, 1.3, 7.0}) {
    EXPECT_EQ(a.q1(x), b.q1(x));
    EXPECT_EQ(a.q0(x), b.q0(x));
  }
}

TEST(Json, MalformedConfigsAreRejected) {
  EXPECT_THROW(pencil_config_from_json(json::parse(R"({"h0": 0, "h1": 0})")), InputError);
  EXPECT_THROW(pencil_config_from_json(json::parse(R"({"m": 1, "h0": 0, "h1": 0, "Q1": {"preset": "spline"}})")),
               InputError);
  EXPECT_THROW(pencil_config_from_json(json::parse(R"({"m": 1, "h0": 0, "h1": 0, "Q1": {"preset": "gaussian-decay", "width": -1}})")),
               InputError);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"m": 1, "h0": 0, "h1": 0, "contour": {"n_ray": "many"}})")),
               InputError);
  EXPECT_THROW(run_config_from_json(json::parse(R"({"m": 1, "h0": 0, "h1": 0, "invert": {"lambda": 0.5}})")),
               InputError);
}

TEST(Json, SampledCoefficients) {
  const json j = json::parse(R"({"m": 1, "h0": 0.1, "h1": 0.2,
    "Q1": {"grid": [0, 1, 2, 3, 4, 5, 6], "samples": [0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0]},
    "Q0": {"grid": [0, 1, 2, 3, 4, 5, 6], "samples": [0, 0, 0, 0, 0, 0, 0]}})");
  const auto c = build_pencil(pencil_config_from_json(j));
  EXPECT_NEAR(std::abs(c.q1(2.0)(0, 0) - 0.4), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(c.q1d(2.5)(0, 0) + 0.1), 0.0, 1e-10);
}

TEST(WeylFile, ForwardSamplesSurviveSerialization) {
  const auto c = zero_pencil(diag2(0.05, 0.1), diag2(0.5, -0.5));
  ContourSettings cs;
  cs.R = 12.0;
  cs.n_circle = 16;
  cs.n_ray = 16;
  const auto fr = run_forward(c, cs);
  const auto dir = scratch("weyl");
  write_forward(dir, fr);
  const auto back = weyl_samples_from_json(parse_json_file(dir / "weyl.json"));
  ASSERT_EQ(back.samples.size(), fr.samples.samples.size());
  for (std::size_t k = 0; k < back.samples.size(); ++k) {
    EXPECT_EQ(back.samples[k].rho, fr.samples.samples[k].rho);
    EXPECT_EQ(back.samples[k].side, fr.samples.samples[k].side);
    EXPECT_LE(rel(back.samples[k].M, fr.samples.samples[k].M), 1e-8);
  }
  EXPECT_EQ(back.r0, fr.samples.r0);
  std::filesystem::remove_all(dir);
}

TEST(WeylFile, BrokenFilesAreInputErrors) {
  EXPECT_THROW(weyl_samples_from_json(json::parse(R"({"m": 1})")), InputError);
  EXPECT_THROW(weyl_samples_from_json(json::parse(R"({"m": 1, "r0": 1, "R": 5, "n_circle": 4, "n_ray": 4,
      "samples": [{"rho": [1, 0], "side": "sideways", "M": [[1, 0]]}]})")),
               InputError);
  EXPECT_THROW(parse_json_file("/nonexistent/qpencil.json"), InputError);
}

TEST(Files, AtomicWriteCreatesDirectories) {
  const auto dir = scratch("atomic");
  write_atomic(dir / "a" / "b.txt", "hello\n");
  EXPECT_EQ(read_text(dir / "a" / "b.txt"), "hello\n");
  write_atomic(dir / "a" / "b.txt", "again\n");
  EXPECT_EQ(read_text(dir / "a" / "b.txt"), "again\n");
  std::filesystem::remove_all(dir);
}

TEST(Forward, RejectsInadmissiblePencilAndSmallCircle) {
  ContourSettings cs;
  cs.n_circle = 16;
  cs.n_ray = 16;
  EXPECT_THROW(run_forward(zero_pencil(Matrix::Zero(2, 2), identity(2)), cs), InputError);
  cs.r0 = 0.1;
  EXPECT_THROW(run_forward(zero_pencil_reference(), cs), InputError);
}

TEST(Compare, ZeroTruthUsesAbsoluteError) {
  Reconstruction rec;
  rec.grid = {0.0, 1.0, 2.0};
  rec.q1.assign(3, Matrix::Zero(1, 1));
  rec.q0.assign(3, scalar1(1e-3));
  const auto cmp = compare_reconstruction(zero_pencil(scalar1(0.0), scalar1(0.0)), rec);
  EXPECT_EQ(cmp.q1, 0.0);
  EXPECT_NEAR(cmp.q0, 1e-3 * std::sqrt(2.0), 1e-15);
}
