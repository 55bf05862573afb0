#pragma once

// Command layer shared by the CLI and the acceptance harness: run configuration,
// forward sampling, inversion, comparison against a known pencil, shipped presets.

#include "qpencil/io.hpp"

#include <chrono>
#include <map>

namespace qpencil {

struct ContourSettings {
  std::optional<double> r0;  ///< explicit circle radius; otherwise r0_factor * pole bound
  double r0_factor = 1.5;
  double R = 20.0;
  std::size_t n_circle = 128;
  std::size_t n_ray = 368;
  std::vector<double> ladder = default_ladder();
};

struct RunConfig {
  PencilConfig pencil;
  bool has_pencil_coefficients = false;  ///< Q1/Q0 given, so errors against them can be reported
  ContourSettings contour;
  StepperConfig stepper;
};

namespace detail {

template <class T>
void read_if(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j[key].get<T>();
  } catch (const json::exception&) {
    throw InputError(where + "." + key + ": wrong type");
  }
}

}  // namespace detail

/// Top-level pencil fields plus optional "contour" and "invert" sections.
inline RunConfig run_config_from_json(const json& j) {
  RunConfig rc;
  rc.pencil = pencil_config_from_json(j);
  rc.has_pencil_coefficients = j.contains("Q1") || j.contains("Q0");
  if (j.contains("contour")) {
    const auto& c = j["contour"];
    if (!c.is_object()) throw InputError("config.contour: expected an object");
    if (c.contains("r0")) {
      if (!c["r0"].is_number()) throw InputError("config.contour.r0: expected a number");
      rc.contour.r0 = c["r0"].get<double>();
    }
    detail::read_if(c, "r0_factor", rc.contour.r0_factor, "config.contour");
    detail::read_if(c, "R", rc.contour.R, "config.contour");
    detail::read_if(c, "n_circle", rc.contour.n_circle, "config.contour");
    detail::read_if(c, "n_ray", rc.contour.n_ray, "config.contour");
    detail::read_if(c, "ladder", rc.contour.ladder, "config.contour");
    if (!(rc.contour.r0_factor > 1.0)) throw InputError("config.contour.r0_factor must exceed 1");
    if (rc.contour.ladder.size() < 4) throw InputError("config.contour.ladder: need at least 4 values");
  }
  auto& s = rc.stepper;
  s.model_xmax = rc.pencil.xmax;
  s.model_grid_n = rc.pencil.grid_n;
  s.x_end = std::min(s.x_end, 0.8 * rc.pencil.xmax);
  if (j.contains("invert")) {
    const auto& v = j["invert"];
    if (!v.is_object()) throw InputError("config.invert: expected an object");
    const std::string w = "config.invert";
    detail::read_if(v, "x_end", s.x_end, w);
    detail::read_if(v, "dx", s.dx, w);
    detail::read_if(v, "lambda", s.lambda, w);
    detail::read_if(v, "max_steps", s.max_steps, w);
    detail::read_if(v, "model_grid_n", s.model_grid_n, w);
    detail::read_if(v, "hermitian_sqrt", s.hermitian_sqrt, w);
    detail::read_if(v, "single_model", s.single_model, w);
    detail::read_if(v, "breakpoint_guard", s.breakpoint_guard, w);
    detail::read_if(v, "pole_margin", s.pole_margin, w);
    detail::read_if(v, "cond_limit", s.meq.cond_limit, w);
    detail::read_if(v, "sv_ratio", s.meq.sv_ratio, w);
    if (!(s.dx > 0) || !(s.x_end > 0) || s.x_end > s.model_xmax)
      throw InputError("config.invert: need dx > 0 and 0 < x_end <= xmax");
    if (!(s.lambda > 1.0)) throw InputError("config.invert.lambda must exceed 1");
    if (!(s.pole_margin >= 1.0)) throw InputError("config.invert.pole_margin must be at least 1");
  }
  return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) { return run_config_from_json(parse_json_file(path)); }

struct ForwardResult {
  WeylSamples samples;
  double pole_bound = 0.0;
  double seconds = 0.0;
  json diagnostics;
};

/// Weyl samples on the contour plus the imaginary-axis ladder. Rejects inadmissible pencils and
/// circles that do not clear the pole bound.
inline ForwardResult run_forward(const PencilCoefficients& c, const ContourSettings& cs, const OdeTolerances& tol = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto val = validate_pencil(c);
  json checks = json::array();
  std::string failed;
  for (const auto& chk : val.checks) {
    checks.push_back({{"name", chk.name}, {"passed", chk.passed}, {"detail", chk.detail}});
    if (!chk.passed) failed += (failed.empty() ? "" : ", ") + chk.name;
  }
  if (!failed.empty()) throw InputError("pencil failed validation: " + failed);
  const Transport tr = make_transport(c);
  ForwardResult fr;
  fr.pole_bound = estimate_pole_bound(c, tr);
  const double r0 = cs.r0 ? *cs.r0 : cs.r0_factor * fr.pole_bound;
  const Contour ct = build_contour(fr.pole_bound, r0, cs.R, cs.n_circle, cs.n_ray);
  fr.samples = boundary_samples(c, tr, ct, tol);
  for (auto& s : ladder_samples(c, tr, cs.ladder, tol)) fr.samples.samples.push_back(std::move(s));
  fr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fr.diagnostics = {{"pole_bound", fr.pole_bound}, {"r0", r0},         {"R", cs.R},
                    {"nodes", ct.size()},          {"validation", checks}};
  return fr;
}

/// Relative L2 errors of the recovered Q1, Q0 against c on the committed grid (trapezoid rule).
struct ComparisonResult {
  double q1 = 0.0, q0 = 0.0;
  double x_end = 0.0;
};

inline ComparisonResult compare_reconstruction(const PencilCoefficients& c, const Reconstruction& rec) {
  if (rec.grid.size() < 2) throw InputError("compare_reconstruction: empty reconstruction");
  double n1 = 0, d1 = 0, n0 = 0, d0 = 0;
  for (std::size_t k = 0; k < rec.grid.size(); ++k) {
    const double left = k > 0 ? rec.grid[k] - rec.grid[k - 1] : 0.0;
    const double right = k + 1 < rec.grid.size() ? rec.grid[k + 1] - rec.grid[k] : 0.0;
    const double w = 0.5 * (left + right);
    const Matrix a = c.q1(rec.grid[k]), b = c.q0(rec.grid[k]);
    n1 += w * (rec.q1[k] - a).squaredNorm();
    d1 += w * a.squaredNorm();
    n0 += w * (rec.q0[k] - b).squaredNorm();
    d0 += w * b.squaredNorm();
  }
  ComparisonResult out;
  out.q1 = d1 > 0 ? std::sqrt(n1 / d1) : std::sqrt(n1);
  out.q0 = d0 > 0 ? std::sqrt(n0 / d0) : std::sqrt(n0);
  out.x_end = rec.grid.back();
  return out;
}

inline json comparison_to_json(const ComparisonResult& c) {
  return {{"relative_l2_Q1", c.q1}, {"relative_l2_Q0", c.q0}, {"x_end", c.x_end}};
}

/// Writes reconstruction.json, profile.csv and steps.jsonl into dir.
inline void write_reconstruction(const std::filesystem::path& dir, const Reconstruction& rec,
                                 const std::optional<ComparisonResult>& cmp = std::nullopt) {
  json j = reconstruction_to_json(rec);
  if (cmp) j["comparison"] = comparison_to_json(*cmp);
  write_atomic(dir / "reconstruction.json", j.dump(1) + "\n");
  write_atomic(dir / "profile.csv", reconstruction_csv(rec));
  write_atomic(dir / "steps.jsonl", step_log_jsonl(rec));
}

inline void write_forward(const std::filesystem::path& dir, const ForwardResult& fr) {
  write_atomic(dir / "weyl.json", weyl_samples_to_json(fr.samples).dump(1) + "\n");
  write_atomic(dir / "forward_diagnostics.json", fr.diagnostics.dump(1) + "\n");
}

// ---------------------------------------------------------------------------
// Shipped pencils.

struct NamedPencil {
  PencilConfig pencil;
  std::optional<PencilConfig> partner;  ///< second pencil with matched boundary data, for pair checks
  std::string note;
};

namespace detail {

inline Matrix real_matrix(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) a(r, c++) = v;
    ++r;
  }
  return a;
}

inline PencilConfig two_by_two(std::vector<Preset> q1, std::vector<Preset> q0) {
  PencilConfig pc;
  pc.m = 2;
  pc.xmax = 10.0;
  pc.grid_n = 2000;
  pc.h0 = real_matrix({{0.05, 0.0125}, {0.0, 0.025}});
  pc.h1 = real_matrix({{0.5, 0.0}, {0.0, -0.5}});
  pc.q1.presets = std::move(q1);
  pc.q0.presets = std::move(q0);
  return pc;
}

}  // namespace detail

/// zero, scalar, skew-gaussian (the round-trip pencil), non-normal, breakpoint (the skew profile
/// is shifted so the first model's connection matrix turns singular near x = 5.6).
inline const std::map<std::string, NamedPencil>& shipped_pencils() {
  static const std::map<std::string, NamedPencil> table = [] {
    std::map<std::string, NamedPencil> t;
    {
      PencilConfig pc;
      pc.m = 2;
      pc.h0 = detail::real_matrix({{1.0, 0.0}, {0.0, 2.0}});
      pc.h1 = detail::real_matrix({{0.5, 0.0}, {0.0, -0.5}});
      t["zero"] = {pc, std::nullopt, "Q1 = Q0 = 0; closed-form Weyl matrix"};
    }
    {
      PencilConfig pc;
      pc.m = 1;
      pc.h0 = detail::real_matrix({{0.3}});
      pc.h1 = detail::real_matrix({{0.4}});
      pc.q1.presets = {{"exponential-decay", 0.2, 1.0, 0.0, 1.0, Matrix()}};
      pc.q0.presets = {{"exponential-decay", 0.5, 1.0, 0.0, 2.0, Matrix()}};
      t["scalar"] = {pc, std::nullopt, "m = 1, exponential profiles"};
    }
    {
      auto pc = detail::two_by_two({{"skew-hermitian-gaussian", 0.3, 2.0, 0.0, 1.0, Matrix()}},
                                   {{"exponential-decay", 0.5, 1.0, 0.0, 1.5, Matrix()}});
      auto partner = detail::two_by_two({{"skew-hermitian-gaussian", 0.3, 1.5, 0.0, 1.0, Matrix()}},
                                        {{"exponential-decay", 0.4, 1.0, 0.0, 2.0, Matrix()}});
      t["skew-gaussian"] = {pc, partner, "skew-Hermitian Gaussian Q1 (amplitude 0.3), decaying Q0 (amplitude 0.5)"};
    }
    {
      Preset nn{"gaussian-decay", 0.25, 1.5, 0.0, 1.0, detail::real_matrix({{1.0, 2.0}, {0.0, 1.0}})};
      auto pc = detail::two_by_two({nn}, {{"exponential-decay", 0.3, 1.0, 0.0, 2.0,
                                           detail::real_matrix({{1.0, 0.5}, {0.0, 0.5}})}});
      t["non-normal"] = {pc, std::nullopt, "non-normal Q1 and Q0 shapes"};
    }
    {
      auto pc = detail::two_by_two({{"skew-hermitian-gaussian", 0.45, 2.0, 3.0, 1.0, Matrix()}},
                                   {{"exponential-decay", 0.5, 1.0, 0.0, 1.5, Matrix()}});
      t["breakpoint"] = {pc, std::nullopt, "skew Gaussian bump centred at 3; step-1 model flags near x = 5.6"};
    }
    return t;
  }();
  return table;
}

inline const NamedPencil& shipped_pencil(const std::string& name) {
  const auto& t = shipped_pencils();
  const auto it = t.find(name);
  if (it == t.end()) throw InputError("unknown preset '" + name + "'");
  return it->second;
}

}  // namespace qpencil
