#pragma once

// JSON/CSV persistence. Matrices are row-major lists of [re, im] pairs. Doubles are written in
// the shortest decimal form that parses back to the same bits (CSV uses %.17g).

#include "qpencil/stepper.hpp"
#include "qpencil/verify.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qpencil {

using json = nlohmann::json;

/// Writes to a sibling temporary file, then renames over path.
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline json parse_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw InputError(what + ": expected [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json matrix_to_json(const Matrix& a) {
  json out = json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) out.push_back(complex_to_json(a(r, c)));
  return out;
}

/// Accepts a flat row-major list of m*m pairs; a bare number is taken as a multiple of I.
inline Matrix matrix_from_json(const json& j, std::size_t m, const std::string& what) {
  const auto n = static_cast<Eigen::Index>(m);
  if (j.is_number()) return j.get<double>() * identity(n);
  if (!j.is_array() || j.size() != m * m) throw InputError(what + ": expected " + std::to_string(m * m) + " entries");
  Matrix a(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      a(r, c) = complex_from_json(j[static_cast<std::size_t>(r * n + c)], what);
  return a;
}

// ---------------------------------------------------------------------------
// Pencil configuration.

struct CoefficientSource {
  std::vector<Preset> presets;       ///< summed
  std::vector<double> grid;          ///< sampled alternative
  std::vector<Matrix> samples;
  bool sampled() const { return !grid.empty(); }
};

struct PencilConfig {
  std::size_t m = 1;
  double xmax = 10.0;
  std::size_t grid_n = 2000;
  Matrix h0, h1;
  CoefficientSource q1, q0;
};

namespace detail {

inline double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw InputError(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

inline Preset preset_from_json(const json& j, std::size_t m, const std::string& where) {
  if (!j.is_object() || !j.contains("preset") || !j["preset"].is_string())
    throw InputError(where + ": expected an object with a \"preset\" name");
  Preset p;
  p.name = j["preset"].get<std::string>();
  static const char* known[] = {"zero", "constant", "gaussian-decay", "exponential-decay", "skew-hermitian-gaussian"};
  if (std::find(std::begin(known), std::end(known), p.name) == std::end(known))
    throw InputError(where + ": unknown preset '" + p.name + "'");
  p.amplitude = number_or(j, "amplitude", p.amplitude, where);
  p.width = number_or(j, "width", p.width, where);
  p.center = number_or(j, "center", p.center, where);
  p.rate = number_or(j, "rate", p.rate, where);
  if (!(p.width > 0) || !(p.rate > 0)) throw InputError(where + ": width and rate must be positive");
  if (j.contains("shape")) p.shape = matrix_from_json(j["shape"], m, where + ".shape");
  return p;
}

inline json preset_to_json(const Preset& p) {
  json j{{"preset", p.name}, {"amplitude", p.amplitude}, {"width", p.width}, {"center", p.center}, {"rate", p.rate}};
  if (p.shape.size() > 0) j["shape"] = matrix_to_json(p.shape);
  return j;
}

inline CoefficientSource coefficient_from_json(const json& j, std::size_t m, const std::string& where) {
  CoefficientSource s;
  if (j.is_null()) return s;
  if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k) s.presets.push_back(preset_from_json(j[k], m, where + "[" + std::to_string(k) + "]"));
    return s;
  }
  if (j.is_object() && j.contains("preset")) {
    s.presets.push_back(preset_from_json(j, m, where));
    return s;
  }
  if (j.is_object() && j.contains("grid") && j.contains("samples")) {
    if (!j["grid"].is_array() || !j["samples"].is_array() || j["grid"].size() != j["samples"].size() ||
        j["grid"].size() < 6)
      throw InputError(where + ": grid and samples must be arrays of equal length >= 6");
    for (const auto& x : j["grid"]) {
      if (!x.is_number()) throw InputError(where + ".grid: expected numbers");
      s.grid.push_back(x.get<double>());
    }
    if (s.grid.front() != 0.0 || !std::is_sorted(s.grid.begin(), s.grid.end()) ||
        std::adjacent_find(s.grid.begin(), s.grid.end()) != s.grid.end())
      throw InputError(where + ".grid: must start at 0 and increase strictly");
    for (std::size_t k = 0; k < j["samples"].size(); ++k)
      s.samples.push_back(matrix_from_json(j["samples"][k], m, where + ".samples[" + std::to_string(k) + "]"));
    return s;
  }
  throw InputError(where + ": expected a preset object, a list of presets, or {grid, samples}");
}

inline json coefficient_to_json(const CoefficientSource& s) {
  if (s.sampled()) {
    json samples = json::array();
    for (const auto& a : s.samples) samples.push_back(matrix_to_json(a));
    return {{"grid", s.grid}, {"samples", samples}};
  }
  json arr = json::array();
  for (const auto& p : s.presets) arr.push_back(preset_to_json(p));
  return arr;
}

}  // namespace detail

inline PencilConfig pencil_config_from_json(const json& j) {
  if (!j.is_object()) throw InputError("pencil config: expected a JSON object");
  for (const char* key : {"m", "h0", "h1"})
    if (!j.contains(key)) throw InputError(std::string("pencil config: missing \"") + key + "\"");
  PencilConfig pc;
  if (!j["m"].is_number_unsigned() || j["m"].get<std::size_t>() < 1) throw InputError("pencil config: m must be a positive integer");
  pc.m = j["m"].get<std::size_t>();
  pc.xmax = detail::number_or(j, "xmax", pc.xmax, "pencil config");
  if (j.contains("grid_n")) {
    if (!j["grid_n"].is_number_unsigned()) throw InputError("pencil config: grid_n must be a positive integer");
    pc.grid_n = j["grid_n"].get<std::size_t>();
  }
  if (!(pc.xmax > 0) || pc.grid_n < 8) throw InputError("pencil config: need xmax > 0 and grid_n >= 8");
  pc.h0 = matrix_from_json(j["h0"], pc.m, "pencil config.h0");
  pc.h1 = matrix_from_json(j["h1"], pc.m, "pencil config.h1");
  pc.q1 = detail::coefficient_from_json(j.value("Q1", json()), pc.m, "pencil config.Q1");
  pc.q0 = detail::coefficient_from_json(j.value("Q0", json()), pc.m, "pencil config.Q0");
  if (pc.q1.sampled() != pc.q0.sampled() && !(pc.q1.presets.empty() && pc.q0.presets.empty()))
    throw InputError("pencil config: Q1 and Q0 must both be presets or both be sampled");
  if (pc.q1.sampled() && pc.q0.sampled() && pc.q1.grid != pc.q0.grid)
    throw InputError("pencil config: sampled Q1 and Q0 must share one grid");
  return pc;
}

inline json pencil_config_to_json(const PencilConfig& pc) {
  return {{"m", pc.m},
          {"xmax", pc.xmax},
          {"grid_n", pc.grid_n},
          {"h0", matrix_to_json(pc.h0)},
          {"h1", matrix_to_json(pc.h1)},
          {"Q1", detail::coefficient_to_json(pc.q1)},
          {"Q0", detail::coefficient_to_json(pc.q0)}};
}

inline PencilCoefficients build_pencil(const PencilConfig& pc) {
  if (pc.q1.sampled() || pc.q0.sampled()) {
    const auto& grid = pc.q1.sampled() ? pc.q1.grid : pc.q0.grid;
    const auto zeros = std::vector<Matrix>(grid.size(), Matrix::Zero(static_cast<Eigen::Index>(pc.m), static_cast<Eigen::Index>(pc.m)));
    return make_pencil_from_samples(pc.m, grid, pc.q1.sampled() ? pc.q1.samples : zeros,
                                    pc.q0.sampled() ? pc.q0.samples : zeros, pc.h0, pc.h1);
  }
  return make_pencil(pc.m, pc.xmax, pc.grid_n, pc.h0, pc.h1, pc.q1.presets, pc.q0.presets);
}

// ---------------------------------------------------------------------------
// Weyl-sample files.

inline json weyl_samples_to_json(const WeylSamples& ws) {
  json samples = json::array();
  for (const auto& s : ws.samples)
    samples.push_back({{"rho", complex_to_json(s.rho)}, {"side", side_name(s.side)}, {"M", matrix_to_json(s.M)}});
  return {{"m", ws.m},         {"r0", ws.r0},     {"R", ws.R},
          {"n_circle", ws.n_circle}, {"n_ray", ws.n_ray}, {"provenance", ws.provenance},
          {"samples", samples}};
}

inline WeylSamples weyl_samples_from_json(const json& j) {
  if (!j.is_object()) throw InputError("Weyl file: expected a JSON object");
  for (const char* key : {"m", "r0", "R", "n_circle", "n_ray", "samples"})
    if (!j.contains(key)) throw InputError(std::string("Weyl file: missing \"") + key + "\"");
  WeylSamples ws;
  try {
    ws.m = j["m"].get<std::size_t>();
    ws.r0 = j["r0"].get<double>();
    ws.R = j["R"].get<double>();
    ws.n_circle = j["n_circle"].get<std::size_t>();
    ws.n_ray = j["n_ray"].get<std::size_t>();
  } catch (const json::exception& e) {
    throw InputError(std::string("Weyl file header: ") + e.what());
  }
  if (ws.m < 1 || !(ws.r0 > 0) || !(ws.R >= ws.r0)) throw InputError("Weyl file: need m >= 1 and 0 < r0 <= R");
  ws.provenance = j.value("provenance", std::string("unknown"));
  if (!j["samples"].is_array()) throw InputError("Weyl file: samples must be an array");
  for (std::size_t k = 0; k < j["samples"].size(); ++k) {
    const auto& s = j["samples"][k];
    const std::string where = "Weyl file sample " + std::to_string(k);
    if (!s.is_object() || !s.contains("rho") || !s.contains("side") || !s.contains("M") || !s["side"].is_string())
      throw InputError(where + ": needs rho, side, M");
    ws.samples.push_back({complex_from_json(s["rho"], where + ".rho"), parse_side(s["side"].get<std::string>()),
                          matrix_from_json(s["M"], ws.m, where + ".M")});
  }
  return ws;
}

// ---------------------------------------------------------------------------
// Reconstruction output.

inline json step_record_to_json(const StepRecord& s) {
  return {{"k", s.k},
          {"delta_prev", s.delta_prev},
          {"delta", s.delta},
          {"reached_end", s.reached_end},
          {"cond_min", s.cond_min},
          {"cond_max", s.cond_max},
          {"first_flagged_x", s.first_flagged_x},
          {"omega_slope", s.omega_slope},
          {"model_pole_bound", s.model_pole_bound},
          {"lambda", s.lambda},
          {"model_class_ok", s.model_check.ok()},
          {"solves", s.solves},
          {"committed", s.committed},
          {"model_hash", s.model_hash},
          {"committed_hash", s.committed_hash},
          {"seconds", s.seconds}};
}

/// One JSON object per line. Wall-clock timings are left out so that logs are reproducible.
inline std::string step_log_jsonl(const Reconstruction& rec) {
  std::string out;
  for (const auto& s : rec.steps) {
    auto j = step_record_to_json(s);
    j.erase("seconds");
    out += j.dump() + "\n";
  }
  return out;
}

inline json reconstruction_to_json(const Reconstruction& rec) {
  json q1 = json::array(), q0 = json::array();
  for (const auto& a : rec.q1) q1.push_back(matrix_to_json(a));
  for (const auto& a : rec.q0) q0.push_back(matrix_to_json(a));
  json steps = json::array();
  for (const auto& s : rec.steps) {
    auto j = step_record_to_json(s);
    j.erase("seconds");
    steps.push_back(j);
  }
  return {{"m", rec.m},
          {"h0", matrix_to_json(rec.h0)},
          {"h1", matrix_to_json(rec.h1)},
          {"Q1_at_0", matrix_to_json(rec.q1_at_0)},
          {"grid", rec.grid},
          {"Q1", q1},
          {"Q0", q0},
          {"diagnostics",
           {{"condition", rec.condition},
            {"extract_residual", rec.extract_residual},
            {"holdout_residual", rec.holdout_residual},
            {"product_spread", rec.product_spread},
            {"bracket_zero", rec.bracket_zero},
            {"breakpoints", rec.deltas},
            {"flagged_x", rec.flagged_x},
            {"steps", steps}}}};
}

/// x, |Q1|, |Q0| (infinity norm), condition number.
inline std::string reconstruction_csv(const Reconstruction& rec) {
  std::string out = "x,norm_Q1,norm_Q0,condition\n";
  for (std::size_t k = 0; k < rec.grid.size(); ++k)
    out += fmt17(rec.grid[k]) + "," + fmt17(matrix_norm(rec.q1[k])) + "," + fmt17(matrix_norm(rec.q0[k])) + "," +
           fmt17(rec.condition[k]) + "\n";
  return out;
}

inline json invariant_report_to_json(const InvariantReport& rep, bool with_timing = true) {
  json checks = json::array();
  for (const auto& c : rep.checks) {
    json j{{"name", c.name},       {"passed", c.passed}, {"skipped", c.skipped},
           {"tolerance", c.tolerance}, {"detail", c.detail}};
    j["measured"] = std::isfinite(c.measured) ? json(c.measured) : json(nullptr);
    if (with_timing) j["seconds"] = c.seconds;
    checks.push_back(j);
  }
  return {{"ok", rep.ok()}, {"checks", checks}};
}

}  // namespace qpencil
