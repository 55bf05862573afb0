// qpencil: forward sampling, inversion, round trip and self-test for matrix quadratic pencils.
// Exit codes: 0 success, 1 self-test failure, 2 input error, 3 algorithmic abort.

#include "qpencil/app.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

using namespace qpencil;

namespace {

void print_step(const StepRecord& s) {
  std::cerr << "step " << s.k << ": delta " << s.delta_prev << " -> " << s.delta << ", cond in [" << s.cond_min
            << ", " << s.cond_max << "]";
  if (s.first_flagged_x >= 0) std::cerr << ", flagged at x = " << s.first_flagged_x;
  std::cerr << " (" << s.seconds << " s)\n";
}

void print_comparison(const ComparisonResult& c) {
  std::cout << "relative L2 error on [0, " << c.x_end << "]: Q1 " << c.q1 << ", Q0 " << c.q0 << "\n";
}

int cmd_forward(const std::string& config, const std::string& out) {
  const RunConfig rc = load_run_config(config);
  const auto fr = run_forward(build_pencil(rc.pencil), rc.contour);
  write_forward(out, fr);
  std::cout << "pole bound " << fr.pole_bound << ", r0 " << fr.samples.r0 << ", " << fr.samples.samples.size()
            << " samples -> " << (std::filesystem::path(out) / "weyl.json").string() << "\n";
  return 0;
}

int cmd_invert(const std::string& config, const std::string& weyl, const std::string& out) {
  RunConfig rc = load_run_config(config);
  const WeylSamples ws = weyl_samples_from_json(parse_json_file(weyl));
  if (ws.m != rc.pencil.m) throw InputError("Weyl file dimension does not match the config");
  rc.stepper.on_step = print_step;
  const Reconstruction rec = reconstruct_piecewise(ws, rc.stepper);
  std::optional<ComparisonResult> cmp;
  if (rc.has_pencil_coefficients) cmp = compare_reconstruction(build_pencil(rc.pencil), rec);
  write_reconstruction(out, rec, cmp);
  std::cout << rec.steps.size() << " step(s), recovered on [0, " << rec.grid.back() << "]\n";
  if (cmp) print_comparison(*cmp);
  return 0;
}

int cmd_roundtrip(const std::string& config, const std::string& out) {
  RunConfig rc = load_run_config(config);
  const PencilCoefficients c = build_pencil(rc.pencil);
  const auto fr = run_forward(c, rc.contour);
  rc.stepper.on_step = print_step;
  const Reconstruction rec = reconstruct_piecewise(fr.samples, rc.stepper);
  const auto cmp = compare_reconstruction(c, rec);
  if (!out.empty()) {
    write_forward(out, fr);
    write_reconstruction(out, rec, cmp);
  }
  std::cout << rec.steps.size() << " step(s)\n";
  print_comparison(cmp);
  return 0;
}

int cmd_selftest(const std::vector<std::string>& presets, const std::string& out) {
  std::vector<std::string> names = presets;
  if (names.empty())
    for (const auto& [name, _] : shipped_pencils()) names.push_back(name);
  bool ok = true;
  json all = json::object();
  for (const auto& name : names) {
    const NamedPencil& np = shipped_pencil(name);
    const PencilCoefficients c = build_pencil(np.pencil);
    std::optional<PencilCoefficients> partner;
    if (np.partner) partner = build_pencil(*np.partner);
    const auto rep = run_invariants(c, partner ? &*partner : nullptr);
    std::cout << "== " << name << " (" << np.note << ")\n" << format_report_table(rep) << "\n";
    ok = ok && rep.ok();
    all[name] = invariant_report_to_json(rep);
  }
  if (!out.empty()) write_atomic(std::filesystem::path(out) / "selftest.json", all.dump(1) + "\n");
  std::cout << (ok ? "all invariants hold\n" : "invariant failures\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse spectral reconstruction for matrix quadratic pencils"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (overrides QPENCIL_THREADS)")->check(CLI::NonNegativeNumber);

  std::string config, out, weyl;
  std::vector<std::string> presets;
  auto* fwd = app.add_subcommand("forward", "sample the Weyl matrix on the contour");
  fwd->add_option("--config", config, "pencil config (JSON)")->required();
  fwd->add_option("--out", out, "output directory")->required();
  auto* inv = app.add_subcommand("invert", "reconstruct Q1, Q0 from a Weyl-sample file");
  inv->add_option("--config", config, "run config (JSON)")->required();
  inv->add_option("--weyl", weyl, "Weyl-sample file")->required();
  inv->add_option("--out", out, "output directory")->required();
  auto* rt = app.add_subcommand("roundtrip", "forward, invert and compare");
  rt->add_option("--config", config, "pencil config (JSON)")->required();
  rt->add_option("--out", out, "optional output directory");
  auto* st = app.add_subcommand("selftest", "invariant battery on shipped pencils");
  st->add_option("--preset", presets, "preset name(s); default all");
  st->add_option("--out", out, "optional directory for selftest.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (threads > 0) setenv("QPENCIL_THREADS", std::to_string(threads).c_str(), 1);

  try {
    if (*fwd) return cmd_forward(config, out);
    if (*inv) return cmd_invert(config, weyl, out);
    if (*rt) return cmd_roundtrip(config, out);
    if (*st) return cmd_selftest(presets, out);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const AlgorithmError& e) {
    std::cerr << "algorithm error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
