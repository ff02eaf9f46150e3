#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "porodec/config.hpp"
#include "porodec/delay.hpp"
#include "porodec/models.hpp"
#include "porodec/steppers.hpp"
#include "porodec/studies.hpp"

#ifndef PORODEC_VERSION
#define PORODEC_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace porodec;

namespace {

enum ExitCode { kOk = 0, kCrash = 1, kAssertFailed = 2, kDiverged = 3 };

// Growth over the initial max-norm that `run` reports as divergence.
constexpr double kRunGrowthLimit = 1e6;

struct Options {
  std::string preset;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string scheme = "semi-explicit";
  std::string out;
  unsigned threads = 0;
  std::size_t capture_every = 0;
  bool dump_mesh = false;
  bool assert_mode = false;
  bool json_lines = false;
  std::string sizes;
  long reps = 0;
  std::string history;
};

/// One command invocation: resolved config, output directory and the
/// metadata sidecar written on every exit path.
struct Session {
  std::string command, sub;
  Options opt;
  Config config;
  fs::path out_dir;
  json meta;
  std::vector<std::string> outputs;
  std::vector<std::string> failures;

  std::string fmt(double v) const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  }

  void prepare_output() {
    if (!opt.out.empty()) {
      out_dir = opt.out;
    } else {
      const char* root = std::getenv("PORODEC_OUT");
      out_dir = fs::path(root && *root ? root : "out") / (command + "-" + sub);
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
      throw std::runtime_error("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    }
  }

  std::ofstream open(const std::string& name) {
    std::ofstream os(out_dir / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + (out_dir / name).string() + "'");
    outputs.push_back(name);
    return os;
  }

  void check(bool ok, const std::string& what) {
    std::cout << (ok ? "ok    " : "FAIL  ") << what << '\n';
    if (!ok) failures.push_back(what);
    meta["assertions"].push_back({{"check", what}, {"passed", ok}});
  }

  void write_metadata(const std::string& status) {
    if (out_dir.empty()) return;
    meta["status"] = status;
    meta["outputs"] = outputs;
    std::ofstream os(out_dir / "metadata.json", std::ios::binary);
    os << meta.dump(2) << '\n';
  }
};

const char* default_preset(const std::string& command, const std::string& sub) {
  if (command == "run") {
    if (sub == "two-field") return "poro-5.1";
    if (sub == "network") return "network-5.2";
    return "toy-5.3";
  }
  if (command == "study") {
    if (sub == "convergence") return "poro-5.1-desk";
    if (sub == "runtime") return "network-5.2";
    if (sub == "network-convergence") return "network-m2";
    return "toy-5.3";
  }
  return "toy-5.3";
}

Config resolve_config(Session& s) {
  Config c;
  if (!s.opt.config_path.empty()) {
    if (!s.opt.preset.empty()) throw ConfigError("--preset and --config are mutually exclusive");
    c = Config::load_file(s.opt.config_path);
  } else {
    if (s.opt.preset.empty()) s.opt.preset = default_preset(s.command, s.sub);
    c = Config::preset(s.opt.preset);
  }
  for (const auto& o : s.opt.overrides) c.apply_override(o);
  return c;
}

std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    const int k = std::stoi(item, &pos);
    if (k <= 0) throw ConfigError("--sizes entries must be positive, got '" + item + "'");
    out.push_back(k);
  }
  if (out.empty()) throw ConfigError("--sizes is empty");
  return out;
}

TwoFieldSystem build_two_field_like(const Config& c) {
  const std::string kind = c.kind();
  if (kind == "toy") return build_toy(c.number_or("toy.omega", 0.1), c.number_or("toy.p0", kToyP0)).system;
  if (kind == "two-field") return build_two_field(c);
  throw ConfigError("model.kind '" + kind + "' has no two-field system");
}

HistoryKind history_kind(const Session& s) {
  if (!s.opt.history.empty()) return parse_history_kind(s.opt.history);
  return parse_history_kind(s.config.get_or("study.history", "constant"));
}

History make_history(const TwoFieldSystem& sys, double tau, HistoryKind kind) {
  switch (kind) {
    case HistoryKind::constant:
      return History::constant(sys.p0, tau);
    case HistoryKind::cubic_blend:
      return splicing_history(sys, tau);
    case HistoryKind::samples: {
      // sampled version of the splicing blend on 32 intervals
      const History blend = splicing_history(sys, tau);
      std::vector<Vector> values;
      for (int i = 0; i <= 32; ++i) values.push_back(blend.value(-tau + tau * i / 32.0));
      values.back() = sys.p0;
      values.front() = sys.p0;
      return History::samples(std::move(values), tau);
    }
  }
  throw std::logic_error("unhandled history kind");
}

double time_T(const Config& c) { return c.number_or("study.T", c.number_or("time.T", 1.0)); }

bool in_band(double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; }

// -- run ---------------------------------------------------------------

int cmd_run(Session& s) {
  const std::string kind = s.config.kind();
  if (kind != s.sub) {
    throw ConfigError("'run " + s.sub + "' needs model.kind = " + s.sub + ", config has '" + kind + "'");
  }
  const Scheme scheme = parse_scheme(s.opt.scheme);
  const double tau = s.config.number("time.tau");
  const double T = s.config.number("time.T");
  CapturePolicy policy;
  policy.growth_limit = kRunGrowthLimit;
  policy.every = s.opt.capture_every ? s.opt.capture_every
                                     : static_cast<std::size_t>(s.config.integer_or("time.capture_every", 0));

  std::vector<std::string> warnings;
  Trajectory tr;
  std::shared_ptr<const TriMesh> mesh;
  if (kind == "network") {
    const NetworkSystem sys = build_network(s.config, &warnings);
    mesh = sys.mesh;
    tr = integrate(sys, scheme, tau, T, policy);
  } else {
    const TwoFieldSystem sys = build_two_field_like(s.config);
    mesh = sys.mesh;
    tr = integrate(sys, scheme, tau, T, policy);
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  s.meta["warnings"] = warnings;

  {
    auto os = s.open("trajectory.csv");
    write_trajectory_csv(os, tr);
  }
  {
    auto os = s.open("residuals.csv");
    write_residual_csv(os, tr);
  }
  {
    auto os = s.open("timing.csv");
    write_timing_csv(os, tr);
  }
  if (s.opt.dump_mesh) {
    if (!mesh) throw ConfigError("--dump-mesh needs a finite element model");
    auto os = s.open("mesh.txt");
    write_mesh(os, *mesh);
  }

  std::cout << tr.label << ": " << tr.steps << " steps, tau = " << s.fmt(tau) << ", T = " << s.fmt(T) << '\n';
  const auto& last = tr.field_max.back();
  for (std::size_t f = 0; f < tr.field_names.size(); ++f) {
    std::cout << "  " << tr.field_names[f] << "_max(T) = " << s.fmt(last[f]) << '\n';
  }
  std::cout << "  max residual = " << s.fmt(tr.max_residual()) << '\n';
  std::cout << "  solve time = " << s.fmt(tr.solve_seconds()) << " s\n";
  s.meta["result"] = {{"steps", tr.steps}, {"max_residual", tr.max_residual()}};
  return kOk;
}

// -- study -------------------------------------------------------------

int cmd_convergence(Session& s) {
  ConvergenceSpec spec = convergence_spec(s.config);
  spec.threads = s.opt.threads;
  const ConvergenceResult r = convergence_study(s.config, spec);
  {
    auto os = s.open("convergence.csv");
    write_convergence_csv(os, r);
  }
  {
    auto os = s.open("convergence_timing.csv");
    write_convergence_timing_csv(os, r);
  }
  {
    auto os = s.open("eoc.csv");
    write_eoc_csv(os, r);
  }
  std::cout << "EOC err_p_c vs tau: implicit " << s.fmt(r.eoc_tau_implicit.least_squares) << ", semi-explicit "
            << s.fmt(r.eoc_tau_semi.least_squares) << '\n';
  std::cout << "EOC err_u_a vs h:   implicit " << s.fmt(r.eoc_h_implicit.least_squares) << ", semi-explicit "
            << s.fmt(r.eoc_h_semi.least_squares) << '\n';
  std::cout << "max relative scheme gap: " << s.fmt(r.max_scheme_gap) << '\n';
  if (s.opt.assert_mode) {
    const double lo = 0.8, hi = 1.2;
    s.meta["thresholds"] = {{"eoc", {lo, hi}}, {"scheme_gap", 0.05}};
    s.check(in_band(r.eoc_tau_implicit.least_squares, lo, hi), "implicit tau EOC in [0.8, 1.2]");
    s.check(in_band(r.eoc_tau_semi.least_squares, lo, hi), "semi-explicit tau EOC in [0.8, 1.2]");
    s.check(in_band(r.eoc_h_implicit.least_squares, lo, hi), "implicit h EOC in [0.8, 1.2]");
    s.check(in_band(r.eoc_h_semi.least_squares, lo, hi), "semi-explicit h EOC in [0.8, 1.2]");
    s.check(r.max_scheme_gap <= 0.05, "schemes within 5% at every ladder point");
  }
  return kOk;
}

int cmd_sweep(Session& s) {
  const std::vector<double> omegas = s.config.list("study.omegas");
  const std::vector<double> taus = s.config.list("study.taus");
  const SweepResult r = coupling_sweep(omegas, taus, time_T(s.config), s.config.number_or("toy.p0", kToyP0),
                                       s.opt.threads);
  {
    auto os = s.open("sweep.csv");
    write_sweep_csv(os, r);
  }
  for (std::size_t i = 0; i < r.taus.size(); ++i) {
    std::cout << "tau = " << s.fmt(r.taus[i]) << ": boundary "
              << (r.boundary[i] ? s.fmt(*r.boundary[i]) : std::string("none")) << '\n';
  }
  if (s.opt.assert_mode) {
    s.meta["thresholds"] = {{"boundary", {0.20, 0.23}}, {"error_factor", 10.0}, {"unstable_from", 0.24}};
    for (std::size_t i = 0; i < r.taus.size(); ++i) {
      const double tau = r.taus[i];
      bool small_ok = true, large_fail = true;
      for (const auto& rec : r.records) {
        if (rec.tau != tau) continue;
        if (rec.omega <= kWeakCouplingBound + 1e-12) small_ok = small_ok && !rec.failed && rec.error <= 10.0 * tau;
        if (rec.omega >= 0.24 - 1e-12) large_fail = large_fail && rec.failed;
      }
      const std::string t = "tau = " + s.fmt(tau);
      s.check(small_ok, t + ": every omega <= 0.2046 has error <= 10 tau");
      s.check(large_fail, t + ": every omega >= 0.24 fails");
      s.check(r.boundary[i] && in_band(*r.boundary[i], 0.20 - 1e-12, 0.23 + 1e-12), t + ": boundary in [0.20, 0.23]");
    }
  }
  return kOk;
}

int cmd_runtime(Session& s) {
  const std::vector<int> sizes = !s.opt.sizes.empty() ? parse_sizes(s.opt.sizes) : [&] {
    std::vector<int> v;
    for (double k : s.config.list("study.sizes")) v.push_back(static_cast<int>(k));
    return v;
  }();
  const std::size_t reps = s.opt.reps > 0 ? static_cast<std::size_t>(s.opt.reps)
                                          : static_cast<std::size_t>(s.config.integer_or("study.reps", 3));
  const RuntimeTable t = runtime_benchmark(s.config, sizes, reps, time_T(s.config));
  {
    auto os = s.open("runtime.csv");
    write_runtime_csv(os, t);
  }
  for (const auto& row : t.rows) {
    std::cout << "k = " << row.k << ": implicit " << s.fmt(row.implicit_seconds) << " s, semi-explicit "
              << s.fmt(row.semi_seconds) << " s, reduction " << s.fmt(row.reduction_percent) << "%\n";
  }
  if (s.opt.assert_mode) {
    s.meta["thresholds"] = {{"reduction_percent", "> 0"}, {"residual", 1e-8}};
    for (const auto& row : t.rows) {
      const std::string k = "k = " + std::to_string(row.k);
      s.check(row.semi_loop_seconds < row.implicit_loop_seconds, k + ": semi-explicit loop faster than implicit");
      s.check(row.max_residual <= 1e-8, k + ": step residuals <= 1e-8");
    }
  }
  return kOk;
}

int cmd_delay_gap(Session& s) {
  const TwoFieldSystem sys = build_two_field_like(s.config);
  const std::vector<double> taus = s.config.list("study.gap_taus");
  const auto fine = static_cast<std::size_t>(s.config.integer_or("study.fine_factor", 256));
  const GapTable t = delay_gap_experiment(sys, taus, fine, time_T(s.config), history_kind(s));
  {
    auto os = s.open("gap.csv");
    write_gap_csv(os, t);
  }
  for (const auto& row : t.rows) {
    std::cout << "tau = " << s.fmt(row.tau) << ": gap " << s.fmt(row.gap);
    if (row.ratio) std::cout << ", ratio " << s.fmt(*row.ratio);
    std::cout << '\n';
  }
  if (s.opt.assert_mode) {
    s.meta["thresholds"] = {{"ratio", {1.6, 2.4}}};
    for (const auto& row : t.rows) {
      if (row.ratio) s.check(in_band(*row.ratio, 1.6, 2.4), "tau = " + s.fmt(row.tau) + ": gap ratio in [1.6, 2.4]");
    }
  }
  return kOk;
}

int cmd_network_convergence(Session& s) {
  std::vector<long> ladder;
  for (double n : s.config.list("study.mesh_ladder")) ladder.push_back(static_cast<long>(n));
  const NetworkConvergenceResult r =
      network_convergence(s.config, ladder, s.config.integer("study.ref_n"), s.config.number("study.ref_tau"),
                          time_T(s.config), s.opt.threads);
  {
    auto os = s.open("network_convergence.csv");
    write_network_convergence_csv(os, r);
  }
  {
    auto os = s.open("network_eoc.csv");
    os << "scheme,param,eoc\n";
    auto rows = [&](const char* scheme, const Eoc& e) {
      for (std::size_t i = 0; i < e.pairwise.size(); ++i) {
        os << scheme << ",pair" << i + 1 << ',' << format_double(e.pairwise[i]) << '\n';
      }
      os << scheme << ",least_squares," << format_double(e.least_squares) << '\n';
    };
    rows("implicit", r.eoc_implicit);
    rows("semi-explicit", r.eoc_semi);
  }
  std::cout << "combined error EOC: implicit " << s.fmt(r.eoc_implicit.least_squares) << ", semi-explicit "
            << s.fmt(r.eoc_semi.least_squares) << '\n';
  if (s.opt.assert_mode) {
    s.meta["thresholds"] = {{"eoc", {0.7, 1.3}}};
    s.check(in_band(r.eoc_implicit.least_squares, 0.7, 1.3), "implicit combined EOC in [0.7, 1.3]");
    s.check(in_band(r.eoc_semi.least_squares, 0.7, 1.3), "semi-explicit combined EOC in [0.7, 1.3]");
  }
  return kOk;
}

// -- analyze -----------------------------------------------------------

void report(Session& s, const json& record, const std::string& text) {
  s.meta["report"].push_back(record);
  if (s.opt.json_lines) {
    std::cout << record.dump() << '\n';
  } else {
    std::cout << text << '\n';
  }
}

int cmd_stability(Session& s) {
  const TwoFieldSystem sys = build_two_field_like(s.config);
  const DelayDAE dae(sys, s.config.number_or("time.tau", 1.0));
  const StabilityVerdict v = stability_test(dae);
  report(s, {{"rho", v.rho}, {"classification", to_string(v.classification)}, {"margin", v.margin}},
         "rho = " + s.fmt(v.rho) + ", " + to_string(v.classification) + " (margin " + s.fmt(v.margin) + ")");
  return kOk;
}

int cmd_splicing(Session& s) {
  const TwoFieldSystem sys = build_two_field_like(s.config);
  const double tau = s.config.number_or("time.tau", 1.0);
  const HistoryKind kind = history_kind(s);
  const DelayDAE dae(sys, make_history(sys, tau, kind));
  const double r = splicing_check(dae);
  report(s, {{"history", to_string(kind)}, {"residual", r}},
         std::string("history ") + to_string(kind) + ": splicing residual = " + s.fmt(r));
  return kOk;
}

int cmd_constants(Session& s) {
  const TwoFieldSystem sys = build_two_field_like(s.config);
  const CouplingConstants c = coupling_constants(sys);
  json rec;
  std::ostringstream text;
  auto opt = [&](const char* name, const std::optional<double>& v) {
    rec[name] = v ? json(*v) : json(nullptr);
    text << name << " = " << (v ? s.fmt(*v) : std::string("not computed")) << '\n';
  };
  opt("c_a", c.c_a);
  opt("c_c", c.c_c);
  rec["C_d"] = c.C_d;
  rec["rho"] = c.rho;
  rec["weak_coupling"] = c.weak_coupling;
  rec["stable"] = c.stable;
  text << "C_d = " << s.fmt(c.C_d) << '\n'
       << "rho = " << s.fmt(c.rho) << '\n'
       << "weak coupling: " << c.weak_coupling << '\n'
       << "delay stability: " << (c.stable ? "stable" : "unstable");
  report(s, rec, text.str());
  return kOk;
}

int dispatch(Session& s) {
  if (s.command == "run") return cmd_run(s);
  if (s.command == "study") {
    if (s.sub == "convergence") return cmd_convergence(s);
    if (s.sub == "sweep") return cmd_sweep(s);
    if (s.sub == "runtime") return cmd_runtime(s);
    if (s.sub == "delay-gap") return cmd_delay_gap(s);
    return cmd_network_convergence(s);
  }
  if (s.sub == "stability") return cmd_stability(s);
  if (s.sub == "splicing") return cmd_splicing(s);
  return cmd_constants(s);
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--preset", o.preset, "Named preset")->check([](const std::string& name) {
    const auto names = Config::preset_names();
    if (std::find(names.begin(), names.end(), name) != names.end()) return std::string();
    std::string msg = "unknown preset '" + name + "'; available:";
    for (const auto& n : names) msg += " " + n;
    return msg;
  });
  app->add_option("--config", o.config_path, "Config file")->check(CLI::ExistingFile);
  app->add_option("--set", o.overrides, "Override section.key=value (repeatable)")->take_all();
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--threads", o.threads, "Worker threads (0 = all cores, 1 = sequential)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euler time stepping for elliptic-parabolic systems"};
  app.set_version_flag("--version", PORODEC_VERSION);
  app.require_subcommand(1);

  Options opt;
  Session s;

  auto* run = app.add_subcommand("run", "Integrate one model and write its trajectory");
  run->add_option("model", s.sub, "two-field, network or toy")
      ->required()
      ->check(CLI::IsMember({"two-field", "network", "toy"}));
  add_common(run, opt);
  run->add_option("--scheme", opt.scheme, "implicit or semi-explicit")
      ->check(CLI::IsMember({"implicit", "semi-explicit", "semi_explicit"}));
  run->add_option("--capture-every", opt.capture_every, "Keep every k-th state");
  run->add_flag("--dump-mesh", opt.dump_mesh, "Write mesh.txt");

  auto* study = app.add_subcommand("study", "Run a convergence, sweep, runtime or delay study");
  study->add_option("name", s.sub, "convergence, sweep, runtime, delay-gap or network-convergence")
      ->required()
      ->check(CLI::IsMember({"convergence", "sweep", "runtime", "delay-gap", "network-convergence"}));
  add_common(study, opt);
  study->add_flag("--assert", opt.assert_mode, "Exit 2 when a study invariant fails");
  study->add_option("--sizes", opt.sizes, "Runtime study levels k, comma separated");
  study->add_option("--reps", opt.reps, "Runtime study repetitions");
  study->add_option("--history", opt.history, "constant, cubic-blend or samples");

  auto* analyze = app.add_subcommand("analyze", "Report stability, splicing or coupling constants");
  analyze->add_option("name", s.sub, "stability, splicing or constants")
      ->required()
      ->check(CLI::IsMember({"stability", "splicing", "constants"}));
  add_common(analyze, opt);
  analyze->add_option("--history", opt.history, "constant, cubic-blend or samples");
  analyze->add_flag("--json-lines", opt.json_lines, "One JSON record per line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kCrash;
  }

  s.command = app.get_subcommands().front()->get_name();
  s.opt = opt;
  std::vector<std::string> args(argv + 1, argv + argc);
  s.meta["version"] = PORODEC_VERSION;
  s.meta["command"] = s.command;
  s.meta["subcommand"] = s.sub;
  s.meta["args"] = args;

  try {
    s.config = resolve_config(s);
    s.prepare_output();
    s.meta["preset"] = s.opt.preset;
    s.meta["config_file"] = s.opt.config_path;
    s.meta["overrides"] = s.opt.overrides;
    s.meta["scheme"] = s.opt.scheme;
    s.meta["threads"] = s.opt.threads;
    s.meta["config"] = s.config.entries();
    s.meta["decisions"] = {
        "CSV rows cover steps 1..N; the initial state is not a row",
        "wall times live in separate timing files so the other CSVs are deterministic",
        "relative errors divide by the reference field norm at the final time",
        "run reports divergence above 1e6 times max(1, initial max-norm) or 1e12",
        "punched domains drop every cell whose centroid lies inside the disk (staircase hole)",
        "network displacement is clamped on the outer square only; fluxes have zero normal trace",
        "toy sweep uses p0 = 1 and an implicit reference at tau_min / 64",
    };
    {
      // the resolved config alone is enough to repeat the run with --config
      std::ofstream os(s.out_dir / "config.txt", std::ios::binary);
      os << s.config.to_text();
      s.outputs.push_back("config.txt");
    }

    const int code = dispatch(s);
    if (!s.failures.empty()) {
      std::cerr << s.failures.size() << " assertion(s) failed\n";
      s.write_metadata("assertion failed");
      return kAssertFailed;
    }
    s.write_metadata("ok");
    std::cout << "output: " << s.out_dir.string() << '\n';
    return code;
  } catch (const DivergenceDetected& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    s.write_metadata("diverged");
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    s.write_metadata("error");
    return kCrash;
  }
}
