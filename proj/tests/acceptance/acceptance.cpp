// Acceptance suite: one PASS/FAIL line per criterion with the measured
// values. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "porodec/config.hpp"
#include "porodec/delay.hpp"
#include "porodec/fem.hpp"
#include "porodec/models.hpp"
#include "porodec/steppers.hpp"
#include "porodec/studies.hpp"
#include "random_system.hpp"

using namespace porodec;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string g(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string round_to(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

bool in_band(double v, double lo, double hi) { return std::isfinite(v) && v >= lo && v <= hi; }

// -- 1 -----------------------------------------------------------------

void toy_constants(Outcome& o) {
  const CouplingConstants unit = coupling_constants(build_toy(1.0).system);
  const double c_a = unit.c_a.value_or(NAN);
  const double c_c = unit.c_c.value_or(NAN);
  const double cd_per_omega = unit.C_d;  // C_d is linear in omega
  // C_d^2 = c_a c_c and rho(omega) = rho(1) omega^2 = 1
  const double weak_bound = std::sqrt(c_a * c_c) / cd_per_omega;
  const double stab_bound = 1.0 / std::sqrt(unit.rho);
  const double stab_spectral = 1.0 / std::sqrt(stability_test(DelayDAE(build_toy(1.0).system, 0.1)).rho);

  o.detail << "c_a=" << g(c_a) << " C_d/omega=" << g(cd_per_omega) << " weak bound=" << g(weak_bound)
           << " stability bound=" << g(stab_bound) << " (delay test " << g(stab_spectral) << ")";
  o.require(round_to(c_a, 3) == "0.586", "c_a to 3 digits");
  o.require(std::abs(c_a - (2.0 - std::sqrt(2.0))) <= 1e-10, "c_a = 2 - sqrt 2");
  o.require(round_to(cd_per_omega, 3) == "3.742", "C_d/omega to 3 digits");
  o.require(round_to(weak_bound, 4) == "0.2046", "weak-coupling bound to 4 decimals");
  o.require(round_to(stab_bound, 4) == "0.2182", "stability bound to 4 decimals");
  o.require(round_to(stab_spectral, 4) == "0.2182", "delay stability bound to 4 decimals");
  o.require(coupling_constants(build_toy(0.2046).system).weak_coupling == "satisfied (tight)",
            "omega = 0.2046 reported as tight");
}

// -- 2 -----------------------------------------------------------------

void sweep(Outcome& o) {
  const Config c = Config::preset("toy-5.3");
  const SweepResult r = coupling_sweep(c.list("study.omegas"), c.list("study.taus"), c.number("time.T"));
  for (std::size_t i = 0; i < r.taus.size(); ++i) {
    const double tau = r.taus[i];
    double worst_stable = 0.0;
    bool large_fail = true;
    for (const auto& rec : r.records) {
      if (rec.tau != tau) continue;
      if (rec.omega <= kWeakCouplingBound + 1e-12) {
        worst_stable = std::max(worst_stable, rec.failed ? INFINITY : rec.error / tau);
      }
      if (rec.omega >= 0.24 - 1e-12) large_fail = large_fail && rec.failed;
    }
    const auto& b = r.boundary[i];
    o.detail << "tau=" << g(tau) << ": boundary=" << (b ? g(*b) : "none") << " max error/tau(omega<=0.2046)="
             << g(worst_stable, 3) << "; ";
    o.require(worst_stable <= 10.0, "error <= 10 tau for omega <= 0.2046 at tau " + g(tau));
    o.require(large_fail, "omega >= 0.24 fails at tau " + g(tau));
    o.require(b && in_band(*b, 0.20 - 1e-12, 0.23 + 1e-12), "boundary in [0.20, 0.23] at tau " + g(tau));
  }
}

// -- 3 -----------------------------------------------------------------

void two_field_convergence(Outcome& o) {
  const Config c = Config::preset("poro-5.1-desk");
  const ConvergenceResult r = convergence_study(c, convergence_spec(c));
  o.detail << "tau EOC (LS) implicit=" << g(r.eoc_tau_implicit.least_squares, 4)
           << " semi=" << g(r.eoc_tau_semi.least_squares, 4) << " pairwise=";
  for (double e : r.eoc_tau_implicit.pairwise) o.detail << g(e, 3) << ' ';
  o.detail << "h EOC (LS) implicit=" << g(r.eoc_h_implicit.least_squares, 4)
           << " semi=" << g(r.eoc_h_semi.least_squares, 4) << " max scheme gap=" << g(r.max_scheme_gap, 3);
  o.require(in_band(r.eoc_tau_implicit.least_squares, 0.8, 1.2), "implicit tau EOC in [0.8, 1.2]");
  o.require(in_band(r.eoc_tau_semi.least_squares, 0.8, 1.2), "semi-explicit tau EOC in [0.8, 1.2]");
  o.require(in_band(r.eoc_h_implicit.least_squares, 0.8, 1.2), "implicit h EOC in [0.8, 1.2]");
  o.require(in_band(r.eoc_h_semi.least_squares, 0.8, 1.2), "semi-explicit h EOC in [0.8, 1.2]");
  o.require(r.max_scheme_gap <= 0.05, "schemes within 5%");
}

// -- 4 -----------------------------------------------------------------

double max_step_diff(const Trajectory& a, const Trajectory& b) {
  if (a.snapshots.size() != b.snapshots.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    for (std::size_t f = 0; f < 2; ++f) {
      m = std::max(m, oracle::max_abs_diff(a.snapshots[k].fields[f], b.snapshots[k].fields[f]));
    }
  }
  return m;
}

void equivalence(Outcome& o) {
  const double tau = 0.01, T = 1.0;  // 100 steps
  double toy_diff = 0.0;
  for (double omega : {0.0, 0.1, 0.2}) {
    const auto toy = build_toy(omega);
    toy_diff = std::max(toy_diff, max_step_diff(integrate(toy.system, Scheme::semi_explicit, tau, T),
                                                method_of_steps(DelayDAE(toy.system, tau), T, 1)));
  }
  std::mt19937_64 rng(2024);
  double random_diff = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const TwoFieldSystem s = oracle::random_system(rng, 2 + trial % 9, 1 + trial % 5);
    random_diff = std::max(random_diff, max_step_diff(integrate(s, Scheme::semi_explicit, tau, T),
                                                      method_of_steps(DelayDAE(s, tau), T, 1)));
  }
  o.detail << "toy max diff=" << g(toy_diff, 3) << " random max diff=" << g(random_diff, 3);
  o.require(toy_diff <= 1e-12, "toy iterates agree to 1e-12");
  o.require(random_diff <= 1e-12, "random iterates agree to 1e-12");
}

// -- 5 -----------------------------------------------------------------

void delay_gap(Outcome& o) {
  const GapTable t = delay_gap_experiment(build_toy(0.1).system, {1.0 / 8, 1.0 / 16, 1.0 / 32}, 256, 1.0);
  for (const auto& row : t.rows) {
    o.detail << "tau=" << g(row.tau) << " gap=" << g(row.gap, 4);
    if (row.ratio) {
      o.detail << " ratio=" << g(*row.ratio, 4);
      o.require(in_band(*row.ratio, 1.6, 2.4), "ratio in [1.6, 2.4] at tau " + g(row.tau));
    }
    o.detail << "; ";
  }
}

// -- 6 -----------------------------------------------------------------

void network_run(Outcome& o) {
  const Config base = Config::preset("network-5.2");
  for (int k : {4, 5}) {
    Config c = base;
    const long n = 1L << k;
    c.set("mesh.n", std::to_string(n));
    const double tau = 1.0 / static_cast<double>(n);
    const NetworkSystem s = build_network(c);
    double residual = 0.0;
    bool bounded = true, monotone = true;
    for (Scheme sc : {Scheme::semi_explicit, Scheme::implicit}) {
      const Trajectory tr = integrate(s, sc, tau, 10.0);
      residual = std::max(residual, tr.max_residual());
      const std::size_t p1 = 1 + s.m;  // field index of p_1
      double initial = 0.0;
      for (const auto& p : s.p0) initial = std::max(initial, norm_inf(p));
      for (const auto& row : tr.field_max) {
        for (std::size_t f = 1 + s.m; f < row.size(); ++f) bounded = bounded && row[f] <= initial;
      }
      const std::size_t N = tr.field_max.size();
      for (std::size_t i = N - (8 * N) / 10; i + 1 < N; ++i) {
        monotone = monotone && tr.field_max[i + 1][p1] <= tr.field_max[i][p1] * (1.0 + 1e-12);
      }
    }
    o.detail << "k=" << k << ": residual=" << g(residual, 3) << " bounded=" << bounded << " p1 monotone=" << monotone
             << "; ";
    o.require(residual <= 1e-8, "residuals <= 1e-8 at k=" + std::to_string(k));
    o.require(bounded, "pressures bounded by the initial peak at k=" + std::to_string(k));
    o.require(monotone, "p1 peak decays monotonically at k=" + std::to_string(k));
  }
  const RuntimeTable t = runtime_benchmark(base, {4, 5}, 3, 10.0);
  for (const auto& row : t.rows) {
    o.detail << "k=" << row.k << ": implicit " << g(row.implicit_seconds, 3) << " s (loop "
             << g(row.implicit_loop_seconds, 3) << "), semi-explicit " << g(row.semi_seconds, 3) << " s (loop "
             << g(row.semi_loop_seconds, 3) << "), reduction " << g(row.reduction_percent, 3) << "%; ";
    o.require(row.semi_loop_seconds < row.implicit_loop_seconds,
              "semi-explicit loop faster at k=" + std::to_string(row.k));
    o.require(row.max_residual <= 1e-8, "benchmark residuals <= 1e-8 at k=" + std::to_string(row.k));
  }
}

// -- 7 -----------------------------------------------------------------

void network_convergence_check(Outcome& o) {
  const NetworkConvergenceResult r = network_convergence(Config::preset("network-m2"), {4, 8, 16}, 32, 1.0 / 64, 1.0);
  o.detail << "combined EOC (LS) implicit=" << g(r.eoc_implicit.least_squares, 4)
           << " semi=" << g(r.eoc_semi.least_squares, 4);
  o.require(in_band(r.eoc_implicit.least_squares, 0.7, 1.3), "implicit EOC in [0.7, 1.3]");
  o.require(in_band(r.eoc_semi.least_squares, 0.7, 1.3), "semi-explicit EOC in [0.7, 1.3]");
}

// -- 8 -----------------------------------------------------------------

void projection_rates(Outcome& o) {
  const double pi = std::acos(-1.0);
  auto grad = [pi](double x, double y) {
    return Point{pi * std::cos(pi * x) * std::sin(pi * y), pi * std::sin(pi * x) * std::cos(pi * y)};
  };
  std::vector<double> err, h;
  for (std::size_t n : {8u, 16u, 32u}) {
    const TriMesh m = unit_square_mesh(n);
    const DofMap p = make_dofmap(m, SpaceKind::p1_scalar, Elimination::all_boundary);
    err.push_back(h1_seminorm_error(m, p, elliptic_projection_b(m, p, 1.0, grad), grad));
    h.push_back(1.0 / static_cast<double>(n));
  }
  const Eoc e = compute_eoc(err, h);
  o.detail << "errors=" << g(err[0], 4) << ',' << g(err[1], 4) << ',' << g(err[2], 4) << " EOC=";
  for (double v : e.pairwise) {
    o.detail << g(v, 4) << ' ';
    o.require(in_band(v, 0.85, 1.15), "pairwise EOC in [0.85, 1.15]");
  }
}

// -- 9 -----------------------------------------------------------------

void invariant_suites(Outcome& o) {
  std::stringstream list(PORODEC_UNIT_TEST_BINARIES);
  std::string path;
  int suites = 0, failed = 0;
  while (std::getline(list, path, '|')) {
    if (path.empty()) continue;
    ++suites;
    const std::string cmd = "\"" + path + "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      ++failed;
      o.detail << " failed suite: " << path;
    }
  }
  o.detail << suites - failed << "/" << suites << " property suites passed";
  o.require(suites > 0 && failed == 0, "all property suites pass");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "toy analytic constants", toy_constants},
      {2, "coupling sharpness sweep", sweep},
      {3, "two-field convergence", two_field_convergence},
      {4, "scheme and delay equivalence", equivalence},
      {5, "delay gap order", delay_gap},
      {6, "network run and runtime", network_run},
      {7, "network convergence", network_convergence_check},
      {8, "projection rates", projection_rates},
      {9, "invariant suites", invariant_suites},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << ", " << g(secs, 3)
              << " s): " << o.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
