#include "porodec/studies.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace porodec {

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Eoc compute_eoc(const std::vector<double>& errors, const std::vector<double>& params) {
  if (errors.size() != params.size()) throw DimensionError("compute_eoc: errors and params differ in length");
  if (errors.size() < 2) throw std::invalid_argument("compute_eoc: need at least two points");
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i])) {
      throw std::invalid_argument("compute_eoc: errors must be positive and finite");
    }
    if (!(params[i] > 0.0)) throw std::invalid_argument("compute_eoc: params must be positive");
    if (i > 0 && !(params[i] < params[i - 1])) {
      throw std::invalid_argument("compute_eoc: params must be strictly decreasing");
    }
  }
  Eoc out;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    out.pairwise.push_back(std::log(errors[i] / errors[i + 1]) / std::log(params[i] / params[i + 1]));
  }
  const double n = static_cast<double>(errors.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const double x = std::log(params[i]), y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.least_squares = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return out;
}

double energy_norm(const SparseMatrix& m, std::span<const double> x) {
  if (m.rows() != x.size() || m.cols() != x.size()) throw DimensionError("energy_norm: dimension mismatch");
  const Vector mx = m.apply(x);
  const double q = dot(x, mx);
  double xx = 0.0;
  for (double v : x) xx += v * v;
  if (std::abs(q) <= 1e-14 * xx) return 0.0;
  if (q < 0.0) throw std::domain_error("energy_norm: matrix is not positive on this vector");
  return std::sqrt(q);
}

double energy_norm(const TwoFieldSystem& s, std::span<const double> x, NormKind which) {
  switch (which) {
    case NormKind::a: return energy_norm(s.K_a, x);
    case NormKind::b: return energy_norm(s.K_b, x);
    case NormKind::c: return energy_norm(s.M_c, x);
    case NormKind::y: break;
  }
  throw std::invalid_argument("energy_norm: the two-field system has no flux norm");
}

double energy_norm(const NetworkSystem& s, std::span<const double> x, NormKind which) {
  switch (which) {
    case NormKind::a: return energy_norm(s.K_a, x);
    case NormKind::c: return energy_norm(s.M_c, x);
    case NormKind::y: return energy_norm(s.M_y, x);
    case NormKind::b: break;
  }
  throw std::invalid_argument("energy_norm: the network system has no b-norm");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::size_t ratio_count(double coarse, double fine, const char* what) {
  const double r = coarse / fine;
  const double k = std::round(r);
  if (k < 1.0 || std::abs(r - k) > 1e-9 * r) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(coarse) + " is not a multiple of " +
                                std::to_string(fine));
  }
  return static_cast<std::size_t>(k);
}

Vector difference(const Vector& a, const Vector& b) {
  Vector d(a);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= b[i];
  return d;
}

double relative_gap(double a, double b) {
  const double m = std::max(std::abs(a), std::abs(b));
  return m == 0.0 ? 0.0 : std::abs(a - b) / m;
}

CapturePolicy final_only(std::size_t every = static_cast<std::size_t>(1) << 40) { return {every, false}; }

}  // namespace

ConvergenceSpec convergence_spec(const Config& c) {
  ConvergenceSpec spec;
  for (double v : c.list("study.mesh_ladder")) spec.mesh_ladder.push_back(std::lround(v));
  spec.tau_ladder = c.list("study.tau_ladder");
  spec.ref_n = c.integer("study.ref_n");
  spec.ref_tau = c.number("study.ref_tau");
  spec.T = c.number_or("study.T", c.number_or("time.T", 1.0));
  return spec;
}

ConvergenceResult convergence_study(const Config& base, const ConvergenceSpec& spec) {
  if (spec.mesh_ladder.size() < 2 || spec.tau_ladder.size() < 2) {
    throw std::invalid_argument("convergence study needs at least two meshes and two step sizes");
  }
  std::vector<long> meshes = spec.mesh_ladder;
  std::vector<double> taus = spec.tau_ladder;
  for (std::size_t i = 1; i < meshes.size(); ++i) {
    if (meshes[i] <= meshes[i - 1]) throw std::invalid_argument("mesh ladder must be increasing");
  }
  for (std::size_t i = 1; i < taus.size(); ++i) {
    if (taus[i] >= taus[i - 1]) throw std::invalid_argument("tau ladder must be decreasing");
  }
  for (long n : meshes) {
    if (n < 1 || spec.ref_n % n != 0) {
      throw std::invalid_argument("mesh ladder is not nested in the reference mesh (n = " + std::to_string(n) +
                                  ", ref_n = " + std::to_string(spec.ref_n) + ")");
    }
  }
  if (spec.ref_n < 2 * meshes.back()) throw std::invalid_argument("reference mesh must be at least 2x finer");
  if (spec.ref_tau * 4.0 > taus.back() * (1.0 + 1e-12)) {
    throw std::invalid_argument("reference step must be at least 4x smaller");
  }
  if (base.get_or("mesh.domain", "square") != "square") {
    throw std::invalid_argument("convergence study needs the plain square domain");
  }
  const std::size_t ref_every = ratio_count(taus.back(), spec.ref_tau, "tau ladder");
  for (double tau : taus) ratio_count(tau, taus.back(), "tau ladder");

  ConvergenceResult result;
  Config ref_cfg = base;
  ref_cfg.set("mesh.n", std::to_string(spec.ref_n));
  const TwoFieldSystem ref = build_two_field(ref_cfg);
  const auto t_ref = Clock::now();
  const Trajectory ref_tr = integrate(ref, Scheme::implicit, spec.ref_tau, spec.T, {ref_every, false});
  result.reference_seconds = seconds_since(t_ref);
  // reference states on the finest study grid: snapshot k sits at k * taus.back()
  const auto& ref_final = ref_tr.final_state();
  const double ref_u_a = energy_norm(ref.K_a, ref_final.fields[0]);
  const double ref_p_c = energy_norm(ref.M_c, ref_final.fields[1]);

  std::vector<std::unique_ptr<TwoFieldSystem>> systems;
  std::vector<SparseMatrix> pu, pp;
  for (long n : meshes) {
    Config c = base;
    c.set("mesh.n", std::to_string(n));
    systems.push_back(std::make_unique<TwoFieldSystem>(build_two_field(c)));
    const TwoFieldSystem& s = *systems.back();
    pu.push_back(transfer_matrix(*s.mesh, s.u_map, *ref.mesh, ref.u_map));
    pp.push_back(transfer_matrix(*s.mesh, s.p_map, *ref.mesh, ref.p_map));
  }

  const Scheme schemes[2] = {Scheme::implicit, Scheme::semi_explicit};
  const std::size_t count = meshes.size() * taus.size() * 2;
  result.records.resize(count);
  parallel_for(count, spec.threads, [&](std::size_t idx) {
    const std::size_t mi = idx / (taus.size() * 2);
    const std::size_t ti = (idx / 2) % taus.size();
    const Scheme scheme = schemes[idx % 2];
    const TwoFieldSystem& s = *systems[mi];
    const double tau = taus[ti];
    const std::size_t stride = ratio_count(tau, taus.back(), "tau ladder");
    const auto t0 = Clock::now();
    const Trajectory tr = integrate(s, scheme, tau, spec.T, {1, false});
    ErrorRecord rec;
    rec.seconds = seconds_since(t0);
    rec.n = meshes[mi];
    rec.h = 1.0 / static_cast<double>(meshes[mi]);
    rec.tau = tau;
    rec.scheme = scheme;
    double acc = 0.0, acc_ref = 0.0;
    for (std::size_t k = 1; k < tr.snapshots.size(); ++k) {
      const auto& snap = tr.snapshots[k];
      const Vector& p_ref = ref_tr.snapshots.at(snap.step * stride).fields[1];
      const double e = energy_norm(ref.K_b, difference(pp[mi].apply(snap.fields[1]), p_ref));
      const double r = energy_norm(ref.K_b, p_ref);
      acc += tau * e * e;
      acc_ref += tau * r * r;
    }
    const auto& fin = tr.final_state();
    rec.err_u_a = energy_norm(ref.K_a, difference(pu[mi].apply(fin.fields[0]), ref_final.fields[0])) / ref_u_a;
    rec.err_p_c = energy_norm(ref.M_c, difference(pp[mi].apply(fin.fields[1]), ref_final.fields[1])) / ref_p_c;
    rec.err_p_b_accum = std::sqrt(acc / acc_ref);
    result.records[idx] = rec;
  });

  auto pick = [&](std::size_t mi, std::size_t ti, Scheme sc) -> const ErrorRecord& {
    return result.records[(mi * taus.size() + ti) * 2 + (sc == Scheme::implicit ? 0 : 1)];
  };
  for (Scheme sc : schemes) {
    std::vector<double> ep, eu, hs;
    for (std::size_t ti = 0; ti < taus.size(); ++ti) ep.push_back(pick(meshes.size() - 1, ti, sc).err_p_c);
    for (std::size_t mi = 0; mi < meshes.size(); ++mi) {
      eu.push_back(pick(mi, taus.size() - 1, sc).err_u_a);
      hs.push_back(1.0 / static_cast<double>(meshes[mi]));
    }
    (sc == Scheme::implicit ? result.eoc_tau_implicit : result.eoc_tau_semi) = compute_eoc(ep, taus);
    (sc == Scheme::implicit ? result.eoc_h_implicit : result.eoc_h_semi) = compute_eoc(eu, hs);
  }
  for (std::size_t mi = 0; mi < meshes.size(); ++mi) {
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
      const auto& a = pick(mi, ti, Scheme::implicit);
      const auto& b = pick(mi, ti, Scheme::semi_explicit);
      result.max_scheme_gap = std::max({result.max_scheme_gap, relative_gap(a.err_u_a, b.err_u_a),
                                        relative_gap(a.err_p_c, b.err_p_c),
                                        relative_gap(a.err_p_b_accum, b.err_p_b_accum)});
    }
  }
  return result;
}

// -- sweep ----------------------------------------------------------------

namespace {

double stacked_relative_error(const Snapshot& a, const Snapshot& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t f = 0; f < a.fields.size(); ++f) {
    for (std::size_t i = 0; i < a.fields[f].size(); ++i) {
      const double d = a.fields[f][i] - ref.fields[f][i];
      num += d * d;
      den += ref.fields[f][i] * ref.fields[f][i];
    }
  }
  return std::sqrt(num) / std::sqrt(den);
}

}  // namespace

SweepResult coupling_sweep(const std::vector<double>& omegas, const std::vector<double>& taus, double T, double p0,
                           unsigned threads) {
  if (omegas.empty() || taus.empty()) throw std::invalid_argument("coupling sweep needs omegas and taus");
  SweepResult result;
  result.taus = taus;
  result.reference_tau = *std::min_element(taus.begin(), taus.end()) / 64.0;
  result.records.resize(omegas.size() * taus.size());
  parallel_for(omegas.size(), threads, [&](std::size_t oi) {
    const ToyTwoField toy = build_toy(omegas[oi], p0);
    const double rho = coupling_constants(toy.system).rho;
    const Trajectory ref = integrate(toy.system, Scheme::implicit, result.reference_tau, T, final_only());
    for (std::size_t ti = 0; ti < taus.size(); ++ti) {
      SweepRecord rec;
      rec.omega = omegas[oi];
      rec.tau = taus[ti];
      rec.rho = rho;
      try {
        const Trajectory tr = integrate(toy.system, Scheme::semi_explicit, taus[ti], T, final_only());
        rec.error = stacked_relative_error(tr.final_state(), ref.final_state());
        if (!std::isfinite(rec.error)) {
          rec.error = kErrorCap;
          rec.diverged = true;
        }
      } catch (const DivergenceDetected&) {
        rec.error = kErrorCap;
        rec.diverged = true;
      }
      rec.failed = rec.diverged || rec.error > 1.0;
      result.records[oi * taus.size() + ti] = rec;
    }
  });
  std::vector<std::size_t> order(omegas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return omegas[a] < omegas[b]; });
  for (std::size_t ti = 0; ti < taus.size(); ++ti) {
    std::optional<double> last;
    for (std::size_t oi : order) {
      if (result.records[oi * taus.size() + ti].failed) break;
      last = omegas[oi];
    }
    result.boundary.push_back(last);
  }
  return result;
}

// -- runtime --------------------------------------------------------------

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

RuntimeTable runtime_benchmark(const Config& base, const std::vector<int>& sizes, std::size_t reps, double T) {
  if (reps < 1) throw std::invalid_argument("runtime benchmark needs at least one repetition");
  RuntimeTable table;
  table.reps = reps;
  table.T = T;
  for (int k : sizes) {
    if (k < 1 || k > 10) throw std::invalid_argument("runtime sizes must lie in 1..10");
    Config c = base;
    const long n = 1L << k;
    const double tau = 1.0 / static_cast<double>(n);
    c.set("mesh.n", std::to_string(n));
    RuntimeRow row;
    row.k = k;
    const auto t0 = Clock::now();
    const NetworkSystem s = build_network(c);
    row.assembly_seconds = seconds_since(t0);
    std::vector<double> imp, semi, imp_loop, semi_loop;
    const std::size_t steps = step_count(tau, T);
    for (std::size_t r = 0; r < reps; ++r) {
      // alternate the order so neither scheme always runs on a warm cache
      for (int pass = 0; pass < 2; ++pass) {
        const Scheme sc = (pass == static_cast<int>(r % 2)) ? Scheme::implicit : Scheme::semi_explicit;
        const Trajectory tr = integrate(s, sc, tau, T, {0, r == 0});
        (sc == Scheme::implicit ? imp : semi).push_back(tr.solve_seconds());
        (sc == Scheme::implicit ? imp_loop : semi_loop).push_back(tr.loop_seconds);
        if (r == 0) row.max_residual = std::max(row.max_residual, tr.max_residual());
      }
    }
    row.implicit_seconds = median(imp);
    row.semi_seconds = median(semi);
    row.implicit_loop_seconds = median(imp_loop);
    row.semi_loop_seconds = median(semi_loop);
    row.implicit_per_step = row.implicit_seconds / static_cast<double>(steps);
    row.semi_per_step = row.semi_seconds / static_cast<double>(steps);
    row.reduction_percent = 100.0 * (row.implicit_seconds - row.semi_seconds) / row.implicit_seconds;
    table.rows.push_back(row);
  }
  return table;
}

// -- network convergence --------------------------------------------------

NetworkConvergenceResult network_convergence(const Config& base, const std::vector<long>& ladder, long ref_n,
                                             double ref_tau, double T, unsigned threads) {
  if (ladder.size() < 2) throw std::invalid_argument("network convergence needs at least two meshes");
  if (base.get_or("mesh.domain", "square") != "square") {
    throw std::invalid_argument("network convergence needs the plain square domain");
  }
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] < 1 || ref_n % ladder[i] != 0) throw std::invalid_argument("mesh ladder is not nested in the reference mesh");
    if (i > 0 && ladder[i] <= ladder[i - 1]) throw std::invalid_argument("mesh ladder must be increasing");
  }
  Config ref_cfg = base;
  ref_cfg.set("mesh.n", std::to_string(ref_n));
  const NetworkSystem ref = build_network(ref_cfg);
  const Trajectory ref_tr = integrate(ref, Scheme::implicit, ref_tau, T, final_only());
  const auto& rf = ref_tr.final_state().fields;
  const std::size_t m = ref.m;

  std::vector<std::unique_ptr<NetworkSystem>> systems;
  std::vector<SparseMatrix> pu, pq;
  for (long n : ladder) {
    Config c = base;
    c.set("mesh.n", std::to_string(n));
    systems.push_back(std::make_unique<NetworkSystem>(build_network(c)));
    pu.push_back(transfer_matrix(*systems.back()->mesh, systems.back()->u_map, *ref.mesh, ref.u_map));
    pq.push_back(transfer_matrix(*systems.back()->mesh, systems.back()->q_map, *ref.mesh, ref.q_map));
  }

  NetworkConvergenceResult result;
  const Scheme schemes[2] = {Scheme::implicit, Scheme::semi_explicit};
  result.records.resize(ladder.size() * 2);
  parallel_for(result.records.size(), threads, [&](std::size_t idx) {
    const std::size_t mi = idx / 2;
    const Scheme sc = schemes[idx % 2];
    const double h = 1.0 / static_cast<double>(ladder[mi]);
    const Trajectory tr = integrate(*systems[mi], sc, h, T, final_only());
    const auto& f = tr.final_state().fields;
    NetworkErrorRecord rec;
    rec.n = ladder[mi];
    rec.h = h;
    rec.tau = h;
    rec.scheme = sc;
    rec.err_u_a = energy_norm(ref.K_a, difference(pu[mi].apply(f[0]), rf[0])) / energy_norm(ref.K_a, rf[0]);
    rec.combined = rec.err_u_a;
    for (std::size_t i = 0; i < m; ++i) {
      const Vector& pr = rf[1 + m + i];
      const double e = energy_norm(ref.M_c, difference(pq[mi].apply(f[1 + m + i]), pr)) / energy_norm(ref.M_c, pr);
      rec.err_p_c.push_back(e);
      rec.combined += e;
    }
    result.records[idx] = rec;
  });
  for (Scheme sc : schemes) {
    std::vector<double> e, hs;
    for (std::size_t mi = 0; mi < ladder.size(); ++mi) {
      e.push_back(result.records[mi * 2 + (sc == Scheme::implicit ? 0 : 1)].combined);
      hs.push_back(1.0 / static_cast<double>(ladder[mi]));
    }
    (sc == Scheme::implicit ? result.eoc_implicit : result.eoc_semi) = compute_eoc(e, hs);
  }
  return result;
}

// -- CSV ------------------------------------------------------------------

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_convergence_csv(std::ostream& os, const ConvergenceResult& r) {
  os << "n,h,tau,scheme,err_u_a,err_p_c,err_p_b_accum\n";
  for (const auto& e : r.records) {
    os << e.n << ',' << format_double(e.h) << ',' << format_double(e.tau) << ',' << to_string(e.scheme) << ','
       << format_double(e.err_u_a) << ',' << format_double(e.err_p_c) << ',' << format_double(e.err_p_b_accum) << '\n';
  }
}

void write_convergence_timing_csv(std::ostream& os, const ConvergenceResult& r) {
  os << "n,tau,scheme,seconds\n";
  for (const auto& e : r.records) {
    os << e.n << ',' << format_double(e.tau) << ',' << to_string(e.scheme) << ',' << format_double(e.seconds) << '\n';
  }
}

void write_eoc_csv(std::ostream& os, const ConvergenceResult& r) {
  os << "scheme,quantity,param,eoc\n";
  auto rows = [&](const char* scheme, const char* quantity, const Eoc& e) {
    for (std::size_t i = 0; i < e.pairwise.size(); ++i) {
      os << scheme << ',' << quantity << ",pair" << i + 1 << ',' << format_double(e.pairwise[i]) << '\n';
    }
    os << scheme << ',' << quantity << ",least_squares," << format_double(e.least_squares) << '\n';
  };
  rows("implicit", "err_p_c_vs_tau", r.eoc_tau_implicit);
  rows("semi-explicit", "err_p_c_vs_tau", r.eoc_tau_semi);
  rows("implicit", "err_u_a_vs_h", r.eoc_h_implicit);
  rows("semi-explicit", "err_u_a_vs_h", r.eoc_h_semi);
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "omega,tau,error,diverged,failed,rho,weak_coupling_bound,stability_bound\n";
  for (const auto& s : r.records) {
    os << format_double(s.omega) << ',' << format_double(s.tau) << ',' << format_double(s.error) << ','
       << (s.diverged ? 1 : 0) << ',' << (s.failed ? 1 : 0) << ',' << format_double(s.rho) << ','
       << format_double(kWeakCouplingBound) << ',' << format_double(kStabilityBound) << '\n';
  }
}

void write_runtime_csv(std::ostream& os, const RuntimeTable& t) {
  os << "k,h,tau,assembly_s,implicit_s,semi_explicit_s,implicit_loop_s,semi_explicit_loop_s,implicit_per_step_s,"
        "semi_explicit_per_step_s,reduction_percent\n";
  for (const auto& r : t.rows) {
    const double h = std::ldexp(1.0, -r.k);
    os << r.k << ',' << format_double(h) << ',' << format_double(h) << ',' << format_double(r.assembly_seconds) << ','
       << format_double(r.implicit_seconds) << ',' << format_double(r.semi_seconds) << ','
       << format_double(r.implicit_loop_seconds) << ',' << format_double(r.semi_loop_seconds) << ','
       << format_double(r.implicit_per_step) << ',' << format_double(r.semi_per_step) << ','
       << format_double(r.reduction_percent) << '\n';
  }
}

void write_network_convergence_csv(std::ostream& os, const NetworkConvergenceResult& r) {
  os << "n,h,tau,scheme,err_u_a";
  const std::size_t m = r.records.empty() ? 0 : r.records.front().err_p_c.size();
  for (std::size_t i = 1; i <= m; ++i) os << ",err_p" << i << "_c";
  os << ",combined\n";
  for (const auto& e : r.records) {
    os << e.n << ',' << format_double(e.h) << ',' << format_double(e.tau) << ',' << to_string(e.scheme) << ','
       << format_double(e.err_u_a);
    for (double v : e.err_p_c) os << ',' << format_double(v);
    os << ',' << format_double(e.combined) << '\n';
  }
}

}  // namespace porodec
