#include "porodec/delay.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace porodec {

const char* to_string(HistoryKind k) {
  switch (k) {
    case HistoryKind::constant: return "constant";
    case HistoryKind::cubic_blend: return "cubic-blend";
    case HistoryKind::samples: return "samples";
  }
  return "?";
}

HistoryKind parse_history_kind(const std::string& s) {
  if (s == "constant") return HistoryKind::constant;
  if (s == "cubic-blend" || s == "cubic_blend" || s == "cubic") return HistoryKind::cubic_blend;
  if (s == "samples") return HistoryKind::samples;
  throw std::invalid_argument("unknown history '" + s + "' (expected constant, cubic-blend or samples)");
}

// -- History --------------------------------------------------------------

History History::constant(Vector p0, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("history delay must be positive");
  History h;
  h.kind_ = HistoryKind::constant;
  h.tau_ = tau;
  h.p0_ = std::move(p0);
  return h;
}

History History::cubic_blend(Vector p0, double tau, Vector slope0, Vector slope1) {
  if (!(tau > 0.0)) throw std::invalid_argument("history delay must be positive");
  if (slope0.size() != p0.size() || slope1.size() != p0.size()) {
    throw DimensionError("history slopes must match the pressure dimension");
  }
  History h;
  h.kind_ = HistoryKind::cubic_blend;
  h.tau_ = tau;
  h.p0_ = std::move(p0);
  h.slope0_ = std::move(slope0);
  h.slope1_ = std::move(slope1);
  return h;
}

History History::samples(std::vector<Vector> values, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("history delay must be positive");
  if (values.size() < 2) throw std::invalid_argument("a sampled history needs at least two samples");
  const std::size_t n = values.front().size();
  for (const auto& v : values) {
    if (v.size() != n) throw DimensionError("history samples differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (values.front()[i] != values.back()[i]) {
      throw std::invalid_argument("history samples must satisfy Phi(-tau) = Phi(0)");
    }
  }
  History h;
  h.kind_ = HistoryKind::samples;
  h.tau_ = tau;
  h.p0_ = values.back();
  h.samples_ = std::move(values);
  return h;
}

Vector History::value(double s) const {
  switch (kind_) {
    case HistoryKind::constant: return p0_;
    case HistoryKind::cubic_blend: {
      // w0 = s (s + tau)^2 / tau^2, w1 = s^2 (s + tau) / tau^2
      const double w0 = s * (s + tau_) * (s + tau_) / (tau_ * tau_);
      const double w1 = s * s * (s + tau_) / (tau_ * tau_);
      Vector v(p0_);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += w0 * slope0_[i] + w1 * slope1_[i];
      return v;
    }
    case HistoryKind::samples: {
      const double k = static_cast<double>(samples_.size() - 1);
      const double x = std::clamp((s + tau_) / tau_ * k, 0.0, k);
      const std::size_t j = std::min(static_cast<std::size_t>(x), samples_.size() - 2);
      const double w = x - static_cast<double>(j);
      Vector v(samples_[j]);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += w * (samples_[j + 1][i] - samples_[j][i]);
      return v;
    }
  }
  return p0_;
}

Vector History::derivative(double s) const {
  switch (kind_) {
    case HistoryKind::constant: return Vector(p0_.size(), 0.0);
    case HistoryKind::cubic_blend: {
      const double d0 = ((s + tau_) * (s + tau_) + 2.0 * s * (s + tau_)) / (tau_ * tau_);
      const double d1 = (2.0 * s * (s + tau_) + s * s) / (tau_ * tau_);
      Vector v(p0_.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = d0 * slope0_[i] + d1 * slope1_[i];
      return v;
    }
    case HistoryKind::samples: {
      const std::size_t segments = samples_.size() - 1;
      const double k = static_cast<double>(segments);
      const double x = std::clamp((s + tau_) / tau_ * k, 0.0, k);
      // segment ending at s: ceil(x) - 1, clamped into range
      std::size_t j = x <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(x)) - 1;
      j = std::min(j, segments - 1);
      const double h = tau_ / k;
      Vector v(p0_.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = (samples_[j + 1][i] - samples_[j][i]) / h;
      return v;
    }
  }
  return Vector(p0_.size(), 0.0);
}

// -- DelayDAE -------------------------------------------------------------

DelayDAE::DelayDAE(const TwoFieldSystem& s, double tau) : DelayDAE(s, History::constant(s.p0, tau)) {}

DelayDAE::DelayDAE(const TwoFieldSystem& s, History h) : system(&s), tau(h.tau()), history(std::move(h)) {
  if (!(tau > 0.0)) throw std::invalid_argument("delay must be positive");
  if (history.p0().size() != s.dim_p()) throw DimensionError("history dimension does not match the pressure space");
  for (std::size_t i = 0; i < s.dim_p(); ++i) {
    if (history.p0()[i] != s.p0[i]) throw std::invalid_argument("history must end in the initial pressure p0");
  }
}

Vector reduced_load(const TwoFieldSystem& s, double t) {
  Vector g = s.g.at(t);
  Vector fd = s.f.derivative(t);
  if (norm_inf(fd) == 0.0) return g;
  fd = SpdSolver(s.K_a).apply_inverse(fd);
  Vector out(g);
  s.D.multiply_add(fd, out, -1.0);
  return out;
}

// -- method of steps ------------------------------------------------------

Trajectory method_of_steps(const DelayDAE& dae, double T, std::size_t inner_steps, const CapturePolicy& policy) {
  if (inner_steps < 1) throw std::invalid_argument("inner_steps must be at least 1");
  const TwoFieldSystem& s = *dae.system;
  const double tau = dae.tau;
  const double h = tau / static_cast<double>(inner_steps);
  const std::size_t K = inner_steps;

  Trajectory tr;
  tr.scheme = Scheme::semi_explicit;
  tr.label = "method-of-steps";
  tr.tau = tau;
  tr.T = T;
  tr.steps = step_count(tau, T);
  tr.field_names = {"u", "p"};
  tr.residual_names = {"elasticity", "delay"};
  const std::size_t every = policy.every > 0 ? policy.every : 1;

  using Clock = std::chrono::steady_clock;
  const auto t_setup = Clock::now();
  const SpdSolver ka(s.K_a);
  const SparseMatrix lhs = add(s.M_c, s.K_b, 1.0, h);
  const SpdSolver lhs_solver(lhs);
  tr.setup_seconds = std::chrono::duration<double>(Clock::now() - t_setup).count();

  const std::size_t np = s.dim_p();
  // p on the inner grid of the previous and current window, K + 1 points each.
  std::vector<Vector> prev(K + 1), cur(K + 1);
  for (std::size_t j = 0; j <= K; ++j) prev[j] = dae.history.value(-tau + static_cast<double>(j) * h);
  cur[0] = s.p0;

  tr.snapshots.push_back({0, 0.0, {s.u0, s.p0}});
  const auto t_loop = Clock::now();
  Vector w(s.dim_u()), rhs(np), q(np), lhs_p(np);
  for (std::size_t n = 1; n <= tr.steps; ++n) {
    const auto t0 = Clock::now();
    const double t_start = static_cast<double>(n - 1) * tau;
    double worst_res = 0.0;
    for (std::size_t j = 1; j <= K; ++j) {
      const double t = t_start + static_cast<double>(j) * h;
      const double t_prev = t_start + static_cast<double>(j - 1) * h;
      if (n == 1) {
        q = dae.history.derivative(t - tau);
      } else {
        for (std::size_t i = 0; i < np; ++i) q[i] = (prev[j][i] - prev[j - 1][i]) / h;
      }
      // w = K_a^{-1} (f(t) - f(t - h) + h D^T q)
      w = s.f.at(t);
      s.f.add_to(t_prev, w, -1.0);
      s.D.multiply_transpose_add(q, w, h);
      ka.solve_in_place(w);
      rhs = s.M_c.apply(cur[j - 1]);
      s.g.add_to(t, rhs, h);
      s.D.multiply_add(w, rhs, -1.0);
      cur[j] = rhs;
      lhs_solver.solve_in_place(cur[j]);
      if (policy.record_steps) {
        lhs.multiply(cur[j], lhs_p);
        double r = 0.0, nb = 0.0;
        for (std::size_t i = 0; i < np; ++i) {
          r += (rhs[i] - lhs_p[i]) * (rhs[i] - lhs_p[i]);
          nb += rhs[i] * rhs[i];
        }
        worst_res = std::max(worst_res, std::sqrt(r) / (1.0 + std::sqrt(nb)));
      }
      const double m = norm_inf(cur[j]);
      if (!(m <= kBlowUp)) throw DivergenceDetected(n, t, m);
    }
    const double tn = static_cast<double>(n) * tau;
    // u at the window end from the delayed pressure p(t_n - tau) = prev window end.
    Vector rhs_u = s.f.at(tn);
    s.D.multiply_transpose_add(cur[0], rhs_u);
    Vector u = rhs_u;
    ka.solve_in_place(u);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const double mu = norm_inf(u);
    if (!(mu <= kBlowUp)) throw DivergenceDetected(n, tn, mu);
    if (policy.record_steps) {
      Vector au = s.K_a.apply(u);
      double r = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < au.size(); ++i) {
        r += (rhs_u[i] - au[i]) * (rhs_u[i] - au[i]);
        nb += rhs_u[i] * rhs_u[i];
      }
      tr.times.push_back(tn);
      tr.field_max.push_back({mu, norm_inf(cur[K])});
      tr.field_l2.push_back({norm2(u), norm2(cur[K])});
      tr.residuals.push_back({std::sqrt(r) / (1.0 + std::sqrt(nb)), worst_res});
      tr.step_seconds.push_back(secs);
    }
    if (n % every == 0 || n == tr.steps) tr.snapshots.push_back({n, tn, {u, cur[K]}});
    std::swap(prev, cur);
    cur[0] = prev[K];
  }
  tr.loop_seconds = std::chrono::duration<double>(Clock::now() - t_loop).count();
  return tr;
}

// -- stability and splicing -----------------------------------------------

const char* to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::marginal: return "marginal";
    case Stability::unstable: return "unstable";
  }
  return "?";
}

StabilityVerdict classify(double rho) {
  StabilityVerdict v;
  v.rho = rho;
  v.margin = std::abs(rho - 1.0);
  if (v.margin <= kMarginalBand) {
    v.classification = Stability::marginal;
  } else {
    v.classification = rho < 1.0 ? Stability::stable : Stability::unstable;
  }
  return v;
}

StabilityVerdict stability_test(const DelayDAE& dae) {
  const TwoFieldSystem& s = *dae.system;
  const SpdSolver ka(s.K_a);
  const SpdSolver mc(s.M_c);
  LinearOperator op = [&](std::span<const double> x, std::span<double> y) {
    Vector w = s.D.apply_transpose(x);
    ka.solve_in_place(w);
    s.D.multiply(w, y);
    mc.solve_in_place(y);
  };
  return classify(spectral_radius(op, s.dim_p(), 1e-12, 100000));
}

Vector splicing_residual(const DelayDAE& dae, const Vector& g_tilde0) {
  const TwoFieldSystem& s = *dae.system;
  if (g_tilde0.size() != s.dim_p()) throw DimensionError("g_tilde has the wrong dimension");
  Vector r = s.M_c.apply(dae.history.derivative(0.0));
  s.K_b.multiply_add(dae.history.value(0.0), r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= g_tilde0[i];
  Vector back = dae.history.derivative(-dae.tau);
  if (norm_inf(back) != 0.0) {
    Vector w = s.D.apply_transpose(back);
    w = SpdSolver(s.K_a).apply_inverse(w);
    s.D.multiply_add(w, r);
  }
  return r;
}

double splicing_check(const DelayDAE& dae, const Vector& g_tilde0) { return norm2(splicing_residual(dae, g_tilde0)); }

double splicing_check(const DelayDAE& dae) { return splicing_check(dae, reduced_load(*dae.system, 0.0)); }

History splicing_history(const TwoFieldSystem& s, double tau) {
  // M_c v = g_tilde(0) - K_b p0 with Phi'(-tau) = 0.
  Vector v = reduced_load(s, 0.0);
  s.K_b.multiply_add(s.p0, v, -1.0);
  v = SpdSolver(s.M_c).apply_inverse(v);
  return History::cubic_blend(s.p0, tau, std::move(v), Vector(s.dim_p(), 0.0));
}

// -- gap experiment -------------------------------------------------------

namespace {

double c_norm_diff(const SparseMatrix& mc, const Vector& a, const Vector& b) {
  Vector d(a);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= b[i];
  return std::sqrt(std::max(0.0, dot(d, mc.apply(d))));
}

}  // namespace

GapTable delay_gap_experiment(const TwoFieldSystem& s, const std::vector<double>& taus, std::size_t fine_factor,
                              double T, HistoryKind history) {
  if (fine_factor < 1) throw std::invalid_argument("fine_factor must be at least 1");
  if (history == HistoryKind::samples) throw std::invalid_argument("the gap experiment needs a constant or cubic-blend history");
  GapTable table;
  table.fine_factor = fine_factor;
  table.T = T;
  table.history = history;
  for (double tau : taus) {
    const std::size_t n = step_count(tau, T);
    CapturePolicy ref_policy;
    ref_policy.every = fine_factor;
    ref_policy.record_steps = false;
    const Trajectory ref = integrate(s, Scheme::implicit, tau / static_cast<double>(fine_factor), T, ref_policy);
    const DelayDAE dae = history == HistoryKind::constant ? DelayDAE(s, tau) : DelayDAE(s, splicing_history(s, tau));
    CapturePolicy mos_policy;
    mos_policy.every = 1;
    mos_policy.record_steps = false;
    const Trajectory del = method_of_steps(dae, T, fine_factor, mos_policy);
    if (ref.snapshots.size() != n + 1 || del.snapshots.size() != n + 1) {
      throw std::logic_error("gap experiment: unexpected snapshot count");
    }
    GapRow row;
    row.tau = tau;
    for (std::size_t k = 0; k <= n; ++k) {
      row.gap = std::max(row.gap, c_norm_diff(s.M_c, del.snapshots[k].fields[1], ref.snapshots[k].fields[1]));
    }
    if (!table.rows.empty() && row.gap > 0.0) row.ratio = table.rows.back().gap / row.gap;
    table.rows.push_back(row);
  }
  return table;
}

void write_gap_csv(std::ostream& os, const GapTable& table) {
  os << "tau,gap,ratio\n";
  char buf[40];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.tau);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.gap);
    os << buf << ',';
    if (r.ratio) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.ratio);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace porodec
