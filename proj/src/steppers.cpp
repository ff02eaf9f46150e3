#include "porodec/steppers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace porodec {

const char* to_string(Scheme s) { return s == Scheme::implicit ? "implicit" : "semi-explicit"; }

Scheme parse_scheme(const std::string& s) {
  if (s == "implicit") return Scheme::implicit;
  if (s == "semi-explicit" || s == "semi_explicit") return Scheme::semi_explicit;
  throw std::invalid_argument("unknown scheme '" + s + "' (expected implicit or semi-explicit)");
}

DivergenceDetected::DivergenceDetected(std::size_t step, double t, double norm)
    : std::runtime_error("diverged at step " + std::to_string(step) + " (t = " + std::to_string(t) +
                         "), max-norm " + std::to_string(norm)),
      step_(step),
      t_(t),
      norm_(norm) {}

StepError::StepError(std::size_t step, const std::string& what)
    : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

double Trajectory::max_residual() const {
  double m = 0.0;
  for (const auto& r : residuals)
    for (double v : r) m = std::max(m, v);
  return m;
}

std::size_t step_count(double tau, double T) {
  if (!(tau > 0.0) || !(T > 0.0)) throw std::invalid_argument("tau and T must be positive");
  const double n = T / tau;
  const double r = std::round(n);
  if (r < 1.0 || std::abs(n - r) > 1e-12 * std::max(1.0, n)) {
    throw std::invalid_argument("T / tau = " + std::to_string(n) + " is not an integer");
  }
  return static_cast<std::size_t>(r);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ||b - A x|| / (1 + ||b||) with `ax` = A x.
double relative_residual(std::span<const double> b, std::span<const double> ax) {
  double r = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    r += (b[i] - ax[i]) * (b[i] - ax[i]);
    nb += b[i] * b[i];
  }
  return std::sqrt(r) / (1.0 + std::sqrt(nb));
}

}  // namespace

// -- two-field ------------------------------------------------------------

TwoFieldStepper::TwoFieldStepper(const TwoFieldSystem& system, Scheme scheme, double tau, double cg_tol)
    : sys_(&system), scheme_(scheme), tau_(tau), cg_tol_(cg_tol) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  parabolic_ = add(system.M_c, system.K_b, 1.0, tau);
  ka_ = SpdSolver(system.K_a);
  parabolic_solver_ = SpdSolver(parabolic_);
}

void TwoFieldStepper::step(double t, const Vector& u, const Vector& p, Vector& u_next, Vector& p_next,
                           std::vector<double>* residuals) const {
  const TwoFieldSystem& s = *sys_;
  const double t1 = t + tau_;
  const std::size_t np = s.dim_p();

  if (scheme_ == Scheme::semi_explicit) {
    // (i) elasticity with the lagged pressure.
    Vector rhs_u = s.f.at(t1);
    s.D.multiply_transpose_add(p, rhs_u);
    u_next = rhs_u;
    ka_.solve_in_place(u_next);
    last_iterations_ = 0;
  } else {
    // Pressure Schur complement M_c + tau K_b + D K_a^{-1} D^T.
    Vector ka_f = s.f.at(t1);
    ka_.solve_in_place(ka_f);
    Vector b = s.M_c.apply(p);
    s.D.multiply_add(u, b);
    s.g.add_to(t1, b, tau_);
    s.D.multiply_add(ka_f, b, -1.0);

    Vector w(s.dim_u());
    LinearOperator schur = [&](std::span<const double> x, std::span<double> y) {
      parabolic_.multiply(x, y);
      std::fill(w.begin(), w.end(), 0.0);
      s.D.multiply_transpose_add(x, w);
      ka_.solve_in_place(w);
      s.D.multiply_add(w, y);
    };
    LinearOperator pre = [&](std::span<const double> r, std::span<double> z) {
      std::copy(r.begin(), r.end(), z.begin());
      parabolic_solver_.solve_in_place(z);
    };
    const SolveReport rep = conjugate_gradient(schur, b, cg_tol_, 0, p, pre);
    last_iterations_ = rep.iterations;
    p_next = rep.solution;
    Vector rhs_u = s.f.at(t1);
    s.D.multiply_transpose_add(p_next, rhs_u);
    u_next = rhs_u;
    ka_.solve_in_place(u_next);
  }

  // Pressure equation in solved form with the new displacement.
  Vector rhs_p = s.M_c.apply(p);
  Vector du(u_next);
  for (std::size_t i = 0; i < du.size(); ++i) du[i] -= u[i];
  s.D.multiply_add(du, rhs_p, -1.0);
  s.g.add_to(t1, rhs_p, tau_);
  if (scheme_ == Scheme::semi_explicit) {
    p_next = rhs_p;
    parabolic_solver_.solve_in_place(p_next);
  }

  if (residuals) {
    residuals->resize(2);
    Vector rhs_u = s.f.at(t1);
    s.D.multiply_transpose_add(scheme_ == Scheme::semi_explicit ? p : p_next, rhs_u);
    (*residuals)[0] = relative_residual(rhs_u, s.K_a.apply(u_next));
    Vector ap(np);
    parabolic_.multiply(p_next, ap);
    (*residuals)[1] = relative_residual(rhs_p, ap);
  }
}

// -- network --------------------------------------------------------------

NetworkStepper::NetworkStepper(const NetworkSystem& system, Scheme scheme, double tau, double cg_tol)
    : sys_(&system), scheme_(scheme), tau_(tau), cg_tol_(cg_tol) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  ka_ = SpdSolver(system.K_a);
  my_ = SpdSolver(system.M_y);
}

void NetworkStepper::apply_pressure_operator(std::span<const double> p, std::span<double> out, bool coupled) const {
  const NetworkSystem& s = *sys_;
  const std::size_t np = s.dim_p(), m = s.m;
  Vector w(s.dim_y());
  Vector qp(np);
  for (std::size_t i = 0; i < m; ++i) {
    auto pi = p.subspan(i * np, np);
    auto oi = out.subspan(i * np, np);
    s.M_c.multiply(pi, oi);
    std::fill(w.begin(), w.end(), 0.0);
    s.D_hat[i].multiply_transpose_add(pi, w);
    my_.solve_in_place(w);
    s.D_hat[i].multiply_add(w, oi, tau_);
  }
  if (!s.beta.empty()) {
    for (std::size_t i = 0; i < m; ++i) {
      auto oi = out.subspan(i * np, np);
      for (std::size_t j = 0; j < m; ++j) {
        const double b = s.beta_at(i, j);
        if (j == i || b == 0.0) continue;
        // -tau beta_ij M_Q (p_i - p_j)
        for (std::size_t k = 0; k < np; ++k) qp[k] = p[i * np + k] - p[j * np + k];
        s.M_Q.multiply_add(qp, oi, -tau_ * b);
      }
    }
  }
  if (coupled) {
    Vector v(s.dim_u(), 0.0);
    for (std::size_t j = 0; j < m; ++j) s.D[j].multiply_transpose_add(p.subspan(j * np, np), v);
    ka_.solve_in_place(v);
    for (std::size_t i = 0; i < m; ++i) s.D[i].multiply_add(v, out.subspan(i * np, np));
  }
}

void NetworkStepper::step(double t, const std::vector<Vector>& state, std::vector<Vector>& next,
                          std::vector<double>* residuals) const {
  const NetworkSystem& s = *sys_;
  const std::size_t m = s.m, np = s.dim_p();
  const double t1 = t + tau_;
  const Vector& u = state[0];
  auto p_old = [&](std::size_t i) -> const Vector& { return state[1 + m + i]; };
  next.resize(1 + 2 * m);

  Vector p_all(m * np);
  for (std::size_t i = 0; i < m; ++i) std::copy(p_old(i).begin(), p_old(i).end(), p_all.begin() + i * np);

  Vector b(m * np);
  if (scheme_ == Scheme::semi_explicit) {
    Vector rhs_u = s.f.at(t1);
    for (std::size_t i = 0; i < m; ++i) s.D[i].multiply_transpose_add(p_old(i), rhs_u);
    next[0] = rhs_u;
    ka_.solve_in_place(next[0]);
    Vector du(next[0]);
    for (std::size_t k = 0; k < du.size(); ++k) du[k] -= u[k];
    for (std::size_t i = 0; i < m; ++i) {
      auto bi = std::span<double>(b).subspan(i * np, np);
      s.M_c.multiply(p_old(i), bi);
      s.D[i].multiply_add(du, bi, -1.0);
      s.g[i].add_to(t1, bi, tau_);
    }
  } else {
    Vector ka_f = s.f.at(t1);
    ka_.solve_in_place(ka_f);
    for (std::size_t i = 0; i < m; ++i) {
      auto bi = std::span<double>(b).subspan(i * np, np);
      s.M_c.multiply(p_old(i), bi);
      s.D[i].multiply_add(u, bi);
      s.D[i].multiply_add(ka_f, bi, -1.0);
      s.g[i].add_to(t1, bi, tau_);
    }
  }

  const bool coupled = scheme_ == Scheme::implicit;
  LinearOperator op = [&](std::span<const double> x, std::span<double> y) { apply_pressure_operator(x, y, coupled); };
  SolveReport rep;
  try {
    rep = conjugate_gradient(op, b, cg_tol_, 0, p_all);
  } catch (const SolverError& e) {
    if (e.code() == SolverErrc::not_spd) {
      throw SolverError(SolverErrc::not_spd,
                        std::string(e.what()) + " (pressure Schur complement indefinite; exchange rates too large?)",
                        e.last_residual());
    }
    throw;
  }
  last_iterations_ = rep.iterations;

  for (std::size_t i = 0; i < m; ++i) {
    next[1 + m + i].assign(rep.solution.begin() + i * np, rep.solution.begin() + (i + 1) * np);
    next[1 + i] = s.D_hat[i].apply_transpose(next[1 + m + i]);
    my_.solve_in_place(next[1 + i]);
  }
  if (coupled) {
    Vector rhs_u = s.f.at(t1);
    for (std::size_t i = 0; i < m; ++i) s.D[i].multiply_transpose_add(next[1 + m + i], rhs_u);
    next[0] = rhs_u;
    ka_.solve_in_place(next[0]);
  }

  if (residuals) {
    residuals->assign(1 + 2 * m, 0.0);
    Vector rhs_u = s.f.at(t1);
    for (std::size_t i = 0; i < m; ++i) s.D[i].multiply_transpose_add(coupled ? next[1 + m + i] : p_old(i), rhs_u);
    (*residuals)[0] = relative_residual(rhs_u, s.K_a.apply(next[0]));
    Vector du(next[0]);
    for (std::size_t k = 0; k < du.size(); ++k) du[k] -= u[k];
    for (std::size_t i = 0; i < m; ++i) {
      const Vector& pi = next[1 + m + i];
      const Vector& yi = next[1 + i];
      (*residuals)[1 + i] = relative_residual(s.D_hat[i].apply_transpose(pi), s.M_y.apply(yi));
      Vector rhs = s.M_c.apply(p_old(i));
      s.D[i].multiply_add(du, rhs, -1.0);
      s.g[i].add_to(t1, rhs, tau_);
      Vector lhs = s.M_c.apply(pi);
      s.D_hat[i].multiply_add(yi, lhs, tau_);
      for (std::size_t j = 0; j < m; ++j) {
        const double bij = s.beta_at(i, j);
        if (j == i || bij == 0.0) continue;
        Vector diff(pi);
        for (std::size_t k = 0; k < np; ++k) diff[k] -= next[1 + m + j][k];
        s.M_Q.multiply_add(diff, lhs, -tau_ * bij);
      }
      (*residuals)[1 + m + i] = relative_residual(rhs, lhs);
    }
  }
}

// -- integrate ------------------------------------------------------------

namespace {

std::size_t capture_every(const CapturePolicy& policy, std::size_t n, bool fem) {
  if (policy.every > 0) return policy.every;
  if (!fem) return 1;
  return std::max<std::size_t>(1, (n + 199) / 200);
}

void record(Trajectory& tr, std::size_t step, double t, const std::vector<Vector>& fields,
            const std::vector<double>& res, double seconds, bool record_steps, std::size_t every, double limit) {
  double worst = 0.0;
  std::vector<double> mx, l2;
  for (const auto& f : fields) {
    const double m = f.empty() ? 0.0 : norm_inf(f);
    mx.push_back(m);
    l2.push_back(norm2(f));
    if (!std::isfinite(m) || !std::isfinite(l2.back())) {
      worst = std::numeric_limits<double>::infinity();
    } else {
      worst = std::max(worst, m);
    }
  }
  if (!(worst <= limit)) throw DivergenceDetected(step, t, worst);
  if (record_steps) {
    tr.times.push_back(t);
    tr.field_max.push_back(std::move(mx));
    tr.field_l2.push_back(std::move(l2));
    tr.residuals.push_back(res);
    tr.step_seconds.push_back(seconds);
  }
  if (step % every == 0 || step == tr.steps) tr.snapshots.push_back({step, t, fields});
}

double divergence_limit(const CapturePolicy& policy, const std::vector<Vector>& initial) {
  if (!(policy.growth_limit > 0.0)) return kBlowUp;
  double scale = 1.0;
  for (const auto& f : initial) {
    if (!f.empty()) scale = std::max(scale, norm_inf(f));
  }
  return std::min(kBlowUp, policy.growth_limit * scale);
}

}  // namespace

Trajectory integrate(const TwoFieldSystem& system, Scheme scheme, double tau, double T, const CapturePolicy& policy) {
  Trajectory tr;
  tr.scheme = scheme;
  tr.label = to_string(scheme);
  tr.tau = tau;
  tr.T = T;
  tr.steps = step_count(tau, T);
  tr.field_names = {"u", "p"};
  tr.residual_names = {"elasticity", "pressure"};
  const std::size_t every = capture_every(policy, tr.steps, system.mesh != nullptr);

  const auto t_setup = Clock::now();
  const TwoFieldStepper stepper(system, scheme, tau);
  tr.setup_seconds = seconds_since(t_setup);

  tr.snapshots.push_back({0, 0.0, {system.u0, system.p0}});
  const double limit = divergence_limit(policy, tr.snapshots.front().fields);
  Vector u = system.u0, p = system.p0, u1, p1;
  std::vector<double> res;
  const auto t_loop = Clock::now();
  for (std::size_t n = 0; n < tr.steps; ++n) {
    const double t = static_cast<double>(n) * tau;
    const auto t0 = Clock::now();
    try {
      stepper.step(t, u, p, u1, p1, policy.record_steps ? &res : nullptr);
    } catch (const SolverError& e) {
      throw StepError(n + 1, e.what());
    }
    const double secs = seconds_since(t0);
    u.swap(u1);
    p.swap(p1);
    const double tn = static_cast<double>(n + 1) * tau;
    if (policy.record_steps || (n + 1) % every == 0 || n + 1 == tr.steps) {
      record(tr, n + 1, tn, {u, p}, res, secs, policy.record_steps, every, limit);
    } else {
      const double worst = std::max(norm_inf(u), norm_inf(p));
      if (!(worst <= limit)) throw DivergenceDetected(n + 1, tn, worst);
    }
  }
  tr.loop_seconds = seconds_since(t_loop);
  return tr;
}

Trajectory integrate(const NetworkSystem& system, Scheme scheme, double tau, double T, const CapturePolicy& policy) {
  Trajectory tr;
  tr.scheme = scheme;
  tr.label = to_string(scheme);
  tr.tau = tau;
  tr.T = T;
  tr.steps = step_count(tau, T);
  const std::size_t m = system.m;
  tr.field_names = {"u"};
  tr.residual_names = {"elasticity"};
  for (std::size_t i = 1; i <= m; ++i) tr.field_names.push_back("y" + std::to_string(i));
  for (std::size_t i = 1; i <= m; ++i) tr.field_names.push_back("p" + std::to_string(i));
  for (std::size_t i = 1; i <= m; ++i) tr.residual_names.push_back("flux" + std::to_string(i));
  for (std::size_t i = 1; i <= m; ++i) tr.residual_names.push_back("pressure" + std::to_string(i));
  const std::size_t every = capture_every(policy, tr.steps, system.mesh != nullptr);

  const auto t_setup = Clock::now();
  const NetworkStepper stepper(system, scheme, tau);
  tr.setup_seconds = seconds_since(t_setup);

  std::vector<Vector> state{system.u0};
  for (const auto& y : system.y0) state.push_back(y);
  for (const auto& p : system.p0) state.push_back(p);
  tr.snapshots.push_back({0, 0.0, state});
  const double limit = divergence_limit(policy, state);
  std::vector<Vector> next;
  std::vector<double> res;
  const auto t_loop = Clock::now();
  for (std::size_t n = 0; n < tr.steps; ++n) {
    const double t = static_cast<double>(n) * tau;
    const auto t0 = Clock::now();
    try {
      stepper.step(t, state, next, policy.record_steps ? &res : nullptr);
    } catch (const SolverError& e) {
      throw StepError(n + 1, e.what());
    }
    const double secs = seconds_since(t0);
    state.swap(next);
    const double tn = static_cast<double>(n + 1) * tau;
    if (policy.record_steps || (n + 1) % every == 0 || n + 1 == tr.steps) {
      record(tr, n + 1, tn, state, res, secs, policy.record_steps, every, limit);
    } else {
      double worst = 0.0;
      for (const auto& f : state) worst = std::max(worst, norm_inf(f));
      if (!(worst <= limit)) throw DivergenceDetected(n + 1, tn, worst);
    }
  }
  tr.loop_seconds = seconds_since(t_loop);
  return tr;
}

namespace {

void put(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t";
  for (const auto& f : tr.field_names) os << ',' << f << "_max," << f << "_l2";
  os << '\n';
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    put(os, tr.times[k]);
    for (std::size_t j = 0; j < tr.field_names.size(); ++j) {
      os << ',';
      put(os, tr.field_max[k][j]);
      os << ',';
      put(os, tr.field_l2[k][j]);
    }
    os << '\n';
  }
}

void write_residual_csv(std::ostream& os, const Trajectory& tr) {
  os << "t";
  for (const auto& r : tr.residual_names) os << ',' << r;
  os << '\n';
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    put(os, tr.times[k]);
    for (double v : tr.residuals[k]) {
      os << ',';
      put(os, v);
    }
    os << '\n';
  }
}

void write_timing_csv(std::ostream& os, const Trajectory& tr) {
  os << "step,t,seconds\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    os << k + 1 << ',';
    put(os, tr.times[k]);
    os << ',';
    put(os, tr.step_seconds[k]);
    os << '\n';
  }
}

}  // namespace porodec
