#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "porodec/models.hpp"
#include "porodec/solvers.hpp"

namespace porodec {

enum class Scheme { implicit, semi_explicit };

const char* to_string(Scheme s);
/// Accepts "implicit" and "semi-explicit".
Scheme parse_scheme(const std::string& s);

/// Thrown when a state max-norm exceeds kBlowUp or turns non-finite.
class DivergenceDetected : public std::runtime_error {
 public:
  DivergenceDetected(std::size_t step, double t, double norm);
  std::size_t step() const { return step_; }
  double time() const { return t_; }
  double norm() const { return norm_; }

 private:
  std::size_t step_;
  double t_;
  double norm_;
};

/// A solver failure inside a time step.
class StepError : public std::runtime_error {
 public:
  StepError(std::size_t step, const std::string& what);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

inline constexpr double kBlowUp = 1e12;

struct Snapshot {
  std::size_t step = 0;
  double t = 0.0;
  std::vector<Vector> fields;  ///< (u, p) or (u, y_1..y_m, p_1..p_m)
};

/// Which parts of a run are kept.
struct CapturePolicy {
  /// Keep every k-th state (0 picks the default: every step for algebraic
  /// systems, ceil(N / 200) for finite element systems). Step 0 and the
  /// final step are always kept.
  std::size_t every = 0;
  /// Keep per-step norms, residuals and wall times.
  bool record_steps = true;
  /// When positive, a max-norm above growth_limit * max(1, initial max-norm)
  /// also counts as divergence. The absolute kBlowUp guard always applies.
  double growth_limit = 0.0;
};

struct Trajectory {
  Scheme scheme = Scheme::semi_explicit;
  std::string label;  ///< "implicit", "semi-explicit" or "method-of-steps"
  double tau = 0.0;
  double T = 0.0;
  std::size_t steps = 0;
  std::vector<std::string> field_names;
  std::vector<std::string> residual_names;

  // Per-step records for steps 1..N (empty when not recorded).
  std::vector<double> times;
  std::vector<std::vector<double>> field_max;
  std::vector<std::vector<double>> field_l2;
  std::vector<std::vector<double>> residuals;
  std::vector<double> step_seconds;

  std::vector<Snapshot> snapshots;
  double setup_seconds = 0.0;  ///< factorizations
  double loop_seconds = 0.0;   ///< time stepping

  const Snapshot& final_state() const { return snapshots.back(); }
  double max_residual() const;
  double solve_seconds() const { return setup_seconds + loop_seconds; }
};

/// Number of steps T / tau; throws std::invalid_argument unless it is an
/// integer within 1e-12 relative.
std::size_t step_count(double tau, double T);

/// Two-field integrator with factorizations built once and reused.
class TwoFieldStepper {
 public:
  TwoFieldStepper(const TwoFieldSystem& system, Scheme scheme, double tau, double cg_tol = 1e-12);

  /// Advances (u, p) from t to t + tau. `residuals` receives the relative
  /// residuals of the elasticity and pressure equations.
  void step(double t, const Vector& u, const Vector& p, Vector& u_next, Vector& p_next,
            std::vector<double>* residuals = nullptr) const;

  Scheme scheme() const { return scheme_; }
  std::size_t last_iterations() const { return last_iterations_; }

 private:
  const TwoFieldSystem* sys_;
  Scheme scheme_;
  double tau_;
  double cg_tol_;
  SparseMatrix parabolic_;  // M_c + tau K_b
  SpdSolver ka_, parabolic_solver_;
  mutable std::size_t last_iterations_ = 0;
};

/// Network integrator. States are (u, y_1..y_m, p_1..p_m).
class NetworkStepper {
 public:
  NetworkStepper(const NetworkSystem& system, Scheme scheme, double tau, double cg_tol = 1e-11);

  void step(double t, const std::vector<Vector>& state, std::vector<Vector>& next,
            std::vector<double>* residuals = nullptr) const;

  std::size_t last_iterations() const { return last_iterations_; }

 private:
  void apply_pressure_operator(std::span<const double> p, std::span<double> out, bool coupled) const;

  const NetworkSystem* sys_;
  Scheme scheme_;
  double tau_;
  double cg_tol_;
  SpdSolver ka_, my_;
  mutable std::size_t last_iterations_ = 0;
};

Trajectory integrate(const TwoFieldSystem& system, Scheme scheme, double tau, double T,
                     const CapturePolicy& policy = {});
Trajectory integrate(const NetworkSystem& system, Scheme scheme, double tau, double T,
                     const CapturePolicy& policy = {});

/// CSV: t, <field>_max, <field>_l2 per field. One row per step 1..N.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);
/// CSV: t, one column per discrete equation.
void write_residual_csv(std::ostream& os, const Trajectory& tr);
/// CSV: step, t, seconds.
void write_timing_csv(std::ostream& os, const Trajectory& tr);

}  // namespace porodec
