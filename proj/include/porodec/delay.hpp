#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "porodec/models.hpp"
#include "porodec/steppers.hpp"

namespace porodec {

enum class HistoryKind { constant, cubic_blend, samples };

const char* to_string(HistoryKind k);
/// Accepts "constant", "cubic-blend" and "samples".
HistoryKind parse_history_kind(const std::string& s);

/// History function Phi on [-tau, 0] with Phi(-tau) = Phi(0) = p0.
class History {
 public:
  static History constant(Vector p0, double tau);
  /// Cubic Hermite blend Phi(s) = p0 + w0(s) slope0 + w1(s) slope1 with
  /// Phi'(0) = slope0 and Phi'(-tau) = slope1.
  static History cubic_blend(Vector p0, double tau, Vector slope0, Vector slope1);
  /// Piecewise linear through samples on a uniform grid of [-tau, 0]. The
  /// first and last samples must coincide.
  static History samples(std::vector<Vector> values, double tau);

  HistoryKind kind() const { return kind_; }
  double tau() const { return tau_; }
  const Vector& p0() const { return p0_; }

  Vector value(double s) const;
  /// For sampled histories the slope of the segment ending at s.
  Vector derivative(double s) const;

 private:
  HistoryKind kind_ = HistoryKind::constant;
  double tau_ = 0.0;
  Vector p0_;
  Vector slope0_, slope1_;
  std::vector<Vector> samples_;
};

/// Semidiscrete delay system with the delayed pressure in the elasticity
/// equation: K_a u - D^T p(t - tau) = f, M_c p' + K_b p + D u' = g.
struct DelayDAE {
  const TwoFieldSystem* system = nullptr;
  double tau = 0.0;
  History history;

  DelayDAE(const TwoFieldSystem& s, double tau);  ///< constant history
  DelayDAE(const TwoFieldSystem& s, History h);
};

/// g(t) - D K_a^{-1} f'(t).
Vector reduced_load(const TwoFieldSystem& s, double t);

/// Per-window trajectory at t_n = n tau. Fields (u, p); residual columns
/// "elasticity" and "delay" (worst inner step of the window).
Trajectory method_of_steps(const DelayDAE& dae, double T, std::size_t inner_steps,
                           const CapturePolicy& policy = {});

enum class Stability { stable, marginal, unstable };
const char* to_string(Stability s);

struct StabilityVerdict {
  double rho = 0.0;
  Stability classification = Stability::stable;
  double margin = 0.0;  ///< |rho - 1|
};

inline constexpr double kMarginalBand = 1e-6;

/// Spectral radius of M_c^{-1} D K_a^{-1} D^T and its classification.
StabilityVerdict stability_test(const DelayDAE& dae);
StabilityVerdict classify(double rho);

/// M_c Phi'(0) + K_b Phi(0) - g_tilde0 + D K_a^{-1} D^T Phi'(-tau).
Vector splicing_residual(const DelayDAE& dae, const Vector& g_tilde0);
/// Euclidean norm of splicing_residual.
double splicing_check(const DelayDAE& dae, const Vector& g_tilde0);
/// Uses g_tilde0 = reduced_load(system, 0).
double splicing_check(const DelayDAE& dae);

/// Cubic blend with Phi'(-tau) = 0 whose slope at 0 makes the splicing
/// residual vanish.
History splicing_history(const TwoFieldSystem& s, double tau);

struct GapRow {
  double tau = 0.0;
  double gap = 0.0;                 ///< max over t_n of ||p_delay - p||_c
  std::optional<double> ratio;      ///< gap(previous tau) / gap(this tau)
};

struct GapTable {
  std::size_t fine_factor = 0;
  double T = 0.0;
  HistoryKind history = HistoryKind::constant;
  std::vector<GapRow> rows;
};

/// For each tau: implicit Euler on the original system at tau / fine_factor
/// against the method of steps with fine_factor inner steps.
GapTable delay_gap_experiment(const TwoFieldSystem& s, const std::vector<double>& taus, std::size_t fine_factor,
                              double T, HistoryKind history = HistoryKind::constant);

/// CSV: tau, gap, ratio (empty for the first row).
void write_gap_csv(std::ostream& os, const GapTable& table);

}  // namespace porodec
