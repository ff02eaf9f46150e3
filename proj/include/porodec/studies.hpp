#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "porodec/config.hpp"
#include "porodec/models.hpp"
#include "porodec/steppers.hpp"

namespace porodec {

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Exceptions are rethrown on the caller, lowest index first.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

struct Eoc {
  std::vector<double> pairwise;
  double least_squares = 0.0;
};

/// Slopes of log(error) against log(param). Params must be strictly
/// decreasing and errors positive.
Eoc compute_eoc(const std::vector<double>& errors, const std::vector<double>& params);

/// sqrt(x^T M x); values with |x^T M x| <= 1e-14 ||x||^2 count as 0.
double energy_norm(const SparseMatrix& m, std::span<const double> x);

enum class NormKind { a, b, c, y };
double energy_norm(const TwoFieldSystem& s, std::span<const double> x, NormKind which);
double energy_norm(const NetworkSystem& s, std::span<const double> x, NormKind which);

// -- two-field convergence ------------------------------------------------

struct ErrorRecord {
  long n = 0;
  double h = 0.0;
  double tau = 0.0;
  Scheme scheme = Scheme::implicit;
  double err_u_a = 0.0;        ///< relative a-norm displacement error at T
  double err_p_c = 0.0;        ///< relative c-norm pressure error at T
  double err_p_b_accum = 0.0;  ///< relative sqrt(sum tau ||.||_b^2) pressure error
  double seconds = 0.0;
};

struct ConvergenceSpec {
  std::vector<long> mesh_ladder;
  std::vector<double> tau_ladder;
  long ref_n = 0;
  double ref_tau = 0.0;
  double T = 1.0;
  unsigned threads = 0;
};

struct ConvergenceResult {
  std::vector<ErrorRecord> records;  ///< mesh, then tau, then scheme order
  Eoc eoc_tau_implicit, eoc_tau_semi;  ///< err_p_c on the finest mesh
  Eoc eoc_h_implicit, eoc_h_semi;      ///< err_u_a at the finest tau
  double max_scheme_gap = 0.0;  ///< max relative difference between schemes
  double reference_seconds = 0.0;
};

/// Reads the ladders from `spec`; the remaining model keys from `base`.
ConvergenceResult convergence_study(const Config& base, const ConvergenceSpec& spec);
/// Ladders from the [study] and [time] keys of `config`.
ConvergenceSpec convergence_spec(const Config& config);

// -- coupling sweep -------------------------------------------------------

struct SweepRecord {
  double omega = 0.0;
  double tau = 0.0;
  double error = 0.0;  ///< relative final error; kErrorCap when diverged
  bool diverged = false;
  bool failed = false;  ///< diverged or error > 1
  double rho = 0.0;
};

inline constexpr double kErrorCap = 1e12;
inline constexpr double kWeakCouplingBound = 0.2046;
inline constexpr double kStabilityBound = 0.2182;

struct SweepResult {
  std::vector<SweepRecord> records;  ///< omega-major order
  std::vector<double> taus;
  std::vector<std::optional<double>> boundary;  ///< per tau: last omega before the first failure
  double reference_tau = 0.0;
};

SweepResult coupling_sweep(const std::vector<double>& omegas, const std::vector<double>& taus, double T,
                           double p0 = kToyP0, unsigned threads = 0);

// -- runtime benchmark ----------------------------------------------------

struct RuntimeRow {
  int k = 0;  ///< h = tau = 2^-k
  double assembly_seconds = 0.0;
  double implicit_seconds = 0.0;  ///< median solve time (setup + loop)
  double semi_seconds = 0.0;
  double implicit_loop_seconds = 0.0;  ///< median time-stepping loop only
  double semi_loop_seconds = 0.0;
  double implicit_per_step = 0.0;
  double semi_per_step = 0.0;
  double reduction_percent = 0.0;
  double max_residual = 0.0;
};

struct RuntimeTable {
  std::size_t reps = 0;
  double T = 0.0;
  std::vector<RuntimeRow> rows;
};

/// Runs are sequential so timings do not compete for cores.
RuntimeTable runtime_benchmark(const Config& base, const std::vector<int>& sizes, std::size_t reps, double T);

// -- network convergence --------------------------------------------------

struct NetworkErrorRecord {
  long n = 0;
  double h = 0.0;
  double tau = 0.0;
  Scheme scheme = Scheme::implicit;
  double err_u_a = 0.0;
  std::vector<double> err_p_c;  ///< per network
  double combined = 0.0;        ///< err_u_a + sum of err_p_c
};

struct NetworkConvergenceResult {
  std::vector<NetworkErrorRecord> records;
  Eoc eoc_implicit, eoc_semi;
};

/// Ladder with tau = h on the plain square; reference by the implicit scheme.
NetworkConvergenceResult network_convergence(const Config& base, const std::vector<long>& ladder, long ref_n,
                                             double ref_tau, double T, unsigned threads = 0);

// -- CSV ------------------------------------------------------------------

/// n,h,tau,scheme,err_u_a,err_p_c,err_p_b_accum
void write_convergence_csv(std::ostream& os, const ConvergenceResult& r);
/// n,tau,scheme,seconds
void write_convergence_timing_csv(std::ostream& os, const ConvergenceResult& r);
/// scheme,quantity,param,eoc (pairwise rows then a least-squares row)
void write_eoc_csv(std::ostream& os, const ConvergenceResult& r);
/// omega,tau,error,diverged,failed,rho,weak_coupling_bound,stability_bound
void write_sweep_csv(std::ostream& os, const SweepResult& r);
/// k,h,tau,assembly_s,implicit_s,semi_explicit_s,implicit_loop_s,semi_explicit_loop_s,
/// implicit_per_step_s,semi_explicit_per_step_s,reduction_percent
void write_runtime_csv(std::ostream& os, const RuntimeTable& t);
/// n,h,tau,scheme,err_u_a,err_p<i>_c...,combined
void write_network_convergence_csv(std::ostream& os, const NetworkConvergenceResult& r);

/// %.17g formatting used by every CSV writer.
std::string format_double(double v);

}  // namespace porodec
