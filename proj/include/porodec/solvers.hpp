#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>

#include "porodec/sparse.hpp"

namespace porodec {

/// Relative tolerance used by every solve unless the caller overrides it.
inline constexpr double kDefaultTol = 1e-10;

enum class SolverErrc { not_spd, no_convergence };

class SolverError : public std::runtime_error {
 public:
  SolverError(SolverErrc code, const std::string& what, double last_residual = 0.0)
      : std::runtime_error(what), code_(code), last_residual_(last_residual) {}
  SolverErrc code() const { return code_; }
  double last_residual() const { return last_residual_; }

 private:
  SolverErrc code_;
  double last_residual_;
};

enum class SolveMode { direct, cg };

struct SolveReport {
  Vector solution;
  double residual_norm = 0.0;  ///< ||b - A x||_2
  std::size_t iterations = 0;  ///< 0 for direct solves
  bool factorization_reused = false;
};

/// x -> y = A x, with y pre-sized by the caller.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

/// Sparse Cholesky factor L L^T = A in natural ordering.
///
/// Symbolic phase uses the elimination tree; the numeric phase is the
/// up-looking (row-by-row) algorithm. Only the lower triangle of A is read.
/// Throws SolverError(not_spd) on a non-positive pivot.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const SparseMatrix& a);

  std::size_t dim() const { return n_; }
  std::size_t factor_nnz() const { return lx_.size(); }

  void solve_in_place(std::span<double> x) const;
  Vector solve(std::span<const double> b) const;

 private:
  std::size_t n_ = 0;
  // L stored column-compressed, diagonal first in each column.
  std::vector<std::size_t> lp_;
  std::vector<std::size_t> li_;
  Vector lx_;
};

/// Conjugate gradients on an SPD operator. Stops when
/// ||r|| <= tol * (1 + ||b||). An optional preconditioner application
/// z = P^{-1} r turns it into PCG. Throws SolverError(no_convergence).
SolveReport conjugate_gradient(const LinearOperator& apply, std::span<const double> b,
                               double tol = kDefaultTol, std::size_t max_iter = 0,
                               std::span<const double> x0 = {},
                               const LinearOperator& preconditioner = {});

/// A factorization (or CG setup) bound to one matrix and reused across solves.
/// Safe to share between threads once constructed.
class SpdSolver {
 public:
  SpdSolver() = default;
  SpdSolver(const SparseMatrix& a, SolveMode mode = SolveMode::direct, double tol = kDefaultTol);

  SolveReport solve(std::span<const double> b) const;
  /// Direct solve without residual bookkeeping, for inner loops.
  void solve_in_place(std::span<double> x) const;
  Vector apply_inverse(std::span<const double> b) const;

  const SparseMatrix& matrix() const { return *a_; }
  std::size_t dim() const { return a_ ? a_->rows() : 0; }
  SolveMode mode() const { return mode_; }

 private:
  std::shared_ptr<const SparseMatrix> a_;
  std::shared_ptr<const CholeskyFactor> factor_;
  SolveMode mode_ = SolveMode::direct;
  double tol_ = kDefaultTol;
};

/// One-shot SPD solve. Requires a square symmetric matrix.
SolveReport solve_spd(const SparseMatrix& a, std::span<const double> b,
                      SolveMode mode = SolveMode::direct, double tol = kDefaultTol);

/// Thrown by spectral_radius when power iteration does not settle.
class SpectralError : public std::runtime_error {
 public:
  SpectralError(const std::string& what, double last_estimate)
      : std::runtime_error(what), last_estimate_(last_estimate) {}
  double last_estimate() const { return last_estimate_; }

 private:
  double last_estimate_;
};

/// Spectral radius of an operator with a real dominant eigenvalue, by power
/// iteration from the all-ones vector. If the iterate is annihilated or the
/// Rayleigh quotient stays at zero, the iteration restarts once from the
/// index-weighted vector (1, 2, ..., n); a second collapse yields 0.
/// Converged when ||A x - r x|| <= tol * |r| * ||x||.
double spectral_radius(const LinearOperator& apply, std::size_t dim, double tol = 1e-10,
                       std::size_t max_iter = 10000);

}  // namespace porodec
