#include "porodec/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace porodec {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Nonzero pattern of row k of L (strictly below the diagonal) in topological
// order, written to stack[top..n). Row k of the lower triangle of A is the
// k-th CSR row restricted to columns < k.
std::size_t ereach(const SparseMatrix& a, std::size_t k, const std::vector<std::size_t>& parent,
                   std::vector<std::size_t>& stack, std::vector<std::size_t>& mark) {
  const std::size_t n = a.rows();
  std::size_t top = n;
  mark[k] = k;
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  for (std::size_t p = rp[k]; p < rp[k + 1]; ++p) {
    std::size_t i = ci[p];
    if (i >= k) break;
    std::size_t len = 0;
    for (; mark[i] != k; i = parent[i]) {
      stack[len++] = i;
      mark[i] = k;
    }
    while (len > 0) stack[--top] = stack[--len];
  }
  return top;
}

}  // namespace

CholeskyFactor::CholeskyFactor(const SparseMatrix& a) : n_(a.rows()) {
  if (!a.square()) throw DimensionError("Cholesky: matrix is not square");
  const std::size_t n = n_;
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto av = a.values();

  // Elimination tree with path compression.
  std::vector<std::size_t> parent(n, kNone);
  std::vector<std::size_t> ancestor(n, kNone);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t p = rp[k]; p < rp[k + 1]; ++p) {
      std::size_t i = ci[p];
      if (i >= k) break;
      while (i != kNone && i < k) {
        const std::size_t next = ancestor[i];
        ancestor[i] = k;
        if (next == kNone) parent[i] = k;
        i = next;
      }
    }
  }

  // Column counts of L from the row patterns.
  std::vector<std::size_t> stack(n);
  std::vector<std::size_t> mark(n, kNone);
  std::vector<std::size_t> counts(n, 1);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t top = ereach(a, k, parent, stack, mark);
    for (std::size_t s = top; s < n; ++s) ++counts[stack[s]];
  }
  lp_.assign(n + 1, 0);
  for (std::size_t j = 0; j < n; ++j) lp_[j + 1] = lp_[j] + counts[j];
  li_.assign(lp_[n], 0);
  lx_.assign(lp_[n], 0.0);

  // Up-looking numeric factorization.
  std::vector<std::size_t> next(lp_.begin(), lp_.end() - 1);
  Vector x(n, 0.0);
  std::fill(mark.begin(), mark.end(), kNone);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t top = ereach(a, k, parent, stack, mark);
    x[k] = 0.0;
    for (std::size_t p = rp[k]; p < rp[k + 1]; ++p) {
      if (ci[p] > k) break;
      x[ci[p]] = av[p];
    }
    double d = x[k];
    x[k] = 0.0;
    for (std::size_t s = top; s < n; ++s) {
      const std::size_t i = stack[s];
      const double lki = x[i] / lx_[lp_[i]];
      x[i] = 0.0;
      for (std::size_t p = lp_[i] + 1; p < next[i]; ++p) x[li_[p]] -= lx_[p] * lki;
      d -= lki * lki;
      const std::size_t p = next[i]++;
      li_[p] = k;
      lx_[p] = lki;
    }
    if (!(d > 0.0)) {
      throw SolverError(SolverErrc::not_spd,
                        "Cholesky: non-positive pivot " + std::to_string(d) + " at row " +
                            std::to_string(k));
    }
    const std::size_t p = next[k]++;
    li_[p] = k;
    lx_[p] = std::sqrt(d);
  }
}

void CholeskyFactor::solve_in_place(std::span<double> x) const {
  if (x.size() != n_) throw DimensionError("Cholesky solve: size mismatch");
  for (std::size_t j = 0; j < n_; ++j) {
    x[j] /= lx_[lp_[j]];
    const double xj = x[j];
    for (std::size_t p = lp_[j] + 1; p < lp_[j + 1]; ++p) x[li_[p]] -= lx_[p] * xj;
  }
  for (std::size_t j = n_; j-- > 0;) {
    double s = x[j];
    for (std::size_t p = lp_[j] + 1; p < lp_[j + 1]; ++p) s -= lx_[p] * x[li_[p]];
    x[j] = s / lx_[lp_[j]];
  }
}

Vector CholeskyFactor::solve(std::span<const double> b) const {
  Vector x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

SolveReport conjugate_gradient(const LinearOperator& apply, std::span<const double> b,
                               double tol, std::size_t max_iter, std::span<const double> x0,
                               const LinearOperator& preconditioner) {
  const std::size_t n = b.size();
  if (!x0.empty() && x0.size() != n) throw DimensionError("CG: initial guess size mismatch");
  if (max_iter == 0) max_iter = std::max<std::size_t>(1000, 10 * n);

  SolveReport rep;
  rep.solution = x0.empty() ? Vector(n, 0.0) : Vector(x0.begin(), x0.end());
  Vector& x = rep.solution;
  const double threshold = tol * (1.0 + norm2(b));

  Vector r(n), z(n), p(n), q(n);
  auto true_residual = [&] {
    apply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    return norm2(r);
  };
  auto precondition = [&] {
    if (preconditioner) {
      preconditioner(r, z);
    } else {
      z = r;
    }
  };

  double rnorm = true_residual();
  if (rnorm <= threshold) {
    rep.residual_norm = rnorm;
    return rep;
  }
  precondition();
  p = z;
  double rz = dot(r, z);

  for (std::size_t it = 1; it <= max_iter; ++it) {
    apply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) {
      throw SolverError(SolverErrc::not_spd, "CG: operator is not positive definite", rnorm);
    }
    const double alpha = rz / pq;
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    rnorm = norm2(r);
    rep.iterations = it;
    if (rnorm <= threshold) {
      // Guard against drift of the recursive residual.
      rnorm = true_residual();
      if (rnorm <= threshold) {
        rep.residual_norm = rnorm;
        return rep;
      }
      precondition();
      p = z;
      rz = dot(r, z);
      continue;
    }
    precondition();
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError(SolverErrc::no_convergence,
                    "CG: no convergence after " + std::to_string(max_iter) +
                        " iterations, residual " + std::to_string(rnorm),
                    rnorm);
}

SpdSolver::SpdSolver(const SparseMatrix& a, SolveMode mode, double tol)
    : a_(std::make_shared<const SparseMatrix>(a)), mode_(mode), tol_(tol) {
  if (!a.square()) throw DimensionError("SpdSolver: matrix is not square");
  if (!(tol > 0.0)) throw std::invalid_argument("SpdSolver: tol must be positive");
  if (mode == SolveMode::direct) factor_ = std::make_shared<const CholeskyFactor>(*a_);
}

void SpdSolver::solve_in_place(std::span<double> x) const {
  if (factor_) {
    factor_->solve_in_place(x);
    return;
  }
  SolveReport rep = solve(x);
  std::copy(rep.solution.begin(), rep.solution.end(), x.begin());
}

Vector SpdSolver::apply_inverse(std::span<const double> b) const {
  Vector x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

SolveReport SpdSolver::solve(std::span<const double> b) const {
  if (!a_) throw std::logic_error("SpdSolver: empty solver");
  if (b.size() != a_->rows()) throw DimensionError("SpdSolver: rhs size mismatch");
  if (mode_ == SolveMode::cg) {
    const SparseMatrix& a = *a_;
    auto op = [&a](std::span<const double> x, std::span<double> y) { a.multiply(x, y); };
    SolveReport rep = conjugate_gradient(op, b, tol_);
    rep.factorization_reused = false;
    return rep;
  }

  SolveReport rep;
  rep.factorization_reused = true;
  rep.solution = factor_->solve(b);
  const double threshold = tol_ * (1.0 + norm2(b));
  Vector r(b.size());
  auto residual = [&] {
    a_->multiply(rep.solution, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    return norm2(r);
  };
  rep.residual_norm = residual();
  // A couple of refinement sweeps for badly scaled systems.
  for (int sweep = 0; sweep < 3 && rep.residual_norm > threshold; ++sweep) {
    factor_->solve_in_place(r);
    axpy(1.0, r, rep.solution);
    rep.residual_norm = residual();
  }
  if (!(rep.residual_norm <= threshold)) {
    throw SolverError(SolverErrc::no_convergence,
                      "direct solve: residual " + std::to_string(rep.residual_norm) +
                          " above tolerance",
                      rep.residual_norm);
  }
  return rep;
}

SolveReport solve_spd(const SparseMatrix& a, std::span<const double> b, SolveMode mode,
                      double tol) {
  if (!a.symmetry_hint()) {
    throw SolverError(SolverErrc::not_spd, "solve_spd: matrix is not symmetric");
  }
  SolveReport rep = SpdSolver(a, mode, tol).solve(b);
  rep.factorization_reused = false;
  return rep;
}

double spectral_radius(const LinearOperator& apply, std::size_t dim, double tol,
                       std::size_t max_iter) {
  if (dim == 0) throw DimensionError("spectral_radius: dim must be at least 1");
  Vector x(dim), y(dim);
  auto seed = [&](bool weighted) {
    for (std::size_t i = 0; i < dim; ++i) x[i] = weighted ? static_cast<double>(i + 1) : 1.0;
    const double nx = norm2(x);
    for (double& v : x) v /= nx;
  };
  seed(false);
  bool reseeded = false;
  double estimate = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::fill(y.begin(), y.end(), 0.0);
    apply(x, y);
    const double ny = norm2(y);
    const double rq = dot(x, y);
    if (ny == 0.0 || rq == 0.0) {
      if (ny == 0.0 && reseeded) return 0.0;
      if (!reseeded) {
        seed(true);
        reseeded = true;
        continue;
      }
    } else {
      estimate = rq;
      double res2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = y[i] - rq * x[i];
        res2 += d * d;
      }
      if (std::sqrt(res2) <= tol * std::abs(rq)) return std::abs(rq);
    }
    for (std::size_t i = 0; i < dim; ++i) x[i] = y[i] / ny;
  }
  throw SpectralError("spectral_radius: power iteration did not converge in " +
                          std::to_string(max_iter) + " iterations",
                      std::abs(estimate));
}

}  // namespace porodec
