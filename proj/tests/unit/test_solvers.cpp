#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "porodec/solvers.hpp"

using namespace porodec;

namespace {

SparseMatrix tridiag3() { return SparseMatrix::from_dense({{2, -1, 0}, {-1, 2, -1}, {0, -1, 2}}); }

LinearOperator as_operator(const SparseMatrix& a) {
  return [&a](std::span<const double> x, std::span<double> y) { a.multiply(x, y); };
}

}  // namespace

TEST_CASE("identity solve") {
  for (auto mode : {SolveMode::direct, SolveMode::cg}) {
    const auto rep = solve_spd(SparseMatrix::identity(3), Vector{1, 2, 3}, mode);
    CHECK(oracle::max_abs_diff(rep.solution, {1, 2, 3}) < 1e-14);
  }
}

TEST_CASE("tridiagonal solve matches the dense inverse") {
  const Vector b{1, 2, 3};
  const oracle::Mat inv = oracle::inverse(tridiag3().to_dense());
  const Vector expect = oracle::matvec(inv, b);
  CHECK(oracle::max_abs_diff(expect, {2.5, 4.0, 3.5}) < 1e-14);
  for (auto mode : {SolveMode::direct, SolveMode::cg}) {
    const auto rep = solve_spd(tridiag3(), b, mode);
    CHECK(oracle::max_abs_diff(rep.solution, expect) < 1e-12);
    CHECK(rep.residual_norm <= 1e-10 * (1 + oracle::norm(b)));
  }
  CHECK(solve_spd(tridiag3(), b, SolveMode::direct).iterations == 0);
  CHECK(solve_spd(tridiag3(), b, SolveMode::cg).iterations > 0);
}

TEST_CASE("zero pivot is reported as not SPD") {
  const auto a = SparseMatrix::from_dense({{0, 1}, {1, 2}});
  try {
    solve_spd(a, Vector{1, 1});
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.code() == SolverErrc::not_spd);
  }
}

TEST_CASE("indefinite matrix is rejected by CG") {
  const auto a = SparseMatrix::from_dense({{1, 0}, {0, -1}});
  try {
    solve_spd(a, Vector{1, 1}, SolveMode::cg);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.code() == SolverErrc::not_spd);
  }
}

TEST_CASE("nonsymmetric matrix is rejected") {
  CHECK_THROWS_AS(solve_spd(SparseMatrix::from_dense({{2, 1}, {0, 2}}), Vector{1, 1}), SolverError);
}

TEST_CASE("CG iteration cap reports no convergence with last residual") {
  const auto a = SparseMatrix::from_dense({{4, 1, 0}, {1, 3, 1}, {0, 1, 2}});
  try {
    conjugate_gradient(as_operator(a), Vector{1, 2, 3}, 1e-14, 1);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.code() == SolverErrc::no_convergence);
    CHECK(e.last_residual() > 0.0);
  }
}

TEST_CASE("random SPD systems meet the residual contract") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {1u, 2u, 5u, 10u, 25u, 50u}) {
    const auto dense = oracle::random_spd(n, rng);
    const auto a = SparseMatrix::from_dense(dense);
    Vector b(n);
    for (double& v : b) v = u(rng);
    for (auto mode : {SolveMode::direct, SolveMode::cg}) {
      const auto rep = solve_spd(a, b, mode);
      Vector r = a.apply(rep.solution);
      for (std::size_t i = 0; i < n; ++i) r[i] -= b[i];
      CHECK(norm2(r) <= 1e-10 * (1 + norm2(b)));
      CHECK(oracle::max_abs_diff(rep.solution, oracle::lu_solve(dense, b)) < 1e-8);
    }
  }
}

TEST_CASE("cached factorization is reused") {
  const SpdSolver s(tridiag3());
  const auto r1 = s.solve(Vector{1, 2, 3});
  const auto r2 = s.solve(Vector{0, 0, 1});
  CHECK(r1.factorization_reused);
  CHECK(r2.factorization_reused);
  CHECK(oracle::max_abs_diff(r2.solution, {0.25, 0.5, 0.75}) < 1e-14);
}

TEST_CASE("sparse Cholesky handles fill-in on an arrow matrix") {
  // Dense first row/column produces full fill.
  const std::size_t n = 8;
  oracle::Mat d = oracle::eye(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 10.0 + i;
    d[0][i] = d[i][0] = (i == 0) ? 20.0 : 1.0;
  }
  Vector b(n, 1.0);
  const CholeskyFactor f(SparseMatrix::from_dense(d));
  CHECK(f.factor_nnz() == n * (n + 1) / 2);
  CHECK(oracle::max_abs_diff(f.solve(b), oracle::lu_solve(d, b)) < 1e-13);
}

TEST_CASE("preconditioned CG converges in one step with the exact inverse") {
  const auto a = tridiag3();
  const CholeskyFactor f(a);
  LinearOperator pre = [&f](std::span<const double> r, std::span<double> z) {
    std::copy(r.begin(), r.end(), z.begin());
    f.solve_in_place(z);
  };
  const auto rep = conjugate_gradient(as_operator(a), Vector{1, 2, 3}, 1e-12, 0, {}, pre);
  CHECK(rep.iterations == 1);
}

TEST_CASE("spectral radius of a diagonal operator") {
  const auto a = SparseMatrix::diagonal(Vector{2, 1});
  CHECK(spectral_radius(as_operator(a), 2) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("spectral radius of the zero operator") {
  const SparseMatrix z(3, 3);
  CHECK(spectral_radius(as_operator(z), 3) == 0.0);
}

TEST_CASE("spectral radius re-seeds when the all-ones vector is annihilated") {
  // (1,1) is in the kernel; dominant eigenvalue 3 on (1,-1).
  const auto a = SparseMatrix::from_dense({{1.5, -1.5}, {-1.5, 1.5}});
  CHECK(spectral_radius(as_operator(a), 2) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("spectral radius matches the Jacobi eigenvalue oracle") {
  std::mt19937_64 rng(99);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 4; ++trial) {
      const auto d = oracle::random_spd(n, rng);
      const auto ev = oracle::symmetric_eigenvalues(d);
      const auto a = SparseMatrix::from_dense(d);
      CHECK(std::abs(spectral_radius(as_operator(a), n, 1e-12, 200000) - ev.back()) <= 1e-8 * ev.back());
    }
  }
}

TEST_CASE("spectral radius of the toy delay operator") {
  const double w = 0.1;
  const CholeskyFactor fa(tridiag3());
  const Vector v{w, 2 * w, 3 * w};
  LinearOperator op = [&](std::span<const double> x, std::span<double> y) {
    Vector t{v[0] * x[0], v[1] * x[0], v[2] * x[0]};
    fa.solve_in_place(t);
    y[0] = dot(v, t);
  };
  CHECK(spectral_radius(op, 1) == doctest::Approx(21 * w * w).epsilon(1e-12));
}

TEST_CASE("non-convergent power iteration reports the last estimate") {
  // Eigenvalues +1 and -1: the iterate oscillates.
  const auto b = SparseMatrix::from_dense({{1, 0}, {0, -1}});
  try {
    spectral_radius(as_operator(b), 2, 1e-10, 50);
    FAIL("expected SpectralError");
  } catch (const SpectralError& e) {
    CHECK(e.last_estimate() >= 0.0);
  }
}
