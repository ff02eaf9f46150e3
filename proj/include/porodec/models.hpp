#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "porodec/config.hpp"
#include "porodec/fem.hpp"
#include "porodec/mesh.hpp"
#include "porodec/sparse.hpp"

namespace porodec {

using TimeFunction = std::function<double(double)>;

/// Load vector sum_k s_k(t) v_k with fixed spatial parts v_k.
class LoadVector {
 public:
  LoadVector() = default;
  explicit LoadVector(std::size_t dim) : dim_(dim) {}

  void add_term(Vector spatial, TimeFunction factor);
  /// Optional exact derivative of the time factors, one per term.
  void set_derivatives(std::vector<TimeFunction> derivatives);

  std::size_t dim() const { return dim_; }
  bool is_zero() const;

  Vector at(double t) const;
  /// out += scale * load(t)
  void add_to(double t, std::span<double> out, double scale = 1.0) const;
  /// Time derivative: exact when derivatives were supplied, else a central
  /// difference with step 1e-6 * max(1, |t|).
  Vector derivative(double t) const;
  LoadVector scaled(double s) const;

 private:
  std::size_t dim_ = 0;
  std::vector<Vector> spatial_;
  std::vector<TimeFunction> factors_;
  std::vector<TimeFunction> derivatives_;
};

/// Semi-discrete two-field system
///   K_a u - D^T p = f,   M_c p' + K_b p + D u' = g.
struct TwoFieldSystem {
  SparseMatrix K_a, K_b, M_c, D;
  LoadVector f, g;
  Vector u0, p0;
  PoroParams params;
  std::shared_ptr<const TriMesh> mesh;  ///< null for algebraic systems
  DofMap u_map, p_map;
  std::string pressure_bc = "dirichlet";

  std::size_t dim_u() const { return K_a.rows(); }
  std::size_t dim_p() const { return M_c.rows(); }

  /// ||K_a u0 - D^T p0 - f(0)|| / (1 + ||f(0)||)
  double consistency_residual() const;
  /// Dimension checks plus the consistency invariant; throws ValidationError.
  void check() const;

  /// Fills u0 from K_a u0 = f(0) + D^T p0 and checks the result.
  static TwoFieldSystem from_matrices(SparseMatrix K_a, SparseMatrix K_b, SparseMatrix M_c, SparseMatrix D,
                                      LoadVector f, LoadVector g, Vector p0);
};

/// Semi-discrete multiple-network system with m pressures p_i and fluxes y_i.
struct NetworkSystem {
  std::size_t m = 1;
  SparseMatrix K_a, M_y, M_c, M_Q;
  std::vector<SparseMatrix> D;      ///< alpha_i (div u, q), P0 x P1-vector
  std::vector<SparseMatrix> D_hat;  ///< sqrt(kappa_i / nu_i) (div z, q), P0 x RT0
  std::vector<std::vector<double>> beta;
  LoadVector f;
  std::vector<LoadVector> g;
  Vector u0;
  std::vector<Vector> y0, p0;
  PoroParams params;
  std::shared_ptr<const TriMesh> mesh;
  DofMap u_map, y_map, q_map;

  std::size_t dim_u() const { return K_a.rows(); }
  std::size_t dim_y() const { return M_y.rows(); }
  std::size_t dim_p() const { return M_c.rows(); }
  double beta_at(std::size_t i, std::size_t j) const { return beta.empty() ? 0.0 : beta[i][j]; }

  /// ||K_a u0 - sum D_i^T p_i0 - f(0)|| / (1 + ||f(0)||)
  double consistency_residual() const;
  /// max_i ||M_y y_i0 - D_hat_i^T p_i0|| / (1 + ||D_hat_i^T p_i0||)
  double flux_residual() const;
  void check() const;

  /// Fills u0 and y_i0 from the pressures and checks the result. Empty
  /// `beta` means no exchange.
  static NetworkSystem from_matrices(SparseMatrix K_a, SparseMatrix M_y, SparseMatrix M_c, SparseMatrix M_Q,
                                     std::vector<SparseMatrix> D, std::vector<SparseMatrix> D_hat,
                                     std::vector<std::vector<double>> beta, LoadVector f, std::vector<LoadVector> g,
                                     std::vector<Vector> p0);
};

/// The three-dimensional toy problem with coupling scale omega.
struct ToyTwoField {
  double omega = 0.0;
  TwoFieldSystem system;
};

/// Default toy initial pressure.
inline constexpr double kToyP0 = 1.0;

ToyTwoField build_toy(double omega, double p0 = kToyP0);
TwoFieldSystem build_two_field(const Config& config);
/// Warnings (asymmetric beta) are appended to `warnings` when given.
NetworkSystem build_network(const Config& config, std::vector<std::string>* warnings = nullptr);
/// Mesh described by the [mesh] section.
TriMesh build_mesh(const Config& config);

struct CouplingConstants {
  std::optional<double> c_a;  ///< smallest eigenvalue of K_a; algebraic systems only
  std::optional<double> c_c;  ///< smallest eigenvalue of M_c; algebraic systems only
  double C_d = 0.0;           ///< spectral norm of D
  double rho = 0.0;           ///< spectral radius of M_c^{-1} D K_a^{-1} D^T
  /// "satisfied", "satisfied (tight)", "violated", or "not computed"
  std::string weak_coupling;
  bool stable = true;  ///< rho < 1
};

CouplingConstants coupling_constants(const TwoFieldSystem& system);

/// 6 beta_max (m - 1) <= c_c with c_c = 1/M.
bool exchange_condition(const PoroParams& params);

}  // namespace porodec
