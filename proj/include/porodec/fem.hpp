#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "porodec/mesh.hpp"
#include "porodec/solvers.hpp"
#include "porodec/sparse.hpp"

namespace porodec {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SpaceKind { p1_scalar, p1_vector, rt0, p0 };

/// Which boundary entities are removed from the space.
enum class Elimination { none, all_boundary, outer_boundary };

const char* to_string(SpaceKind k);

inline constexpr std::size_t kEliminated = std::numeric_limits<std::size_t>::max();

/// Entity -> free dof numbering. Entities are vertices (P1), edges (RT0) or
/// cells (P0); the vector P1 space has two entities per vertex, interleaved
/// as (v, x), (v, y).
struct DofMap {
  SpaceKind kind = SpaceKind::p1_scalar;
  std::vector<std::size_t> entity_dof;  ///< kEliminated for constrained entities
  std::size_t num_free = 0;

  std::size_t num_entities() const { return entity_dof.size(); }
  std::size_t num_eliminated() const { return entity_dof.size() - num_free; }
  bool is_vector() const { return kind == SpaceKind::p1_vector || kind == SpaceKind::rt0; }
};

DofMap make_dofmap(const TriMesh& mesh, SpaceKind kind, Elimination elim = Elimination::none);

/// Material parameters. Per-network entries have length m; the two-field
/// model uses m = 1.
struct PoroParams {
  double lambda = 0.0;
  double mu = 1.0;
  std::vector<double> kappa_over_nu{1.0};
  double inv_M = 1.0;
  std::vector<double> alpha{1.0};
  std::vector<std::vector<double>> beta;  ///< m x m, or empty for no exchange

  std::size_t networks() const { return kappa_over_nu.size(); }
  /// Throws ValidationError naming every offending field.
  void validate() const;
  bool beta_symmetric() const;
  double beta_max() const;
};

using ScalarField = std::function<double(double, double)>;
using VectorField = std::function<Point(double, double)>;
/// Gradient of a scalar field, or one row of a vector field's Jacobian.
using GradientField = std::function<Point(double, double)>;

// -- P1 forms -------------------------------------------------------------

/// (2 mu eps(u) + lambda tr eps(u) I) : eps(v) on the vector P1 space.
SparseMatrix assemble_elasticity(const TriMesh& mesh, const DofMap& u, double lambda, double mu);
/// coef * grad p . grad q on the scalar P1 space.
SparseMatrix assemble_p1_stiffness(const TriMesh& mesh, const DofMap& p, double coef);
/// Consistent mass coef * p q on the scalar P1 space.
SparseMatrix assemble_p1_mass(const TriMesh& mesh, const DofMap& p, double coef);
/// alpha * (div u, q): rows indexed by pressure dofs (P1 or P0), columns by
/// vector P1 dofs.
SparseMatrix assemble_divergence(const TriMesh& mesh, const DofMap& q, const DofMap& u, double alpha);

struct P1Forms {
  SparseMatrix K_a, K_b, M_c, D;
};

/// The four two-field matrices for network 0 of `params`.
P1Forms assemble_p1_forms(const TriMesh& mesh, const DofMap& u, const DofMap& p,
                          const PoroParams& params);

// -- RT0 / P0 forms -------------------------------------------------------

/// L2 mass matrix of the RT0 space (unit normal-flux basis).
SparseMatrix assemble_rt0_mass(const TriMesh& mesh, const EdgeTopology& topo, const DofMap& y);
/// coef * (div z, q): rows P0 cells, columns RT0 dofs. Entries are coef
/// times the signed incidence.
SparseMatrix assemble_rt0_divergence(const TriMesh& mesh, const EdgeTopology& topo, const DofMap& y,
                                     const DofMap& q, double coef);
/// Diagonal coef * |T| on the P0 space.
SparseMatrix assemble_p0_mass(const TriMesh& mesh, const DofMap& q, double coef);

// -- loads, interpolation, evaluation -------------------------------------

/// (f, phi_i) with the three-edge-midpoint rule per cell (exact for
/// quadratic integrands). Scalar spaces: P1 or P0.
Vector assemble_load(const TriMesh& mesh, const DofMap& map, const ScalarField& f);
/// Vector P1 load (f, v).
Vector assemble_vector_load(const TriMesh& mesh, const DofMap& map, const VectorField& f);

/// Nodal interpolation onto free dofs: P1 vertex values, P0 centroid
/// values.
Vector interpolate(const TriMesh& mesh, const DofMap& map, const ScalarField& f);
/// Vector P1: vertex values; RT0: midpoint normal flux times edge length.
Vector interpolate(const TriMesh& mesh, const DofMap& map, const VectorField& f);

/// Point location by a uniform bucket grid over cell bounding boxes.
class PointLocator {
 public:
  explicit PointLocator(const TriMesh& mesh);
  /// Containing cell or kNoCell. Points on shared edges resolve to one of
  /// the adjacent cells.
  std::size_t locate(Point p) const;
  /// Barycentric coordinates of p in cell c.
  std::array<double, 3> barycentric(std::size_t c, Point p) const;

 private:
  const TriMesh* mesh_;
  std::size_t nx_ = 1, ny_ = 1;
  double x0_ = 0, y0_ = 0, dx_ = 1, dy_ = 1;
  std::vector<std::vector<std::size_t>> buckets_;
};

/// Values of a finite element function at points; two components per
/// point for vector spaces (x0, y0, x1, y1, ...). Throws
/// std::out_of_range for a point outside all cells.
Vector evaluate_at_points(const TriMesh& mesh, const DofMap& map, std::span<const double> dofs,
                          std::span<const Point> points);

/// Matrix mapping free dofs on `coarse` to free dofs on `fine` by evaluating
/// coarse basis functions at fine dof locations. Exact for nested meshes.
SparseMatrix transfer_matrix(const TriMesh& coarse, const DofMap& coarse_map, const TriMesh& fine,
                             const DofMap& fine_map);

// -- projections and error functionals ------------------------------------

/// Galerkin projection in the b-form: K_b x = (coef grad p, grad q_h).
/// Right-hand sides use a degree-5 seven-point rule per cell.
Vector elliptic_projection_b(const TriMesh& mesh, const DofMap& p, double coef,
                             const GradientField& grad);
/// Galerkin projection in the a-form; `grad_x`, `grad_y` are the gradients
/// of the two displacement components.
Vector elliptic_projection_a(const TriMesh& mesh, const DofMap& u, double lambda, double mu,
                             const GradientField& grad_x, const GradientField& grad_y);

/// |p - p_h|_{H^1} with the seven-point rule.
double h1_seminorm_error(const TriMesh& mesh, const DofMap& p, std::span<const double> dofs,
                         const GradientField& grad);
/// ||p - p_h||_{L^2} with the seven-point rule.
double l2_error(const TriMesh& mesh, const DofMap& p, std::span<const double> dofs,
                const ScalarField& f);

}  // namespace porodec
