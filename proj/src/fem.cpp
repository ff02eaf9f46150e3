#include "porodec/fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace porodec {

const char* to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::p1_scalar: return "P1";
    case SpaceKind::p1_vector: return "P1-vector";
    case SpaceKind::rt0: return "RT0";
    case SpaceKind::p0: return "P0";
  }
  return "?";
}

namespace {

struct CellGeometry {
  std::array<Point, 3> x;
  std::array<Point, 3> grad;  // gradients of the barycentric coordinates
  double area = 0.0;
};

CellGeometry geometry(const TriMesh& m, std::size_t c) {
  CellGeometry g;
  for (int k = 0; k < 3; ++k) g.x[k] = m.vertices[m.cells[c][k]];
  g.area = m.signed_area(c);
  const double s = 1.0 / (2.0 * g.area);
  for (int k = 0; k < 3; ++k) {
    const Point& a = g.x[(k + 1) % 3];
    const Point& b = g.x[(k + 2) % 3];
    g.grad[k] = {(a.y - b.y) * s, (b.x - a.x) * s};
  }
  return g;
}

Point at_barycentric(const CellGeometry& g, double l0, double l1, double l2) {
  return {l0 * g.x[0].x + l1 * g.x[1].x + l2 * g.x[2].x, l0 * g.x[0].y + l1 * g.x[1].y + l2 * g.x[2].y};
}

struct QuadPoint {
  std::array<double, 3> bary;
  double weight;  // relative to the cell area
};

// Seven-point rule, exact for polynomials of degree 5.
const std::array<QuadPoint, 7>& degree5_rule() {
  static const std::array<QuadPoint, 7> rule = [] {
    const double r = std::sqrt(15.0);
    const double a1 = (6.0 - r) / 21.0, w1 = (155.0 - r) / 1200.0;
    const double a2 = (6.0 + r) / 21.0, w2 = (155.0 + r) / 1200.0;
    return std::array<QuadPoint, 7>{{
        {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0},
        {{a1, a1, 1.0 - 2.0 * a1}, w1},
        {{a1, 1.0 - 2.0 * a1, a1}, w1},
        {{1.0 - 2.0 * a1, a1, a1}, w1},
        {{a2, a2, 1.0 - 2.0 * a2}, w2},
        {{a2, 1.0 - 2.0 * a2, a2}, w2},
        {{1.0 - 2.0 * a2, a2, a2}, w2},
    }};
  }();
  return rule;
}

void require_map(const TriMesh& mesh, const DofMap& map, SpaceKind kind, const char* what) {
  std::size_t expect = 0;
  switch (kind) {
    case SpaceKind::p1_scalar: expect = mesh.num_vertices(); break;
    case SpaceKind::p1_vector: expect = 2 * mesh.num_vertices(); break;
    case SpaceKind::rt0: expect = mesh.num_edges(); break;
    case SpaceKind::p0: expect = mesh.num_cells(); break;
  }
  if (map.kind != kind || map.num_entities() != expect) {
    throw DimensionError(std::string(what) + ": dof map (" + to_string(map.kind) + ", " +
                         std::to_string(map.num_entities()) + " entities) does not match mesh for " +
                         to_string(kind));
  }
}

void require_scalar_pressure(const TriMesh& mesh, const DofMap& map, const char* what) {
  if (map.kind == SpaceKind::p0) {
    require_map(mesh, map, SpaceKind::p0, what);
  } else {
    require_map(mesh, map, SpaceKind::p1_scalar, what);
  }
}

// Values of free dofs spread back to entities; eliminated entities are 0.
Vector expand(const DofMap& map, std::span<const double> dofs) {
  if (dofs.size() != map.num_free) throw DimensionError("dof vector size does not match dof map");
  Vector full(map.num_entities(), 0.0);
  for (std::size_t e = 0; e < full.size(); ++e) {
    if (map.entity_dof[e] != kEliminated) full[e] = dofs[map.entity_dof[e]];
  }
  return full;
}

void push(std::vector<Triplet>& t, std::size_t i, std::size_t j, double v) {
  if (i != kEliminated && j != kEliminated && v != 0.0) t.push_back({i, j, v});
}

}  // namespace

DofMap make_dofmap(const TriMesh& mesh, SpaceKind kind, Elimination elim) {
  DofMap map;
  map.kind = kind;
  auto eliminated = [elim](BoundaryTag tag) {
    switch (elim) {
      case Elimination::none: return false;
      case Elimination::all_boundary: return tag != BoundaryTag::interior;
      case Elimination::outer_boundary: return tag == BoundaryTag::outer;
    }
    return false;
  };
  switch (kind) {
    case SpaceKind::p1_scalar:
    case SpaceKind::p1_vector: {
      const std::size_t comps = kind == SpaceKind::p1_vector ? 2 : 1;
      map.entity_dof.assign(comps * mesh.num_vertices(), kEliminated);
      for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        if (eliminated(mesh.vertex_tags[v])) continue;
        for (std::size_t c = 0; c < comps; ++c) map.entity_dof[comps * v + c] = map.num_free++;
      }
      break;
    }
    case SpaceKind::rt0:
      map.entity_dof.assign(mesh.num_edges(), kEliminated);
      for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        if (!eliminated(mesh.edge_tags[e])) map.entity_dof[e] = map.num_free++;
      }
      break;
    case SpaceKind::p0:
      if (elim != Elimination::none) throw ValidationError("P0 space has no boundary entities to eliminate");
      map.entity_dof.resize(mesh.num_cells());
      for (std::size_t c = 0; c < mesh.num_cells(); ++c) map.entity_dof[c] = map.num_free++;
      break;
  }
  return map;
}

void PoroParams::validate() const {
  std::vector<std::string> bad;
  if (!(mu > 0.0)) bad.push_back("mu (must be > 0)");
  if (!(lambda >= 0.0)) bad.push_back("lambda (must be >= 0)");
  if (!(inv_M > 0.0)) bad.push_back("inv_M (must be > 0)");
  const std::size_t m = kappa_over_nu.size();
  if (m == 0) bad.push_back("kappa_over_nu (need at least one network)");
  for (std::size_t i = 0; i < m; ++i) {
    if (!(kappa_over_nu[i] > 0.0)) bad.push_back("kappa_over_nu[" + std::to_string(i) + "] (must be > 0)");
  }
  if (alpha.size() != m) {
    bad.push_back("alpha (expected " + std::to_string(m) + " entries)");
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      if (!(alpha[i] >= 0.0 && alpha[i] <= 1.0)) bad.push_back("alpha[" + std::to_string(i) + "] (must lie in [0, 1])");
    }
  }
  if (!beta.empty()) {
    bool shape = beta.size() == m;
    for (const auto& row : beta) shape = shape && row.size() == m;
    if (!shape) {
      bad.push_back("beta (expected " + std::to_string(m) + "x" + std::to_string(m) + " table)");
    } else {
      for (std::size_t i = 0; i < m; ++i) {
        if (beta[i][i] != 0.0) bad.push_back("beta[" + std::to_string(i) + "][" + std::to_string(i) + "] (diagonal must be 0)");
        for (std::size_t j = 0; j < m; ++j) {
          if (!(beta[i][j] >= 0.0)) bad.push_back("beta[" + std::to_string(i) + "][" + std::to_string(j) + "] (must be >= 0)");
        }
      }
    }
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << "invalid parameters:";
    for (const auto& b : bad) os << ' ' << b << ';';
    throw ValidationError(os.str());
  }
}

bool PoroParams::beta_symmetric() const {
  for (std::size_t i = 0; i < beta.size(); ++i)
    for (std::size_t j = 0; j < beta[i].size(); ++j)
      if (beta[i][j] != beta[j][i]) return false;
  return true;
}

double PoroParams::beta_max() const {
  double m = 0.0;
  for (const auto& row : beta)
    for (double b : row) m = std::max(m, b);
  return m;
}

SparseMatrix assemble_elasticity(const TriMesh& mesh, const DofMap& u, double lambda, double mu) {
  require_map(mesh, u, SpaceKind::p1_vector, "assemble_elasticity");
  std::vector<Triplet> t;
  t.reserve(36 * mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto g = geometry(mesh, c);
    for (int i = 0; i < 3; ++i) {
      const double gi[2] = {g.grad[i].x, g.grad[i].y};
      for (int j = 0; j < 3; ++j) {
        const double gj[2] = {g.grad[j].x, g.grad[j].y};
        const double gg = gi[0] * gj[0] + gi[1] * gj[1];
        for (int a = 0; a < 2; ++a) {
          const std::size_t row = u.entity_dof[2 * mesh.cells[c][i] + a];
          for (int b = 0; b < 2; ++b) {
            const std::size_t col = u.entity_dof[2 * mesh.cells[c][j] + b];
            const double v = mu * ((a == b ? gg : 0.0) + gi[b] * gj[a]) + lambda * gi[a] * gj[b];
            push(t, row, col, g.area * v);
          }
        }
      }
    }
  }
  return SparseMatrix::from_triplets(u.num_free, u.num_free, t);
}

SparseMatrix assemble_p1_stiffness(const TriMesh& mesh, const DofMap& p, double coef) {
  require_map(mesh, p, SpaceKind::p1_scalar, "assemble_p1_stiffness");
  std::vector<Triplet> t;
  t.reserve(9 * mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto g = geometry(mesh, c);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double v = coef * g.area * (g.grad[i].x * g.grad[j].x + g.grad[i].y * g.grad[j].y);
        push(t, p.entity_dof[mesh.cells[c][i]], p.entity_dof[mesh.cells[c][j]], v);
      }
    }
  }
  return SparseMatrix::from_triplets(p.num_free, p.num_free, t);
}

SparseMatrix assemble_p1_mass(const TriMesh& mesh, const DofMap& p, double coef) {
  require_map(mesh, p, SpaceKind::p1_scalar, "assemble_p1_mass");
  std::vector<Triplet> t;
  t.reserve(9 * mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double area = mesh.signed_area(c);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double v = coef * area / 12.0 * (i == j ? 2.0 : 1.0);
        push(t, p.entity_dof[mesh.cells[c][i]], p.entity_dof[mesh.cells[c][j]], v);
      }
    }
  }
  return SparseMatrix::from_triplets(p.num_free, p.num_free, t);
}

SparseMatrix assemble_divergence(const TriMesh& mesh, const DofMap& q, const DofMap& u, double alpha) {
  require_scalar_pressure(mesh, q, "assemble_divergence");
  require_map(mesh, u, SpaceKind::p1_vector, "assemble_divergence");
  std::vector<Triplet> t;
  t.reserve(18 * mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto g = geometry(mesh, c);
    for (int j = 0; j < 3; ++j) {
      const double gj[2] = {g.grad[j].x, g.grad[j].y};
      for (int b = 0; b < 2; ++b) {
        const std::size_t col = u.entity_dof[2 * mesh.cells[c][j] + b];
        if (q.kind == SpaceKind::p0) {
          push(t, q.entity_dof[c], col, alpha * g.area * gj[b]);
        } else {
          for (int k = 0; k < 3; ++k) push(t, q.entity_dof[mesh.cells[c][k]], col, alpha * g.area / 3.0 * gj[b]);
        }
      }
    }
  }
  return SparseMatrix::from_triplets(q.num_free, u.num_free, t);
}

P1Forms assemble_p1_forms(const TriMesh& mesh, const DofMap& u, const DofMap& p, const PoroParams& params) {
  params.validate();
  P1Forms f;
  f.K_a = assemble_elasticity(mesh, u, params.lambda, params.mu);
  f.K_b = assemble_p1_stiffness(mesh, p, params.kappa_over_nu[0]);
  f.M_c = assemble_p1_mass(mesh, p, params.inv_M);
  f.D = assemble_divergence(mesh, p, u, params.alpha[0]);
  return f;
}

SparseMatrix assemble_rt0_mass(const TriMesh& mesh, const EdgeTopology& topo, const DofMap& y) {
  require_map(mesh, y, SpaceKind::rt0, "assemble_rt0_mass");
  if (topo.cell_edges.size() != mesh.num_cells()) throw DimensionError("assemble_rt0_mass: edge topology missing");
  std::vector<Triplet> t;
  t.reserve(9 * mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto g = geometry(mesh, c);
    // Edge midpoints integrate quadratics exactly.
    std::array<Point, 3> mids;
    for (int k = 0; k < 3; ++k) {
      const Point& a = g.x[(k + 1) % 3];
      const Point& b = g.x[(k + 2) % 3];
      mids[k] = {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    }
    const double scale = 1.0 / (4.0 * g.area * g.area);
    for (int k = 0; k < 3; ++k) {
      for (int l = 0; l < 3; ++l) {
        double s = 0.0;
        for (const Point& m : mids) {
          s += (m.x - g.x[k].x) * (m.x - g.x[l].x) + (m.y - g.x[k].y) * (m.y - g.x[l].y);
        }
        const double v = topo.signs[c][k] * topo.signs[c][l] * scale * g.area / 3.0 * s;
        push(t, y.entity_dof[topo.cell_edges[c][k]], y.entity_dof[topo.cell_edges[c][l]], v);
      }
    }
  }
  return SparseMatrix::from_triplets(y.num_free, y.num_free, t);
}

SparseMatrix assemble_rt0_divergence(const TriMesh& mesh, const EdgeTopology& topo, const DofMap& y,
                                     const DofMap& q, double coef) {
  require_map(mesh, y, SpaceKind::rt0, "assemble_rt0_divergence");
  require_map(mesh, q, SpaceKind::p0, "assemble_rt0_divergence");
  if (topo.cell_edges.size() != mesh.num_cells()) {
    throw DimensionError("assemble_rt0_divergence: edge topology missing");
  }
  std::vector<Triplet> t;
  t.reserve(3 * mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    for (int k = 0; k < 3; ++k) push(t, q.entity_dof[c], y.entity_dof[topo.cell_edges[c][k]], coef * topo.signs[c][k]);
  }
  return SparseMatrix::from_triplets(q.num_free, y.num_free, t);
}

SparseMatrix assemble_p0_mass(const TriMesh& mesh, const DofMap& q, double coef) {
  require_map(mesh, q, SpaceKind::p0, "assemble_p0_mass");
  Vector d(q.num_free, 0.0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) d[q.entity_dof[c]] = coef * mesh.signed_area(c);
  return SparseMatrix::diagonal(d);
}

Vector assemble_load(const TriMesh& mesh, const DofMap& map, const ScalarField& f) {
  require_scalar_pressure(mesh, map, "assemble_load");
  Vector b(map.num_free, 0.0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto g = geometry(mesh, c);
    std::array<double, 3> fm;  // f at the midpoint opposite vertex k
    for (int k = 0; k < 3; ++k) {
      const Point m = at_barycentric(g, k == 0 ? 0.0 : 0.5, k == 1 ? 0.0 : 0.5, k == 2 ? 0.0 : 0.5);
      fm[k] = f(m.x, m.y);
    }
    if (map.kind == SpaceKind::p0) {
      b[map.entity_dof[c]] += g.area / 3.0 * (fm[0] + fm[1] + fm[2]);
      continue;
    }
    for (int i = 0; i < 3; ++i) {
      const std::size_t dof = map.entity_dof[mesh.cells[c][i]];
      if (dof == kEliminated) continue;
      // phi_i is 1/2 on the two midpoints adjacent to vertex i.
      b[dof] += g.area / 3.0 * 0.5 * (fm[(i + 1) % 3] + fm[(i + 2) % 3]);
    }
  }
  return b;
}

Vector assemble_vector_load(const TriMesh& mesh, const DofMap& map, const VectorField& f) {
  require_map(mesh, map, SpaceKind::p1_vector, "assemble_vector_load");
  Vector b(map.num_free, 0.0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto g = geometry(mesh, c);
    std::array<Point, 3> fm;
    for (int k = 0; k < 3; ++k) {
      const Point m = at_barycentric(g, k == 0 ? 0.0 : 0.5, k == 1 ? 0.0 : 0.5, k == 2 ? 0.0 : 0.5);
      fm[k] = f(m.x, m.y);
    }
    for (int i = 0; i < 3; ++i) {
      const Point& a = fm[(i + 1) % 3];
      const Point& d = fm[(i + 2) % 3];
      const double w = g.area / 6.0;
      const std::size_t vx = map.entity_dof[2 * mesh.cells[c][i]];
      const std::size_t vy = map.entity_dof[2 * mesh.cells[c][i] + 1];
      if (vx != kEliminated) b[vx] += w * (a.x + d.x);
      if (vy != kEliminated) b[vy] += w * (a.y + d.y);
    }
  }
  return b;
}

Vector interpolate(const TriMesh& mesh, const DofMap& map, const ScalarField& f) {
  require_scalar_pressure(mesh, map, "interpolate");
  Vector x(map.num_free, 0.0);
  if (map.kind == SpaceKind::p0) {
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
      const Point g = mesh.centroid(c);
      x[map.entity_dof[c]] = f(g.x, g.y);
    }
  } else {
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
      if (map.entity_dof[v] != kEliminated) x[map.entity_dof[v]] = f(mesh.vertices[v].x, mesh.vertices[v].y);
    }
  }
  return x;
}

Vector interpolate(const TriMesh& mesh, const DofMap& map, const VectorField& f) {
  Vector x(map.num_free, 0.0);
  if (map.kind == SpaceKind::p1_vector) {
    require_map(mesh, map, SpaceKind::p1_vector, "interpolate");
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
      const Point val = f(mesh.vertices[v].x, mesh.vertices[v].y);
      if (map.entity_dof[2 * v] != kEliminated) x[map.entity_dof[2 * v]] = val.x;
      if (map.entity_dof[2 * v + 1] != kEliminated) x[map.entity_dof[2 * v + 1]] = val.y;
    }
    return x;
  }
  require_map(mesh, map, SpaceKind::rt0, "interpolate");
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    if (map.entity_dof[e] == kEliminated) continue;
    const Point& a = mesh.vertices[mesh.edges[e].vertices[0]];
    const Point& b = mesh.vertices[mesh.edges[e].vertices[1]];
    const Point m = mesh.edge_midpoint(e);
    const Point val = f(m.x, m.y);
    // Global normal: tangent rotated clockwise, scaled by the length.
    x[map.entity_dof[e]] = val.x * (b.y - a.y) - val.y * (b.x - a.x);
  }
  return x;
}

PointLocator::PointLocator(const TriMesh& mesh) : mesh_(&mesh) {
  if (mesh.num_cells() == 0) throw MeshError("PointLocator: empty mesh");
  double x1 = mesh.vertices[0].x, y1 = mesh.vertices[0].y;
  x0_ = x1;
  y0_ = y1;
  for (const auto& v : mesh.vertices) {
    x0_ = std::min(x0_, v.x);
    y0_ = std::min(y0_, v.y);
    x1 = std::max(x1, v.x);
    y1 = std::max(y1, v.y);
  }
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(mesh.num_cells()) / 2.0)));
  nx_ = ny_ = std::max<std::size_t>(1, side);
  dx_ = std::max(x1 - x0_, 1e-300) / static_cast<double>(nx_);
  dy_ = std::max(y1 - y0_, 1e-300) / static_cast<double>(ny_);
  buckets_.resize(nx_ * ny_);
  auto clamp_index = [](double v, std::size_t n) {
    if (v < 0.0) return std::size_t{0};
    return std::min(n - 1, static_cast<std::size_t>(v));
  };
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    double cx0 = 1e300, cy0 = 1e300, cx1 = -1e300, cy1 = -1e300;
    for (auto v : mesh.cells[c]) {
      cx0 = std::min(cx0, mesh.vertices[v].x);
      cy0 = std::min(cy0, mesh.vertices[v].y);
      cx1 = std::max(cx1, mesh.vertices[v].x);
      cy1 = std::max(cy1, mesh.vertices[v].y);
    }
    const double eps = 1e-12;
    const std::size_t i0 = clamp_index((cx0 - x0_) / dx_ - eps, nx_), i1 = clamp_index((cx1 - x0_) / dx_ + eps, nx_);
    const std::size_t j0 = clamp_index((cy0 - y0_) / dy_ - eps, ny_), j1 = clamp_index((cy1 - y0_) / dy_ + eps, ny_);
    for (std::size_t j = j0; j <= j1; ++j)
      for (std::size_t i = i0; i <= i1; ++i) buckets_[j * nx_ + i].push_back(c);
  }
}

std::array<double, 3> PointLocator::barycentric(std::size_t c, Point p) const {
  const auto& t = mesh_->cells[c];
  const Point& a = mesh_->vertices[t[0]];
  const Point& b = mesh_->vertices[t[1]];
  const Point& d = mesh_->vertices[t[2]];
  const double det = (b.x - a.x) * (d.y - a.y) - (d.x - a.x) * (b.y - a.y);
  const double l1 = ((p.x - a.x) * (d.y - a.y) - (d.x - a.x) * (p.y - a.y)) / det;
  const double l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
  return {1.0 - l1 - l2, l1, l2};
}

std::size_t PointLocator::locate(Point p) const {
  const double fi = (p.x - x0_) / dx_;
  const double fj = (p.y - y0_) / dy_;
  const double eps = 1e-12;
  if (fi < -eps || fj < -eps || fi > static_cast<double>(nx_) + eps || fj > static_cast<double>(ny_) + eps) return kNoCell;
  const std::size_t i = std::min(nx_ - 1, static_cast<std::size_t>(std::max(0.0, fi)));
  const std::size_t j = std::min(ny_ - 1, static_cast<std::size_t>(std::max(0.0, fj)));
  std::size_t best = kNoCell;
  double best_min = -1e300;
  for (std::size_t c : buckets_[j * nx_ + i]) {
    const auto l = barycentric(c, p);
    const double lo = std::min({l[0], l[1], l[2]});
    if (lo >= 0.0) return c;
    if (lo > best_min) {
      best_min = lo;
      best = c;
    }
  }
  return best_min >= -1e-10 ? best : kNoCell;
}

namespace {

// Values of the basis functions of cell c at point p, for scalar spaces a
// single value per local dof, for vector spaces two.
struct LocalBasis {
  std::array<std::size_t, 6> entity{};
  std::array<double, 6> value{};
  int count = 0;
};

LocalBasis local_basis(const TriMesh& mesh, const DofMap& map, const EdgeTopology* topo, const PointLocator& loc,
                       std::size_t c, Point p, int component) {
  LocalBasis lb;
  switch (map.kind) {
    case SpaceKind::p0:
      lb.entity[0] = c;
      lb.value[0] = 1.0;
      lb.count = 1;
      break;
    case SpaceKind::p1_scalar: {
      const auto l = loc.barycentric(c, p);
      for (int k = 0; k < 3; ++k) {
        lb.entity[k] = mesh.cells[c][k];
        lb.value[k] = l[k];
      }
      lb.count = 3;
      break;
    }
    case SpaceKind::p1_vector: {
      const auto l = loc.barycentric(c, p);
      for (int k = 0; k < 3; ++k) {
        lb.entity[k] = 2 * mesh.cells[c][k] + component;
        lb.value[k] = l[k];
      }
      lb.count = 3;
      break;
    }
    case SpaceKind::rt0: {
      const double area = mesh.signed_area(c);
      for (int k = 0; k < 3; ++k) {
        const Point& pk = mesh.vertices[mesh.cells[c][k]];
        lb.entity[k] = topo->cell_edges[c][k];
        const double d = component == 0 ? p.x - pk.x : p.y - pk.y;
        lb.value[k] = topo->signs[c][k] * d / (2.0 * area);
      }
      lb.count = 3;
      break;
    }
  }
  return lb;
}

}  // namespace

Vector evaluate_at_points(const TriMesh& mesh, const DofMap& map, std::span<const double> dofs,
                          std::span<const Point> points) {
  const Vector full = expand(map, dofs);
  const PointLocator loc(mesh);
  EdgeTopology topo;
  if (map.kind == SpaceKind::rt0) topo = edge_topology(mesh);
  const int comps = map.is_vector() ? 2 : 1;
  Vector out;
  out.reserve(comps * points.size());
  for (const Point& p : points) {
    const std::size_t c = loc.locate(p);
    if (c == kNoCell) {
      throw std::out_of_range("evaluate_at_points: point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                              ") lies outside the mesh");
    }
    for (int comp = 0; comp < comps; ++comp) {
      const auto lb = local_basis(mesh, map, &topo, loc, c, p, comp);
      double v = 0.0;
      for (int k = 0; k < lb.count; ++k) v += lb.value[k] * full[lb.entity[k]];
      out.push_back(v);
    }
  }
  return out;
}

SparseMatrix transfer_matrix(const TriMesh& coarse, const DofMap& coarse_map, const TriMesh& fine,
                             const DofMap& fine_map) {
  if (coarse_map.kind != fine_map.kind) throw DimensionError("transfer_matrix: space kinds differ");
  const PointLocator loc(coarse);
  EdgeTopology topo;
  if (coarse_map.kind == SpaceKind::rt0) topo = edge_topology(coarse);
  std::vector<Triplet> t;

  auto add_row = [&](std::size_t row, Point p, int comp, Point normal) {
    if (row == kEliminated) return;
    const std::size_t c = loc.locate(p);
    if (c == kNoCell) throw std::out_of_range("transfer_matrix: fine dof location outside the coarse mesh");
    if (coarse_map.kind == SpaceKind::rt0) {
      const auto bx = local_basis(coarse, coarse_map, &topo, loc, c, p, 0);
      const auto by = local_basis(coarse, coarse_map, &topo, loc, c, p, 1);
      for (int k = 0; k < 3; ++k) {
        push(t, row, coarse_map.entity_dof[bx.entity[k]], bx.value[k] * normal.x + by.value[k] * normal.y);
      }
      return;
    }
    const auto lb = local_basis(coarse, coarse_map, &topo, loc, c, p, comp);
    for (int k = 0; k < lb.count; ++k) {
      const double v = lb.value[k];
      // Drop round-off weights so nested vertices map one-to-one.
      if (std::abs(v) > 1e-13) push(t, row, coarse_map.entity_dof[lb.entity[k]], v);
    }
  };

  switch (fine_map.kind) {
    case SpaceKind::p1_scalar:
      require_map(fine, fine_map, SpaceKind::p1_scalar, "transfer_matrix");
      for (std::size_t v = 0; v < fine.num_vertices(); ++v) add_row(fine_map.entity_dof[v], fine.vertices[v], 0, {});
      break;
    case SpaceKind::p1_vector:
      require_map(fine, fine_map, SpaceKind::p1_vector, "transfer_matrix");
      for (std::size_t v = 0; v < fine.num_vertices(); ++v)
        for (int comp = 0; comp < 2; ++comp) add_row(fine_map.entity_dof[2 * v + comp], fine.vertices[v], comp, {});
      break;
    case SpaceKind::p0:
      require_map(fine, fine_map, SpaceKind::p0, "transfer_matrix");
      for (std::size_t c = 0; c < fine.num_cells(); ++c) add_row(fine_map.entity_dof[c], fine.centroid(c), 0, {});
      break;
    case SpaceKind::rt0:
      require_map(fine, fine_map, SpaceKind::rt0, "transfer_matrix");
      for (std::size_t e = 0; e < fine.num_edges(); ++e) {
        const Point& a = fine.vertices[fine.edges[e].vertices[0]];
        const Point& b = fine.vertices[fine.edges[e].vertices[1]];
        add_row(fine_map.entity_dof[e], fine.edge_midpoint(e), 0, {b.y - a.y, -(b.x - a.x)});
      }
      break;
  }
  return SparseMatrix::from_triplets(fine_map.num_free, coarse_map.num_free, t);
}

Vector elliptic_projection_b(const TriMesh& mesh, const DofMap& p, double coef, const GradientField& grad) {
  require_map(mesh, p, SpaceKind::p1_scalar, "elliptic_projection_b");
  Vector rhs(p.num_free, 0.0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto g = geometry(mesh, c);
    Point avg{0.0, 0.0};
    for (const auto& q : degree5_rule()) {
      const Point x = at_barycentric(g, q.bary[0], q.bary[1], q.bary[2]);
      const Point gr = grad(x.x, x.y);
      avg.x += q.weight * gr.x;
      avg.y += q.weight * gr.y;
    }
    for (int i = 0; i < 3; ++i) {
      const std::size_t dof = p.entity_dof[mesh.cells[c][i]];
      if (dof != kEliminated) rhs[dof] += coef * g.area * (avg.x * g.grad[i].x + avg.y * g.grad[i].y);
    }
  }
  const SparseMatrix k = assemble_p1_stiffness(mesh, p, coef);
  return solve_spd(k, rhs).solution;
}

Vector elliptic_projection_a(const TriMesh& mesh, const DofMap& u, double lambda, double mu,
                             const GradientField& grad_x, const GradientField& grad_y) {
  require_map(mesh, u, SpaceKind::p1_vector, "elliptic_projection_a");
  Vector rhs(u.num_free, 0.0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto g = geometry(mesh, c);
    // Cell average of the Jacobian J[a][b] = d u_a / d x_b.
    double jac[2][2] = {{0, 0}, {0, 0}};
    for (const auto& q : degree5_rule()) {
      const Point x = at_barycentric(g, q.bary[0], q.bary[1], q.bary[2]);
      const Point gx = grad_x(x.x, x.y);
      const Point gy = grad_y(x.x, x.y);
      jac[0][0] += q.weight * gx.x;
      jac[0][1] += q.weight * gx.y;
      jac[1][0] += q.weight * gy.x;
      jac[1][1] += q.weight * gy.y;
    }
    const double eps[2][2] = {{jac[0][0], 0.5 * (jac[0][1] + jac[1][0])}, {0.5 * (jac[0][1] + jac[1][0]), jac[1][1]}};
    const double tr = jac[0][0] + jac[1][1];
    double sigma[2][2];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) sigma[a][b] = 2.0 * mu * eps[a][b] + (a == b ? lambda * tr : 0.0);
    for (int i = 0; i < 3; ++i) {
      const double gi[2] = {g.grad[i].x, g.grad[i].y};
      for (int a = 0; a < 2; ++a) {
        const std::size_t dof = u.entity_dof[2 * mesh.cells[c][i] + a];
        if (dof == kEliminated) continue;
        // sigma : eps(lambda_i e_a) = sum_b sigma[a][b] d_b lambda_i
        rhs[dof] += g.area * (sigma[a][0] * gi[0] + sigma[a][1] * gi[1]);
      }
    }
  }
  const SparseMatrix k = assemble_elasticity(mesh, u, lambda, mu);
  return solve_spd(k, rhs).solution;
}

double h1_seminorm_error(const TriMesh& mesh, const DofMap& p, std::span<const double> dofs,
                         const GradientField& grad) {
  require_map(mesh, p, SpaceKind::p1_scalar, "h1_seminorm_error");
  const Vector full = expand(p, dofs);
  double s = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto g = geometry(mesh, c);
    Point gh{0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
      const double v = full[mesh.cells[c][k]];
      gh.x += v * g.grad[k].x;
      gh.y += v * g.grad[k].y;
    }
    for (const auto& q : degree5_rule()) {
      const Point x = at_barycentric(g, q.bary[0], q.bary[1], q.bary[2]);
      const Point gr = grad(x.x, x.y);
      const double dx = gr.x - gh.x, dy = gr.y - gh.y;
      s += g.area * q.weight * (dx * dx + dy * dy);
    }
  }
  return std::sqrt(s);
}

double l2_error(const TriMesh& mesh, const DofMap& p, std::span<const double> dofs, const ScalarField& f) {
  require_scalar_pressure(mesh, p, "l2_error");
  const Vector full = expand(p, dofs);
  double s = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto g = geometry(mesh, c);
    for (const auto& q : degree5_rule()) {
      const Point x = at_barycentric(g, q.bary[0], q.bary[1], q.bary[2]);
      double vh = 0.0;
      if (p.kind == SpaceKind::p0) {
        vh = full[c];
      } else {
        for (int k = 0; k < 3; ++k) vh += q.bary[k] * full[mesh.cells[c][k]];
      }
      const double d = f(x.x, x.y) - vh;
      s += g.area * q.weight * d * d;
    }
  }
  return std::sqrt(s);
}

}  // namespace porodec
