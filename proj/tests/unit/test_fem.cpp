#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "porodec/fem.hpp"

using namespace porodec;
using std::numbers::pi;

namespace {

TriMesh reference_triangle() {
  TriMesh m;
  m.vertices = {{0, 0}, {1, 0}, {0, 1}};
  m.cells = {{0, 1, 2}};
  m.h = 1.0;
  m.box_min = {-1, -1};
  m.box_max = {2, 2};
  build_edges(m);
  return m;
}

double row_sum_total(const SparseMatrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

void check_spd(const SparseMatrix& a) {
  CHECK(a.symmetry_hint());
  CHECK_NOTHROW(CholeskyFactor{a});
}

// Seven-point degree-5 rule, restated independently of the library.
template <class F>
double integrate_cell(const TriMesh& m, std::size_t c, F f) {
  const double r = std::sqrt(15.0);
  const double a1 = (6 - r) / 21, a2 = (6 + r) / 21;
  const double w0 = 9.0 / 40, w1 = (155 - r) / 1200, w2 = (155 + r) / 1200;
  const double pts[7][3] = {{1. / 3, 1. / 3, 1. / 3}, {a1, a1, 1 - 2 * a1}, {a1, 1 - 2 * a1, a1}, {1 - 2 * a1, a1, a1},
                            {a2, a2, 1 - 2 * a2}, {a2, 1 - 2 * a2, a2}, {1 - 2 * a2, a2, a2}};
  const double w[7] = {w0, w1, w1, w1, w2, w2, w2};
  const auto& t = m.cells[c];
  double s = 0.0;
  for (int q = 0; q < 7; ++q) {
    const double x = pts[q][0] * m.vertices[t[0]].x + pts[q][1] * m.vertices[t[1]].x + pts[q][2] * m.vertices[t[2]].x;
    const double y = pts[q][0] * m.vertices[t[0]].y + pts[q][1] * m.vertices[t[1]].y + pts[q][2] * m.vertices[t[2]].y;
    s += w[q] * f(x, y);
  }
  return s * m.signed_area(c);
}

}  // namespace

TEST_CASE("dof maps") {
  const auto m = unit_square_mesh(4);
  const auto p = make_dofmap(m, SpaceKind::p1_scalar, Elimination::all_boundary);
  CHECK(p.num_free == 9);
  CHECK(p.num_free + p.num_eliminated() == m.num_vertices());
  const auto u = make_dofmap(m, SpaceKind::p1_vector, Elimination::all_boundary);
  CHECK(u.num_free == 18);
  // Interleaved components.
  const std::size_t v = 6;  // vertex (1, 1) in the 5 x 5 grid
  CHECK(u.entity_dof[2 * v + 1] == u.entity_dof[2 * v] + 1);
  const auto y = make_dofmap(m, SpaceKind::rt0, Elimination::all_boundary);
  CHECK(y.num_free == m.num_edges() - 16);
  CHECK(make_dofmap(m, SpaceKind::p0).num_free == 32);
  CHECK(make_dofmap(unit_square_mesh(8), SpaceKind::p1_scalar, Elimination::all_boundary).num_free == 49);
}

TEST_CASE("scalar stiffness on the reference triangle") {
  const auto m = reference_triangle();
  const auto p = make_dofmap(m, SpaceKind::p1_scalar);
  const auto k = assemble_p1_stiffness(m, p, 1.0).to_dense();
  const oracle::Mat expect{{1, -0.5, -0.5}, {-0.5, 0.5, 0}, {-0.5, 0, 0.5}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(k[i][j] == doctest::Approx(expect[i][j]).epsilon(1e-15));
}

TEST_CASE("mass matrix matches quadrature of basis products") {
  const auto m = reference_triangle();
  const auto p = make_dofmap(m, SpaceKind::p1_scalar);
  const auto mass = assemble_p1_mass(m, p, 1.0).to_dense();
  auto phi = [](int i, double x, double y) { return i == 0 ? 1 - x - y : (i == 1 ? x : y); };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(mass[i][j] == doctest::Approx(integrate_cell(m, 0, [&](double x, double y) { return phi(i, x, y) * phi(j, x, y); })).epsilon(1e-14));
}

TEST_CASE("rigid motions lie in the kernel of the elasticity matrix") {
  const auto m = unit_square_mesh(4);
  const auto u = make_dofmap(m, SpaceKind::p1_vector);
  const auto k = assemble_elasticity(m, u, 3.0, 2.0);
  for (auto field : {VectorField([](double, double) { return Point{1.0, 0.0}; }),
                     VectorField([](double, double) { return Point{0.0, 1.0}; }),
                     VectorField([](double x, double y) { return Point{-y, x}; })}) {
    const auto x = interpolate(m, u, field);
    CHECK(norm_inf(k.apply(x)) < 1e-12);
  }
  // A stretch is not in the kernel.
  const auto s = interpolate(m, u, VectorField([](double x, double) { return Point{x, 0.0}; }));
  CHECK(norm_inf(k.apply(s)) > 1e-3);
}

TEST_CASE("elasticity energy of a linear field is exact") {
  // u = (x, 0): eps = diag(1, 0), sigma : eps = 2 mu + lambda per unit area.
  const auto m = unit_square_mesh(3);
  const auto u = make_dofmap(m, SpaceKind::p1_vector);
  const double lambda = 3.0, mu = 2.0;
  const auto k = assemble_elasticity(m, u, lambda, mu);
  const auto x = interpolate(m, u, VectorField([](double xx, double) { return Point{xx, 0.0}; }));
  CHECK(dot(x, k.apply(x)) == doctest::Approx(2 * mu + lambda).epsilon(1e-13));
  // Shear u = (y, 0): eps_xy = 1/2, energy mu.
  const auto y = interpolate(m, u, VectorField([](double, double yy) { return Point{yy, 0.0}; }));
  CHECK(dot(y, k.apply(y)) == doctest::Approx(mu).epsilon(1e-13));
}

TEST_CASE("assembled two-field matrices are SPD with partition of unity") {
  const auto m = unit_square_mesh(6);
  const auto u = make_dofmap(m, SpaceKind::p1_vector, Elimination::all_boundary);
  const auto p = make_dofmap(m, SpaceKind::p1_scalar, Elimination::all_boundary);
  PoroParams params;
  params.lambda = 1.2;
  params.mu = 0.6;
  params.kappa_over_nu = {0.3};
  params.inv_M = 7.8;
  params.alpha = {0.79};
  const auto f = assemble_p1_forms(m, u, p, params);
  check_spd(f.K_a);
  check_spd(f.K_b);
  check_spd(f.M_c);
  CHECK(f.D.rows() == p.num_free);
  CHECK(f.D.cols() == u.num_free);

  const auto pall = make_dofmap(m, SpaceKind::p1_scalar);
  CHECK(row_sum_total(assemble_p1_mass(m, pall, 7.8)) == doctest::Approx(7.8).epsilon(1e-13));
  const auto pp = punch_hole(m, {0.5, 0.5}, 0.25);
  const auto ph = make_dofmap(pp, SpaceKind::p1_scalar);
  CHECK(row_sum_total(assemble_p1_mass(pp, ph, 2.0)) == doctest::Approx(2.0 * pp.total_area()).epsilon(1e-13));
  // K_b annihilates constants without elimination.
  const auto kb = assemble_p1_stiffness(m, pall, 0.3);
  CHECK(norm_inf(kb.apply(Vector(pall.num_free, 1.0))) < 1e-13);
}

TEST_CASE("divergence matrix") {
  const auto m = reference_triangle();
  const auto u = make_dofmap(m, SpaceKind::p1_vector);
  const auto q = make_dofmap(m, SpaceKind::p1_scalar);
  const auto d = assemble_divergence(m, q, u, 0.5).to_dense();
  // grad lambda: (-1,-1), (1,0), (0,1); entries alpha |T| / 3 d_b lambda_j.
  const double g[3][2] = {{-1, -1}, {1, 0}, {0, 1}};
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j)
      for (int b = 0; b < 2; ++b) CHECK(d[k][2 * j + b] == doctest::Approx(0.5 * 0.5 / 3 * g[j][b]).epsilon(1e-15));

  // Constant displacement has zero divergence; interior hats integrate to 0.
  const auto sq = unit_square_mesh(5);
  const auto ua = make_dofmap(sq, SpaceKind::p1_vector);
  const auto qa = make_dofmap(sq, SpaceKind::p1_scalar);
  const auto dd = assemble_divergence(sq, qa, ua, 0.79);
  const auto c = interpolate(sq, ua, VectorField([](double, double) { return Point{2.0, -1.0}; }));
  CHECK(norm_inf(dd.apply(c)) < 1e-13);
  const auto col_sums = dd.apply_transpose(Vector(qa.num_free, 1.0));
  for (std::size_t v = 0; v < sq.num_vertices(); ++v) {
    if (sq.vertex_tags[v] != BoundaryTag::interior) continue;
    CHECK(std::abs(col_sums[ua.entity_dof[2 * v]]) < 1e-14);
    CHECK(std::abs(col_sums[ua.entity_dof[2 * v + 1]]) < 1e-14);
  }
  // (div u, 1) for u = (x, 0) equals |Omega|.
  const auto s = interpolate(sq, ua, VectorField([](double x, double) { return Point{x, 0.0}; }));
  CHECK(dot(Vector(qa.num_free, 1.0), dd.apply(s)) == doctest::Approx(0.79).epsilon(1e-13));
  // alpha = 0 gives the zero matrix.
  CHECK(assemble_divergence(sq, qa, ua, 0.0).nnz() == 0);
}

TEST_CASE("divergence of a P0 pressure space") {
  const auto m = unit_square_mesh(3);
  const auto u = make_dofmap(m, SpaceKind::p1_vector);
  const auto q = make_dofmap(m, SpaceKind::p0);
  const auto d = assemble_divergence(m, q, u, 1.0);
  const auto s = interpolate(m, u, VectorField([](double x, double y) { return Point{x, 2 * y}; }));
  const auto dv = d.apply(s);
  for (std::size_t c = 0; c < m.num_cells(); ++c) CHECK(dv[c] == doctest::Approx(3.0 * m.signed_area(c)).epsilon(1e-13));
}

TEST_CASE("RT0 divergence on one triangle") {
  const auto m = reference_triangle();
  const auto topo = edge_topology(m);
  const auto y = make_dofmap(m, SpaceKind::rt0);
  const auto q = make_dofmap(m, SpaceKind::p0);
  const double coef = std::sqrt(0.25);
  const auto dh = assemble_rt0_divergence(m, topo, y, q, coef).to_dense();
  // Oracle: outward boundary flux of each basis function by Gauss-Legendre
  // sampling of the evaluated field along the three edges.
  const double gl[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  const Point corners[3] = {{0, 0}, {1, 0}, {0, 1}};
  for (std::size_t e = 0; e < 3; ++e) {
    Vector basis(3, 0.0);
    basis[y.entity_dof[e]] = 1.0;
    double flux = 0.0;
    for (int k = 0; k < 3; ++k) {
      const Point a = corners[k], b = corners[(k + 1) % 3];
      const Point n{b.y - a.y, -(b.x - a.x)};  // outward for a CCW loop, scaled by length
      for (double s : gl) {
        const Point x{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
        // Nudge inward so the point is located inside the single cell.
        const Point xi{x.x + 1e-12 * (1.0 / 3 - x.x), x.y + 1e-12 * (1.0 / 3 - x.y)};
        const Point pts[1] = {xi};
        const auto v = evaluate_at_points(m, y, basis, pts);
        flux += 0.5 * (v[0] * n.x + v[1] * n.y);
      }
    }
    CHECK(std::abs(flux) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(dh[0][y.entity_dof[e]] == doctest::Approx(coef * flux).epsilon(1e-9));
  }
}

TEST_CASE("RT0 mass matches quadrature of evaluated basis functions") {
  const auto m = unit_square_mesh(2);
  const auto topo = edge_topology(m);
  const auto y = make_dofmap(m, SpaceKind::rt0);
  const auto my = assemble_rt0_mass(m, topo, y).to_dense();
  const std::size_t n = y.num_free;
  for (std::size_t a = 0; a < n; a += 3) {
    for (std::size_t b = 0; b < n; ++b) {
      double s = 0.0;
      for (std::size_t c = 0; c < m.num_cells(); ++c) {
        const Point g = m.centroid(c);
        s += integrate_cell(m, c, [&](double x, double yy) {
          // Shrink toward the centroid so location stays in cell c.
          const Point pts[1] = {{g.x + (1 - 1e-9) * (x - g.x), g.y + (1 - 1e-9) * (yy - g.y)}};
          Vector ea(n, 0.0), eb(n, 0.0);
          ea[a] = 1.0;
          eb[b] = 1.0;
          const auto va = evaluate_at_points(m, y, ea, pts);
          const auto vb = evaluate_at_points(m, y, eb, pts);
          return va[0] * vb[0] + va[1] * vb[1];
        });
      }
      CHECK(my[a][b] == doctest::Approx(s).epsilon(1e-7).scale(1.0));
    }
  }
}

TEST_CASE("RT0 forms with zero normal trace") {
  const auto m = punch_hole(unit_square_mesh(8), {0.5, 0.5}, 0.25);
  const auto topo = edge_topology(m);
  const auto y = make_dofmap(m, SpaceKind::rt0, Elimination::all_boundary);
  const auto q = make_dofmap(m, SpaceKind::p0);
  const auto my = assemble_rt0_mass(m, topo, y);
  check_spd(my);
  const auto dh = assemble_rt0_divergence(m, topo, y, q, std::sqrt(3.75e-4));
  const auto col = dh.apply_transpose(Vector(q.num_free, 1.0));
  CHECK(norm_inf(col) < 1e-15);
  check_spd(assemble_p0_mass(m, q, 4.5e-2));
}

TEST_CASE("RT0 interpolation reproduces constant fields") {
  const auto m = unit_square_mesh(3);
  const auto y = make_dofmap(m, SpaceKind::rt0);
  const auto dofs = interpolate(m, y, VectorField([](double, double) { return Point{0.3, -1.2}; }));
  std::vector<Point> pts;
  for (std::size_t c = 0; c < m.num_cells(); ++c) pts.push_back(m.centroid(c));
  const auto v = evaluate_at_points(m, y, dofs, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(v[2 * i] == doctest::Approx(0.3).epsilon(1e-13));
    CHECK(v[2 * i + 1] == doctest::Approx(-1.2).epsilon(1e-13));
  }
}

TEST_CASE("loads") {
  const auto m = unit_square_mesh(4);
  const auto p = make_dofmap(m, SpaceKind::p1_scalar);
  CHECK(norm_inf(assemble_load(m, p, [](double, double) { return 0.0; })) == 0.0);
  const auto one = assemble_load(m, p, [](double, double) { return 1.0; });
  CHECK(row_sum_total(SparseMatrix::diagonal(one)) == doctest::Approx(1.0).epsilon(1e-14));
  const double e0 = 10.0 * std::exp(0.0);
  const auto scaled = assemble_load(m, p, [e0](double, double) { return e0; });
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(scaled[i] == doctest::Approx(10.0 * one[i]).epsilon(1e-15));
  // Quadratic integrands are exact: (x, phi_i) against the mass matrix.
  const auto mass = assemble_p1_mass(m, p, 1.0);
  const auto lx = assemble_load(m, p, [](double x, double) { return x; });
  const auto ix = interpolate(m, p, ScalarField([](double x, double) { return x; }));
  CHECK(oracle::max_abs_diff(lx, mass.apply(ix)) < 1e-15);
  const auto q0 = make_dofmap(m, SpaceKind::p0);
  const auto l0 = assemble_load(m, q0, [](double x, double y) { return x * y; });
  double tot = 0.0;
  for (double v : l0) tot += v;
  CHECK(tot == doctest::Approx(0.25).epsilon(1e-14));
  const auto u = make_dofmap(m, SpaceKind::p1_vector);
  const auto fv = assemble_vector_load(m, u, [](double, double) { return Point{1.0, 2.0}; });
  double sx = 0.0, sy = 0.0;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    sx += fv[u.entity_dof[2 * v]];
    sy += fv[u.entity_dof[2 * v + 1]];
  }
  CHECK(sx == doctest::Approx(1.0));
  CHECK(sy == doctest::Approx(2.0));
}

TEST_CASE("interpolation and evaluation") {
  const auto m = unit_square_mesh(4);
  const auto p = make_dofmap(m, SpaceKind::p1_scalar);
  CHECK(norm_inf(interpolate(m, p, ScalarField([](double, double) { return 0.0; }))) == 0.0);
  const auto x = interpolate(m, p, ScalarField([](double xx, double) { return xx; }));
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    if (m.vertices[v].x == 0.5) CHECK(x[p.entity_dof[v]] == 0.5);
  const auto vals = evaluate_at_points(m, p, x, m.vertices);
  CHECK(oracle::max_abs_diff(vals, x) == 0.0);

  const auto t = reference_triangle();
  const auto q = make_dofmap(t, SpaceKind::p0);
  const auto c = interpolate(t, q, ScalarField([](double xx, double yy) { return xx + yy; }));
  CHECK(c[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  const Point pts[3] = {{0.1, 0.1}, {0.7, 0.2}, {0.05, 0.9}};
  for (double v : evaluate_at_points(t, q, c, pts)) CHECK(v == doctest::Approx(2.0 / 3.0));

  const auto fine = unit_square_mesh(64);
  const auto pf = make_dofmap(fine, SpaceKind::p1_scalar);
  const auto b = interpolate(fine, pf, ScalarField([](double xx, double yy) { return xx * (1 - xx) * yy * (1 - yy); }));
  const Point mid[1] = {{0.5, 0.5}};
  CHECK(std::abs(evaluate_at_points(fine, pf, b, mid)[0] - 0.0625) < 1e-3);

  const Point outside[1] = {{1.5, 0.5}};
  CHECK_THROWS_AS(evaluate_at_points(m, p, x, outside), std::out_of_range);
  const auto holed = punch_hole(m, {0.5, 0.5}, 0.2);
  const auto ph = make_dofmap(holed, SpaceKind::p1_scalar);
  CHECK_THROWS_AS(evaluate_at_points(holed, ph, Vector(ph.num_free, 0.0), mid), std::out_of_range);
}

TEST_CASE("transfer matrices are exact on nested meshes") {
  const auto coarse = unit_square_mesh(4);
  const auto fine = refine_uniform(coarse);
  auto lin = [](double x, double y) { return 1 + 2 * x - 3 * y; };
  for (auto elim : {Elimination::none, Elimination::all_boundary}) {
    const auto pc = make_dofmap(coarse, SpaceKind::p1_scalar, elim);
    const auto pf = make_dofmap(fine, SpaceKind::p1_scalar, elim);
    const auto t = transfer_matrix(coarse, pc, fine, pf);
    const auto hat = [](double x, double y) { return x * (1 - x) * y * (1 - y); };
    const auto xc = interpolate(coarse, pc, ScalarField(elim == Elimination::none ? ScalarField(lin) : ScalarField(hat)));
    const auto xf = t.apply(xc);
    const auto direct = evaluate_at_points(coarse, pc, xc, std::vector<Point>(
        [&] { std::vector<Point> pts; for (std::size_t v = 0; v < fine.num_vertices(); ++v) if (pf.entity_dof[v] != kEliminated) pts.push_back(fine.vertices[v]); return pts; }()));
    CHECK(oracle::max_abs_diff(xf, direct) < 1e-14);
  }
  const auto pc = make_dofmap(coarse, SpaceKind::p1_scalar);
  const auto pf = make_dofmap(fine, SpaceKind::p1_scalar);
  CHECK(oracle::max_abs_diff(transfer_matrix(coarse, pc, fine, pf).apply(interpolate(coarse, pc, ScalarField(lin))),
                             interpolate(fine, pf, ScalarField(lin))) < 1e-14);
  const auto qc = make_dofmap(coarse, SpaceKind::p0);
  const auto qf = make_dofmap(fine, SpaceKind::p0);
  const auto tq = transfer_matrix(coarse, qc, fine, qf);
  Vector cells(qc.num_free);
  for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = static_cast<double>(c);
  const auto fq = tq.apply(cells);
  for (std::size_t c = 0; c < fine.num_cells(); ++c) CHECK(fq[c] == static_cast<double>(fine.parent_cell[c]));
  const auto yc = make_dofmap(coarse, SpaceKind::rt0);
  const auto yf = make_dofmap(fine, SpaceKind::rt0);
  const VectorField cst = [](double, double) { return Point{0.7, 0.4}; };
  CHECK(oracle::max_abs_diff(transfer_matrix(coarse, yc, fine, yf).apply(interpolate(coarse, yc, cst)), interpolate(fine, yf, cst)) < 1e-14);
}

TEST_CASE("projection is the identity on the discrete space") {
  // Hat function of the centre vertex of the n = 2 mesh.
  const auto m = unit_square_mesh(2);
  const auto p = make_dofmap(m, SpaceKind::p1_scalar, Elimination::all_boundary);
  auto hat = [](double x, double y) {
    const double xi = (x - 0.5) / 0.5, eta = (y - 0.5) / 0.5;
    return std::max(0.0, 1.0 - std::max({std::abs(xi), std::abs(eta), std::abs(xi - eta)}));
  };
  auto grad = [&](double x, double y) {
    const double h = 1e-7;
    return Point{(hat(x + h, y) - hat(x - h, y)) / (2 * h), (hat(x, y + h) - hat(x, y - h)) / (2 * h)};
  };
  const auto proj = elliptic_projection_b(m, p, 2.0, grad);
  REQUIRE(proj.size() == 1);
  CHECK(proj[0] == doctest::Approx(1.0).epsilon(1e-7));
  const auto zero = elliptic_projection_b(m, p, 2.0, [](double, double) { return Point{0, 0}; });
  CHECK(zero[0] == 0.0);
  const auto u = make_dofmap(m, SpaceKind::p1_vector, Elimination::all_boundary);
  const auto pu = elliptic_projection_a(m, u, 1.0, 1.0, grad, [](double, double) { return Point{0, 0}; });
  CHECK(pu[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(pu[1]) < 1e-7);
}

TEST_CASE("projection error of sin(pi x) sin(pi y) converges at first order") {
  auto grad = [](double x, double y) {
    return Point{pi * std::cos(pi * x) * std::sin(pi * y), pi * std::sin(pi * x) * std::cos(pi * y)};
  };
  std::vector<double> err;
  for (std::size_t n : {8u, 16u, 32u}) {
    const auto m = unit_square_mesh(n);
    const auto p = make_dofmap(m, SpaceKind::p1_scalar, Elimination::all_boundary);
    err.push_back(h1_seminorm_error(m, p, elliptic_projection_b(m, p, 1.0, grad), grad));
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const double eoc = std::log2(err[i] / err[i + 1]);
    CHECK(eoc > 0.85);
    CHECK(eoc < 1.15);
  }
}

TEST_CASE("l2 error of interpolants converges at second order") {
  auto f = [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); };
  std::vector<double> err;
  for (std::size_t n : {8u, 16u}) {
    const auto m = unit_square_mesh(n);
    const auto p = make_dofmap(m, SpaceKind::p1_scalar);
    err.push_back(l2_error(m, p, interpolate(m, p, ScalarField(f)), f));
  }
  CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("parameter validation names every bad field") {
  PoroParams p;
  p.mu = -1;
  p.inv_M = 0;
  p.alpha = {1.5};
  try {
    p.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string s = e.what();
    CHECK(s.find("mu") != std::string::npos);
    CHECK(s.find("inv_M") != std::string::npos);
    CHECK(s.find("alpha") != std::string::npos);
  }
  PoroParams q;
  q.kappa_over_nu = {1, 1};
  q.alpha = {1, 1};
  q.beta = {{0, -1}, {1, 0}};
  CHECK_THROWS_AS(q.validate(), ValidationError);
  q.beta = {{0, 2}, {1, 0}};
  CHECK_NOTHROW(q.validate());
  CHECK_FALSE(q.beta_symmetric());
}

TEST_CASE("mismatched dof map is rejected") {
  const auto m = unit_square_mesh(2);
  const auto p = make_dofmap(unit_square_mesh(3), SpaceKind::p1_scalar);
  CHECK_THROWS_AS(assemble_p1_mass(m, p, 1.0), DimensionError);
}
