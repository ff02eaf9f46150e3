#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "porodec/mesh.hpp"

using namespace porodec;

namespace {

std::set<std::pair<long long, long long>> vertex_set(const TriMesh& m) {
  std::set<std::pair<long long, long long>> s;
  for (const auto& v : m.vertices) s.insert({std::llround(v.x * 1e9), std::llround(v.y * 1e9)});
  return s;
}

// Cells as sorted triples of rounded vertex coordinates.
std::set<std::vector<std::pair<long long, long long>>> cell_set(const TriMesh& m) {
  std::set<std::vector<std::pair<long long, long long>>> s;
  for (const auto& c : m.cells) {
    std::vector<std::pair<long long, long long>> t;
    for (auto v : c) t.push_back({std::llround(m.vertices[v].x * 1e9), std::llround(m.vertices[v].y * 1e9)});
    std::sort(t.begin(), t.end());
    s.insert(t);
  }
  return s;
}

long euler(const TriMesh& m) {
  return static_cast<long>(m.num_vertices()) - static_cast<long>(m.num_edges()) + static_cast<long>(m.num_cells());
}

void check_valid(const TriMesh& m) {
  for (std::size_t c = 0; c < m.num_cells(); ++c) CHECK(m.signed_area(c) > 0.0);
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    const auto& ed = m.edges[e];
    CHECK(ed.vertices[0] < ed.vertices[1]);
    const bool boundary = ed.cells[1] == kNoCell;
    CHECK(boundary == (m.edge_tags[e] != BoundaryTag::interior));
  }
}

}  // namespace

TEST_CASE("unit square counts") {
  const auto m = unit_square_mesh(2);
  CHECK(m.num_vertices() == 9);
  CHECK(m.num_cells() == 8);
  CHECK(m.num_edges() == 16);
  CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(euler(m) == 1);
  CHECK(m.h == 0.5);
  check_valid(m);
}

TEST_CASE("n = 1 square") {
  const auto m = unit_square_mesh(1);
  CHECK(m.num_cells() == 2);
  CHECK(m.num_edges() == 5);
  CHECK(m.num_boundary_edges() == 4);
  CHECK(euler(m) == 1);
}

TEST_CASE("n = 0 is rejected") { CHECK_THROWS_AS(unit_square_mesh(0), MeshError); }

TEST_CASE("boundary flags of the square") {
  const auto m = unit_square_mesh(4);
  std::size_t b = 0;
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const auto& p = m.vertices[v];
    const bool on = p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
    CHECK(on == (m.vertex_tags[v] == BoundaryTag::outer));
    b += on;
  }
  CHECK(b == 16);
  CHECK(m.num_boundary_edges() == m.num_boundary_vertices());
}

TEST_CASE("refinement quadruples cells and halves h") {
  const auto m = unit_square_mesh(2);
  const auto r = refine_uniform(m);
  CHECK(r.num_cells() == 32);
  CHECK(r.h == doctest::Approx(0.25));
  REQUIRE(r.parent_cell.size() == 32);
  for (std::size_t c = 0; c < r.num_cells(); ++c) {
    CHECK(r.parent_cell[c] == c / 4);
    CHECK(r.signed_area(c) == doctest::Approx(m.signed_area(c / 4) / 4).epsilon(1e-14));
  }
  check_valid(r);
}

TEST_CASE("refined meshes coincide with finer structured meshes") {
  const auto r1 = refine_uniform(unit_square_mesh(2));
  CHECK(vertex_set(r1) == vertex_set(unit_square_mesh(4)));
  const auto r2 = refine_uniform(r1);
  CHECK(vertex_set(r2) == vertex_set(unit_square_mesh(8)));
  CHECK(cell_set(r2) == cell_set(unit_square_mesh(8)));
}

TEST_CASE("edge topology signs") {
  const auto m = unit_square_mesh(3);
  const auto topo = edge_topology(m);
  std::vector<int> sum(m.num_edges(), 0);
  std::vector<int> count(m.num_edges(), 0);
  for (std::size_t c = 0; c < m.num_cells(); ++c) {
    for (int k = 0; k < 3; ++k) {
      const std::size_t e = topo.cell_edges[c][k];
      sum[e] += topo.signs[c][k];
      ++count[e];
      // local edge k is opposite local vertex k
      const auto& ev = m.edges[e].vertices;
      CHECK(ev[0] != m.cells[c][k]);
      CHECK(ev[1] != m.cells[c][k]);
      if (m.edges[e].cells[1] != kNoCell) CHECK((topo.signs[c][k] == 1) == (m.edges[e].cells[0] == c));
    }
  }
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    if (m.edge_tags[e] == BoundaryTag::interior) {
      CHECK(count[e] == 2);
      CHECK(sum[e] == 0);
    } else {
      CHECK(count[e] == 1);
    }
  }
}

TEST_CASE("punch_hole radius zero leaves the mesh unchanged") {
  const auto m = unit_square_mesh(4);
  const auto p = punch_hole(m, {0.5, 0.5}, 0.0);
  CHECK(p.num_cells() == m.num_cells());
  CHECK_FALSE(p.staircase_hole);
}

TEST_CASE("punched area agrees with a Monte-Carlo oracle of the centroid rule") {
  const auto m = unit_square_mesh(32);
  const Point c{0.5, 0.5};
  const auto p = punch_hole(m, c, 0.25);
  CHECK(p.staircase_hole);
  check_valid(p);

  // Sample points, locate their structured cell, keep those whose cell
  // centroid lies outside the disk.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int samples = 200000;
  int kept = 0;
  for (int s = 0; s < samples; ++s) {
    const double x = u(rng), y = u(rng);
    const int i = std::min(31, static_cast<int>(x * 32));
    const int j = std::min(31, static_cast<int>(y * 32));
    const double fx = x * 32 - i, fy = y * 32 - j;
    double gx, gy;
    if (fx >= fy) {
      gx = (i + 2.0 / 3.0) / 32;
      gy = (j + 1.0 / 3.0) / 32;
    } else {
      gx = (i + 1.0 / 3.0) / 32;
      gy = (j + 2.0 / 3.0) / 32;
    }
    if (std::hypot(gx - c.x, gy - c.y) >= 0.25) ++kept;
  }
  const double mc = static_cast<double>(kept) / samples;
  CHECK(std::abs(p.total_area() - mc) < 0.01);
  CHECK(std::abs(p.total_area() - (1.0 - std::numbers::pi / 16)) < 0.05);
  CHECK(euler(p) == 0);
  std::size_t hole_edges = 0;
  for (auto t : p.edge_tags) hole_edges += t == BoundaryTag::hole;
  CHECK(hole_edges > 0);
  CHECK(p.num_boundary_edges() == p.num_boundary_vertices());
}

TEST_CASE("hole covering the whole square is rejected") {
  CHECK_THROWS_AS(punch_hole(unit_square_mesh(4), {0.5, 0.5}, 2.0), MeshError);
}

TEST_CASE("hole that disconnects the mesh is rejected") {
  // Radius leaves only the four corner regions, which touch nothing else.
  CHECK_THROWS_AS(punch_hole(unit_square_mesh(16), {0.5, 0.5}, 0.69), MeshError);
}

TEST_CASE("refining a punched mesh keeps the hole area") {
  const auto p = punch_hole(unit_square_mesh(8), {0.5, 0.5}, 0.25);
  const auto r = refine_uniform(p);
  CHECK(r.total_area() == doctest::Approx(p.total_area()).epsilon(1e-13));
  CHECK(euler(r) == 0);
  CHECK(r.staircase_hole);
}

TEST_CASE("mesh dump lists all sections") {
  std::ostringstream os;
  write_mesh(os, unit_square_mesh(1));
  const std::string s = os.str();
  CHECK(s.find("vertices 4") != std::string::npos);
  CHECK(s.find("cells 2") != std::string::npos);
  CHECK(s.find("edges 5") != std::string::npos);
}
