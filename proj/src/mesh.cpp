#include "porodec/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <queue>
#include <string>
#include <utility>

namespace porodec {

double TriMesh::signed_area(std::size_t c) const {
  const auto& t = cells[c];
  const Point& a = vertices[t[0]];
  const Point& b = vertices[t[1]];
  const Point& d = vertices[t[2]];
  return 0.5 * ((b.x - a.x) * (d.y - a.y) - (d.x - a.x) * (b.y - a.y));
}

Point TriMesh::centroid(std::size_t c) const {
  const auto& t = cells[c];
  return {(vertices[t[0]].x + vertices[t[1]].x + vertices[t[2]].x) / 3.0,
          (vertices[t[0]].y + vertices[t[1]].y + vertices[t[2]].y) / 3.0};
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) s += signed_area(c);
  return s;
}

double TriMesh::edge_length(std::size_t e) const {
  const Point& a = vertices[edges[e].vertices[0]];
  const Point& b = vertices[edges[e].vertices[1]];
  return std::hypot(b.x - a.x, b.y - a.y);
}

Point TriMesh::edge_midpoint(std::size_t e) const {
  const Point& a = vertices[edges[e].vertices[0]];
  const Point& b = vertices[edges[e].vertices[1]];
  return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

std::size_t TriMesh::num_boundary_edges() const {
  return static_cast<std::size_t>(std::count_if(edge_tags.begin(), edge_tags.end(),
                                                [](BoundaryTag t) { return t != BoundaryTag::interior; }));
}

std::size_t TriMesh::num_boundary_vertices() const {
  return static_cast<std::size_t>(std::count_if(vertex_tags.begin(), vertex_tags.end(),
                                                [](BoundaryTag t) { return t != BoundaryTag::interior; }));
}

namespace {

bool on_box(const TriMesh& m, Point p) {
  const double tol = 1e-12 * std::max(1.0, std::max(m.box_max.x - m.box_min.x, m.box_max.y - m.box_min.y));
  return std::abs(p.x - m.box_min.x) <= tol || std::abs(p.x - m.box_max.x) <= tol ||
         std::abs(p.y - m.box_min.y) <= tol || std::abs(p.y - m.box_max.y) <= tol;
}

bool left_of(const TriMesh& m, std::size_t cell, std::size_t lo, std::size_t hi) {
  // Cells are counterclockwise, so the cell is left of (lo -> hi) exactly when
  // lo -> hi appears in its cyclic vertex order.
  const auto& t = m.cells[cell];
  for (int k = 0; k < 3; ++k) {
    if (t[k] == lo && t[(k + 1) % 3] == hi) return true;
  }
  return false;
}

}  // namespace

void build_edges(TriMesh& mesh) {
  std::map<std::pair<std::size_t, std::size_t>, std::array<std::size_t, 2>> found;
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    if (!(mesh.signed_area(c) > 0.0)) {
      throw MeshError("cell " + std::to_string(c) + " has non-positive signed area");
    }
    const auto& t = mesh.cells[c];
    for (int k = 0; k < 3; ++k) {
      std::size_t a = t[(k + 1) % 3];
      std::size_t b = t[(k + 2) % 3];
      if (a > b) std::swap(a, b);
      auto [it, inserted] = found.try_emplace({a, b}, std::array<std::size_t, 2>{c, kNoCell});
      if (!inserted) {
        if (it->second[1] != kNoCell) {
          throw MeshError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                          ") shared by more than two cells");
        }
        it->second[1] = c;
      }
    }
  }

  mesh.edges.clear();
  mesh.edges.reserve(found.size());
  mesh.edge_tags.assign(found.size(), BoundaryTag::interior);
  mesh.vertex_tags.assign(mesh.vertices.size(), BoundaryTag::interior);
  for (const auto& [key, adj] : found) {
    MeshEdge e;
    e.vertices = {key.first, key.second};
    e.cells = adj;
    if (e.cells[1] != kNoCell && !left_of(mesh, e.cells[0], key.first, key.second)) {
      std::swap(e.cells[0], e.cells[1]);
    }
    const std::size_t idx = mesh.edges.size();
    mesh.edges.push_back(e);
    if (e.cells[1] == kNoCell) {
      const BoundaryTag tag =
          on_box(mesh, mesh.edge_midpoint(idx)) ? BoundaryTag::outer : BoundaryTag::hole;
      mesh.edge_tags[idx] = tag;
      for (std::size_t v : e.vertices) {
        if (mesh.vertex_tags[v] != BoundaryTag::outer) mesh.vertex_tags[v] = tag;
      }
    }
  }
}

TriMesh unit_square_mesh(std::size_t n) {
  if (n == 0) throw MeshError("unit_square_mesh: n must be at least 1");
  TriMesh m;
  m.h = 1.0 / static_cast<double>(n);
  m.vertices.reserve((n + 1) * (n + 1));
  for (std::size_t j = 0; j <= n; ++j) {
    for (std::size_t i = 0; i <= n; ++i) {
      m.vertices.push_back({static_cast<double>(i) * m.h, static_cast<double>(j) * m.h});
    }
  }
  auto vid = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
  m.cells.reserve(2 * n * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t v00 = vid(i, j), v10 = vid(i + 1, j);
      const std::size_t v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      m.cells.push_back({v00, v10, v11});
      m.cells.push_back({v00, v11, v01});
    }
  }
  build_edges(m);
  return m;
}

TriMesh refine_uniform(const TriMesh& mesh) {
  TriMesh m;
  m.h = 0.5 * mesh.h;
  m.box_min = mesh.box_min;
  m.box_max = mesh.box_max;
  m.staircase_hole = mesh.staircase_hole;
  m.vertices = mesh.vertices;
  const std::size_t nv = mesh.vertices.size();
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) m.vertices.push_back(mesh.edge_midpoint(e));

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_index;
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    edge_index[{mesh.edges[e].vertices[0], mesh.edges[e].vertices[1]}] = e;
  }
  auto mid = [&](std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    return nv + edge_index.at({a, b});
  };

  m.cells.reserve(4 * mesh.cells.size());
  m.parent_cell.reserve(4 * mesh.cells.size());
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    const auto& t = mesh.cells[c];
    const std::size_t m0 = mid(t[1], t[2]);
    const std::size_t m1 = mid(t[0], t[2]);
    const std::size_t m2 = mid(t[0], t[1]);
    m.cells.push_back({t[0], m2, m1});
    m.cells.push_back({m2, t[1], m0});
    m.cells.push_back({m1, m0, t[2]});
    m.cells.push_back({m0, m1, m2});
    for (int k = 0; k < 4; ++k) m.parent_cell.push_back(c);
  }
  build_edges(m);
  return m;
}

TriMesh punch_hole(const TriMesh& mesh, Point center, double radius) {
  if (center.x <= mesh.box_min.x || center.x >= mesh.box_max.x || center.y <= mesh.box_min.y ||
      center.y >= mesh.box_max.y) {
    throw MeshError("punch_hole: center outside the mesh box");
  }
  if (radius < 0.0) throw MeshError("punch_hole: negative radius");
  if (radius == 0.0) return mesh;

  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    const Point g = mesh.centroid(c);
    if (std::hypot(g.x - center.x, g.y - center.y) >= radius) kept.push_back(c);
  }
  if (kept.empty()) throw MeshError("punch_hole: removal disconnects the mesh (no cells remain)");

  TriMesh m;
  m.h = mesh.h;
  m.box_min = mesh.box_min;
  m.box_max = mesh.box_max;
  m.staircase_hole = kept.size() < mesh.cells.size() || mesh.staircase_hole;
  std::vector<std::size_t> remap(mesh.vertices.size(), kNoCell);
  for (std::size_t c : kept) {
    std::array<std::size_t, 3> t{};
    for (int k = 0; k < 3; ++k) {
      const std::size_t v = mesh.cells[c][k];
      if (remap[v] == kNoCell) {
        remap[v] = m.vertices.size();
        m.vertices.push_back(mesh.vertices[v]);
      }
      t[k] = remap[v];
    }
    m.cells.push_back(t);
  }
  build_edges(m);

  // Edge connectivity of the remaining cells.
  std::vector<std::vector<std::size_t>> nbr(m.cells.size());
  for (const auto& e : m.edges) {
    if (e.cells[1] != kNoCell) {
      nbr[e.cells[0]].push_back(e.cells[1]);
      nbr[e.cells[1]].push_back(e.cells[0]);
    }
  }
  std::vector<bool> seen(m.cells.size(), false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!q.empty()) {
    const std::size_t c = q.front();
    q.pop();
    for (std::size_t d : nbr[c]) {
      if (!seen[d]) {
        seen[d] = true;
        ++reached;
        q.push(d);
      }
    }
  }
  if (reached != m.cells.size()) throw MeshError("punch_hole: removal disconnects the mesh");
  return m;
}

EdgeTopology edge_topology(const TriMesh& mesh) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> index;
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    index[{mesh.edges[e].vertices[0], mesh.edges[e].vertices[1]}] = e;
  }
  EdgeTopology topo;
  topo.cell_edges.resize(mesh.cells.size());
  topo.signs.resize(mesh.cells.size());
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    const auto& t = mesh.cells[c];
    for (int k = 0; k < 3; ++k) {
      std::size_t a = t[(k + 1) % 3];
      std::size_t b = t[(k + 2) % 3];
      // a -> b runs counterclockwise around the cell, so the cell is left of
      // a -> b; the global orientation is lo -> hi.
      const int sign = a < b ? 1 : -1;
      if (a > b) std::swap(a, b);
      topo.cell_edges[c][k] = index.at({a, b});
      topo.signs[c][k] = sign;
    }
  }
  return topo;
}

void write_mesh(std::ostream& os, const TriMesh& mesh) {
  auto tag = [](BoundaryTag t) { return static_cast<int>(t); };
  os.precision(17);
  os << "# porodec mesh v1 h=" << mesh.h << (mesh.staircase_hole ? " staircase-hole" : "") << '\n';
  os << "vertices " << mesh.vertices.size() << '\n';
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    os << mesh.vertices[v].x << ' ' << mesh.vertices[v].y << ' ' << tag(mesh.vertex_tags[v]) << '\n';
  }
  os << "cells " << mesh.cells.size() << '\n';
  for (const auto& c : mesh.cells) os << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  os << "edges " << mesh.edges.size() << '\n';
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    const auto& ed = mesh.edges[e];
    auto cell = [](std::size_t c) { return c == kNoCell ? std::string("-1") : std::to_string(c); };
    os << ed.vertices[0] << ' ' << ed.vertices[1] << ' ' << cell(ed.cells[0]) << ' '
       << cell(ed.cells[1]) << ' ' << tag(mesh.edge_tags[e]) << '\n';
  }
}

}  // namespace porodec
