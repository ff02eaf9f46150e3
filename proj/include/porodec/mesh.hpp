#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace porodec {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where a boundary entity sits. Meshes always live inside an axis-aligned
/// box; entities on that box are `outer`, any other boundary is `hole`.
enum class BoundaryTag : std::uint8_t { interior = 0, outer = 1, hole = 2 };

inline constexpr std::size_t kNoCell = static_cast<std::size_t>(-1);

/// Edge oriented from the lower to the higher vertex index. `cells[0]` lies
/// left of the oriented edge when the edge is interior; boundary edges keep
/// their single cell in `cells[0]` and `kNoCell` in `cells[1]`.
struct MeshEdge {
  std::array<std::size_t, 2> vertices{};
  std::array<std::size_t, 2> cells{kNoCell, kNoCell};
};

struct TriMesh {
  std::vector<Point> vertices;
  std::vector<std::array<std::size_t, 3>> cells;  ///< counterclockwise
  std::vector<MeshEdge> edges;                    ///< sorted by (lo, hi)
  std::vector<BoundaryTag> vertex_tags;
  std::vector<BoundaryTag> edge_tags;
  double h = 0.0;
  Point box_min{0.0, 0.0};
  Point box_max{1.0, 1.0};
  /// parent_cell[c] = cell of the previous level that contains c; empty for
  /// unrefined meshes.
  std::vector<std::size_t> parent_cell;
  /// True once a hole was cut by the centroid rule (staircase boundary).
  bool staircase_hole = false;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_cells() const { return cells.size(); }
  std::size_t num_edges() const { return edges.size(); }

  double signed_area(std::size_t c) const;
  Point centroid(std::size_t c) const;
  double total_area() const;
  double edge_length(std::size_t e) const;
  Point edge_midpoint(std::size_t e) const;
  std::size_t num_boundary_edges() const;
  std::size_t num_boundary_vertices() const;
};

/// Cell-to-edge incidence for edge-based spaces. Local edge k of a cell is
/// the edge opposite local vertex k; `signs` is +1 when the cell lies left of
/// the globally oriented edge and -1 otherwise.
struct EdgeTopology {
  std::vector<std::array<std::size_t, 3>> cell_edges;
  std::vector<std::array<int, 3>> signs;
};

/// (n+1)^2 vertices, 2 n^2 cells, every square split bottom-left to top-right.
TriMesh unit_square_mesh(std::size_t n);

/// Removes every cell whose centroid lies strictly inside the disk and
/// re-indexes the remaining vertices. Throws MeshError when the remaining
/// cells are empty or not edge-connected.
TriMesh punch_hole(const TriMesh& mesh, Point center, double radius);

/// Red refinement: every cell becomes four by its edge midpoints. Children of
/// cell c are 4c .. 4c+3 and `parent_cell` records c.
TriMesh refine_uniform(const TriMesh& mesh);

EdgeTopology edge_topology(const TriMesh& mesh);

/// Rebuilds edges and boundary tags from vertices and cells. Used by every
/// constructor above; exposed for meshes assembled by hand.
void build_edges(TriMesh& mesh);

/// Plain-text dump: header line, then `vertices N` with `x y tag` rows,
/// `cells M` with `a b c` rows, `edges E` with `a b left right tag` rows
/// (`-1` for a missing neighbour).
void write_mesh(std::ostream& os, const TriMesh& mesh);

}  // namespace porodec
