#pragma once

#include <array>
#include <span>
#include <vector>

#include "sdg/mesh.hpp"

namespace sdg {

enum class EdgeKind {
  primal_interior,  // F_u^0
  primal_boundary,  // F_u \ F_u^0
  dual,             // F_p
};

/// An edge of the sub-triangulation. `tris[0]` is the first adjacent
/// sub-triangle and `normal` is its outward unit normal; jumps are taken as
/// value(tris[0]) - value(tris[1]).
struct Edge {
  std::array<int, 2> nodes{};
  EdgeKind kind = EdgeKind::dual;
  Vec2 normal = Vec2::Zero();
  double length = 0.0;
  std::array<int, 2> tris{-1, -1};
  int tag = 0;  // boundary marker for primal boundary edges
  int cell = -1;  // owning primal cell for dual edges

  [[nodiscard]] bool is_primal() const { return kind != EdgeKind::dual; }
  [[nodiscard]] bool on_boundary() const { return kind == EdgeKind::primal_boundary; }
};

/// Sub-triangle (interior point, v_i, v_{i+1}) of a primal cell.
struct SubTriangle {
  int cell = -1;
  std::array<int, 3> nodes{};  // nodes[0] is the interior point
  int primal_edge = -1;
  /// dual_edges[0] joins nodes[0]-nodes[1], dual_edges[1] joins nodes[0]-nodes[2]
  std::array<int, 2> dual_edges{};
  double area = 0.0;
  double diameter = 0.0;
};

/// Placement of the interior point of each primal cell.
struct InteriorPointRule {
  /// Offset from the centroid as a fraction of the cell diameter.
  double perturbation = 0.0;
  Vec2 direction{0.8, 0.6};
};

class StaggeredMesh {
 public:
  StaggeredMesh(PrimalMesh primal, InteriorPointRule rule = {});

  [[nodiscard]] const PrimalMesh& primal() const { return primal_; }
  [[nodiscard]] int num_cells() const { return primal_.num_cells(); }
  [[nodiscard]] int num_triangles() const { return static_cast<int>(tris_.size()); }
  [[nodiscard]] int num_edges() const { return static_cast<int>(edges_.size()); }

  /// Mesh vertices followed by one interior point per cell.
  [[nodiscard]] std::span<const Vec2> points() const { return points_; }
  [[nodiscard]] const Vec2& point(int i) const { return points_[i]; }
  [[nodiscard]] const Vec2& interior_point(int cell) const { return points_[interior_offset_ + cell]; }

  [[nodiscard]] std::span<const Edge> edges() const { return edges_; }
  [[nodiscard]] const Edge& edge(int e) const { return edges_[e]; }
  [[nodiscard]] std::span<const SubTriangle> triangles() const { return tris_; }
  [[nodiscard]] const SubTriangle& triangle(int t) const { return tris_[t]; }

  /// Sub-triangles of a primal cell are stored contiguously.
  [[nodiscard]] int cell_first_triangle(int cell) const { return cell_tri_offset_[cell]; }
  [[nodiscard]] int cell_triangle_count(int cell) const {
    return cell_tri_offset_[cell + 1] - cell_tri_offset_[cell];
  }

  [[nodiscard]] std::span<const int> primal_edges() const { return primal_edges_; }
  [[nodiscard]] std::span<const int> dual_edges() const { return dual_edges_; }
  [[nodiscard]] int count(EdgeKind kind) const;

  /// Dual cell D(e) of a primal edge: its one or two adjacent sub-triangles.
  [[nodiscard]] std::span<const int> dual_cell(int primal_edge) const;

  /// Maximum sub-triangle diameter.
  [[nodiscard]] double h() const { return h_; }

  /// Index of a sub-triangle containing x (boundary inclusive), or -1.
  [[nodiscard]] int locate(const Vec2& x, double tol = 1e-12) const;

 private:
  PrimalMesh primal_;
  std::vector<Vec2> points_;
  int interior_offset_ = 0;
  std::vector<Edge> edges_;
  std::vector<SubTriangle> tris_;
  std::vector<int> cell_tri_offset_;
  std::vector<int> primal_edges_;
  std::vector<int> dual_edges_;
  double h_ = 0.0;
};

}  // namespace sdg
