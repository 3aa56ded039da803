#include "sdg/staggered_mesh.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace sdg {

namespace {

Vec2 right_normal(const Vec2& from, const Vec2& to) {
  const Vec2 d = to - from;
  return Vec2(d.y(), -d.x()).normalized();
}

}  // namespace

StaggeredMesh::StaggeredMesh(PrimalMesh primal, InteriorPointRule rule) : primal_(std::move(primal)) {
  const int nc = primal_.num_cells();
  points_ = primal_.vertices;
  interior_offset_ = static_cast<int>(points_.size());
  const Vec2 dir = rule.direction.normalized();
  for (int c = 0; c < nc; ++c)
    points_.push_back(primal_.cell_centroid(c) + rule.perturbation * primal_.cell_diameter(c) * dir);

  std::map<std::pair<int, int>, int> boundary_tags;
  for (const auto& s : primal_.boundary) boundary_tags[{std::min(s.a, s.b), std::max(s.a, s.b)}] = s.tag;

  std::map<std::pair<int, int>, int> primal_lookup;
  cell_tri_offset_.assign(nc + 1, 0);
  for (int c = 0; c < nc; ++c) {
    const auto& loop = primal_.cells[c];
    const int m = static_cast<int>(loop.size());
    const int nu = interior_offset_ + c;
    const int first_tri = static_cast<int>(tris_.size());
    cell_tri_offset_[c] = first_tri;
    const double cell_area = primal_.cell_area(c);

    // dual edges nu -> v_i; tris[0] = tau_i, tris[1] = tau_{i-1}
    const int first_dual = static_cast<int>(edges_.size());
    for (int i = 0; i < m; ++i) {
      Edge e;
      e.nodes = {nu, loop[i]};
      e.kind = EdgeKind::dual;
      e.normal = right_normal(points_[nu], points_[loop[i]]);
      e.length = (points_[loop[i]] - points_[nu]).norm();
      e.tris = {first_tri + i, first_tri + (i + m - 1) % m};
      e.cell = c;
      dual_edges_.push_back(static_cast<int>(edges_.size()));
      edges_.push_back(e);
    }

    for (int i = 0; i < m; ++i) {
      const int a = loop[i];
      const int b = loop[(i + 1) % m];
      SubTriangle t;
      t.cell = c;
      t.nodes = {nu, a, b};
      t.dual_edges = {first_dual + i, first_dual + (i + 1) % m};
      t.area = signed_area(points_[nu], points_[a], points_[b]);
      if (!(t.area > 1e-12 * cell_area))
        throw MeshError("interior point of cell " + std::to_string(c) + " is outside the kernel of the polygon");
      t.diameter = std::max({(points_[a] - points_[nu]).norm(), (points_[b] - points_[nu]).norm(),
                             (points_[b] - points_[a]).norm()});
      h_ = std::max(h_, t.diameter);
      const int tri_id = static_cast<int>(tris_.size());

      const auto k = std::make_pair(std::min(a, b), std::max(a, b));
      if (auto it = primal_lookup.find(k); it != primal_lookup.end()) {
        Edge& e = edges_[it->second];
        if (e.tris[1] >= 0 || e.nodes[0] != b)
          throw MeshError("inconsistent adjacency at edge (" + std::to_string(a) + "," + std::to_string(b) + ")");
        e.tris[1] = tri_id;
        e.kind = EdgeKind::primal_interior;
        e.tag = 0;
        t.primal_edge = it->second;
      } else {
        Edge e;
        e.nodes = {a, b};
        e.kind = EdgeKind::primal_boundary;
        e.normal = right_normal(points_[a], points_[b]);
        e.length = (points_[b] - points_[a]).norm();
        e.tris = {tri_id, -1};
        if (auto bt = boundary_tags.find(k); bt != boundary_tags.end()) e.tag = bt->second;
        t.primal_edge = static_cast<int>(edges_.size());
        primal_lookup[k] = t.primal_edge;
        edges_.push_back(e);
      }
      tris_.push_back(t);
    }
  }
  cell_tri_offset_[nc] = static_cast<int>(tris_.size());
  for (int e = 0; e < num_edges(); ++e)
    if (edges_[e].is_primal()) primal_edges_.push_back(e);
}

int StaggeredMesh::count(EdgeKind kind) const {
  return static_cast<int>(std::count_if(edges_.begin(), edges_.end(), [&](const Edge& e) { return e.kind == kind; }));
}

std::span<const int> StaggeredMesh::dual_cell(int primal_edge) const {
  const Edge& e = edges_[primal_edge];
  return {e.tris.data(), static_cast<std::size_t>(e.tris[1] >= 0 ? 2 : 1)};
}

int StaggeredMesh::locate(const Vec2& x, double tol) const {
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = tris_[t];
    const Vec2& a = points_[tri.nodes[0]];
    const Vec2& b = points_[tri.nodes[1]];
    const Vec2& c = points_[tri.nodes[2]];
    const double s = tol * tri.area;
    if (signed_area(a, b, x) >= -s && signed_area(b, c, x) >= -s && signed_area(c, a, x) >= -s) return t;
  }
  return -1;
}

}  // namespace sdg
