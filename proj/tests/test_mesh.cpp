#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "sdg/mesh.hpp"
#include "sdg/staggered_mesh.hpp"

using namespace sdg;

namespace {

double total_triangle_area(const StaggeredMesh& sm) {
  double a = 0.0;
  for (const auto& t : sm.triangles()) a += t.area;
  return a;
}

// L-shaped domain: two fine cells under one coarse cell whose bottom edge
// carries the hanging node (0.5, 1).
const char* l_shape_text = R"(sdgmesh 1
# L-shaped fixture with a hanging node at vertex 5
vertices 10
0 0
0.5 0
1 0
2 0
0 1
0.5 1
1 1
2 1
0 2
1 2
cells 4
4 0 1 5 4
4 1 2 6 5
4 2 3 7 6
4 4 6 9 8
boundary 9
0 1 1
1 2 1
2 3 1
3 7 2
7 6 3
6 9 2
9 8 3
8 4 4
4 0 4
)";

}  // namespace

TEST_CASE("uniform square meshes") {
  const auto m1 = generate_uniform_square(1);
  CHECK(m1.num_cells() == 1);
  CHECK(m1.vertices.size() == 4);
  CHECK(m1.boundary.size() == 4);

  const auto m2 = generate_uniform_square(2);
  CHECK(m2.num_cells() == 4);
  CHECK(m2.vertices.size() == 9);
  CHECK(StaggeredMesh(m2).count(EdgeKind::primal_interior) == 4);

  const auto m8 = generate_uniform_square(8);
  CHECK(std::abs(m8.total_cell_area() - 1.0) <= 1e-14);
  CHECK_THROWS_AS(generate_uniform_square(0), MeshError);
}

TEST_CASE("trapezoidal meshes") {
  CHECK(std::abs(generate_trapezoidal(2).total_cell_area() - 1.0) <= 1e-14);
  CHECK_THROWS_AS(generate_trapezoidal(3), MeshError);
  CHECK_THROWS_AS(generate_trapezoidal(0), MeshError);

  // convex quads: every corner turns left, so the centroid sees every edge
  const auto m4 = generate_trapezoidal(4);
  for (int c = 0; c < m4.num_cells(); ++c) {
    const auto& loop = m4.cells[c];
    const Vec2 g = m4.cell_centroid(c);
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Vec2& a = m4.vertices[loop[i]];
      const Vec2& b = m4.vertices[loop[(i + 1) % loop.size()]];
      const Vec2& d = m4.vertices[loop[(i + 2) % loop.size()]];
      CHECK(signed_area(a, b, d) > 0.0);
      CHECK(signed_area(g, a, b) > 0.0);
    }
  }
  CHECK_NOTHROW(StaggeredMesh{m4});

  // direct angle scan
  const auto m8 = generate_trapezoidal(8);
  double min_angle = 180.0;
  for (const auto& loop : m8.cells)
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Vec2& p = m8.vertices[loop[(i + loop.size() - 1) % loop.size()]];
      const Vec2& q = m8.vertices[loop[i]];
      const Vec2& r = m8.vertices[loop[(i + 1) % loop.size()]];
      const double cosang = (p - q).normalized().dot((r - q).normalized());
      min_angle = std::min(min_angle, std::acos(cosang) * 180.0 / std::numbers::pi);
    }
  CHECK(min_angle >= 10.0);
}

TEST_CASE("Shishkin meshes") {
  const double delta = shishkin_transition(1e-2);
  CHECK(delta == doctest::Approx(0.03 * std::log(100.0)).epsilon(1e-14));
  CHECK(delta == doctest::Approx(0.138155).epsilon(1e-6));
  CHECK(shishkin_transition(0.5) == 0.5);

  const auto uni = generate_shishkin(8, 0.5);
  for (int i = 0; i <= 8; ++i) CHECK(uni.vertices[i].x() == doctest::Approx(i / 8.0).epsilon(1e-15));

  const auto m = generate_shishkin(8, 1e-2);
  CHECK(m.vertices[4].x() == doctest::Approx(delta).epsilon(1e-15));
  CHECK(m.vertices[8].x() == 1.0);
  CHECK_THROWS_AS(generate_shishkin(8, 0.0), MeshError);
  CHECK_THROWS_AS(generate_shishkin(8, 1.0), MeshError);
  CHECK_THROWS_AS(generate_shishkin(7, 0.1), MeshError);
}

TEST_CASE("basin mesh") {
  const BasinSpec spec;
  const auto m = generate_basin(spec);
  CHECK_NOTHROW(validate(m));
  REQUIRE(m.cell_tags.size() == m.cells.size());
  int confining = 0;
  for (int c = 0; c < m.num_cells(); ++c) {
    const int tag = m.cell_tag(c);
    CHECK((tag == basin_tag::aquifer || tag == basin_tag::confining));
    // confining cells lie between 380 and 400 m above the basin floor
    const double y = m.cell_centroid(c).y();
    CHECK((tag == basin_tag::confining) == (y > 380.0 && y < 400.0));
    confining += tag == basin_tag::confining;
  }
  CHECK(confining == 2 * spec.columns);

  CHECK(basin_depth(spec, 0.0) == 420.0);
  CHECK(basin_depth(spec, 5000.0) == 120.0);

  // marker-A segments follow the bedrock profile
  const double bedrock_high = spec.deep_thickness - spec.shallow_thickness;
  for (const auto& s : m.boundary) {
    const Vec2& a = m.vertices[s.a];
    const Vec2& b = m.vertices[s.b];
    if (s.tag == basin_tag::A) {
      const bool floor = a.y() == 0.0 && b.y() == 0.0 && std::max(a.x(), b.x()) <= spec.step_x;
      const bool face = a.x() == spec.step_x && b.x() == spec.step_x && std::max(a.y(), b.y()) <= bedrock_high;
      const bool shelf = a.y() == bedrock_high && b.y() == bedrock_high && std::min(a.x(), b.x()) >= spec.step_x;
      CHECK((floor || face || shelf));
    }
    if (s.tag == basin_tag::D) CHECK((a.y() == 420.0 && b.y() == 420.0));
    if (s.tag == basin_tag::B) CHECK((a.x() == 5000.0 && b.x() == 5000.0));
    if (s.tag == basin_tag::C) CHECK((a.x() == 0.0 && std::min(a.y(), b.y()) >= 380.0 - 1e-9));
    if (s.tag == basin_tag::E) CHECK((a.x() == 0.0 && std::max(a.y(), b.y()) <= 380.0 + 1e-9));
  }
  BasinSpec bad;
  bad.columns = 0;
  CHECK_THROWS_AS(generate_basin(bad), MeshError);
  CHECK_NOTHROW(StaggeredMesh{m});
}

TEST_CASE("mesh text format") {
  const auto m2 = generate_uniform_square(2);
  const auto back = load_primal_mesh(save_primal_mesh(m2));
  REQUIRE(back.vertices.size() == m2.vertices.size());
  for (std::size_t i = 0; i < m2.vertices.size(); ++i) CHECK(back.vertices[i] == m2.vertices[i]);
  CHECK(back.cells == m2.cells);

  SUBCASE("hanging node") {
    const auto l = load_primal_mesh(l_shape_text);
    REQUIRE(l.num_cells() == 4);
    CHECK(l.cells[3] == std::vector<int>{4, 5, 6, 9, 8});
    const StaggeredMesh sm(l);
    CHECK(sm.cell_triangle_count(3) == 5);
    // the two halves of the coarse edge each pair with exactly one fine cell
    int matched = 0;
    for (int e : sm.primal_edges()) {
      const auto& edge = sm.edge(e);
      const std::set<int> nodes{edge.nodes[0], edge.nodes[1]};
      if (nodes == std::set<int>{4, 5} || nodes == std::set<int>{5, 6}) {
        REQUIRE(edge.kind == EdgeKind::primal_interior);
        const int c0 = sm.triangle(edge.tris[0]).cell;
        const int c1 = sm.triangle(edge.tris[1]).cell;
        CHECK(std::set<int>{c0, c1} == std::set<int>{3, nodes.count(4) ? 0 : 1});
        ++matched;
      }
    }
    CHECK(matched == 2);
    CHECK(std::abs(total_triangle_area(sm) - 3.0) <= 3e-12);
  }

  SUBCASE("rejections") {
    const std::string bowtie = "sdgmesh 1\nvertices 4\n0 0\n1 1\n1 0\n0 1\ncells 1\n4 0 1 2 3\nboundary 0\n";
    CHECK_THROWS_AS(load_primal_mesh(bowtie), MeshError);
    try {
      (void)load_primal_mesh("sdgmesh 1\nvertices 2\n0 0\n1 x\n");
      FAIL("expected a parse error");
    } catch (const MeshError& e) {
      CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
    CHECK_THROWS_AS(load_primal_mesh("sdgmesh 2\n"), MeshError);
    // clockwise cell
    CHECK_THROWS_AS(load_primal_mesh("sdgmesh 1\nvertices 3\n0 0\n0 1\n1 0\ncells 1\n3 0 1 2\nboundary 0\n"),
                    MeshError);
  }
}

TEST_CASE("staggered mesh construction") {
  const StaggeredMesh s1(generate_uniform_square(1));
  CHECK(s1.num_triangles() == 4);
  CHECK(s1.count(EdgeKind::dual) == 4);
  CHECK(s1.count(EdgeKind::primal_interior) == 0);
  CHECK(s1.count(EdgeKind::primal_boundary) == 4);

  const StaggeredMesh s2(generate_uniform_square(2));
  CHECK(s2.num_triangles() == 16);
  CHECK(s2.count(EdgeKind::dual) == 16);
  CHECK(s2.count(EdgeKind::primal_interior) == 4);

  PrimalMesh tri;
  tri.vertices = {{0, 0}, {2, 0}, {0.5, 1.5}};
  tri.cells = {{0, 1, 2}};
  const StaggeredMesh st(tri);
  REQUIRE(st.num_triangles() == 3);
  for (const auto& t : st.triangles()) CHECK(t.area == doctest::Approx(tri.cell_area(0) / 3.0).epsilon(1e-14));

  // a perturbation pushing the interior point out of the cell is rejected
  try {
    (void)StaggeredMesh(generate_uniform_square(2), InteriorPointRule{0.6, {1.0, 0.0}});
    FAIL("expected kernel rejection");
  } catch (const MeshError& e) {
    CHECK(std::string(e.what()).find("cell 0") != std::string::npos);
  }
  CHECK_NOTHROW(StaggeredMesh(generate_uniform_square(2), InteriorPointRule{0.1}));
}

TEST_CASE("staggered mesh invariants") {
  std::vector<PrimalMesh> meshes{generate_uniform_square(4), generate_trapezoidal(4), generate_shishkin(6, 1e-2),
                                 load_primal_mesh(l_shape_text)};
  for (const auto& pm : meshes) {
    const StaggeredMesh sm(pm);
    const double area = pm.domain_area();
    // area conservation
    CHECK(std::abs(total_triangle_area(sm) - area) <= 1e-12 * area);
    CHECK(std::abs(pm.total_cell_area() - area) <= 1e-12 * area);

    // edge partition: each sub-triangle has one primal and two dual edges
    std::vector<int> seen(sm.num_edges(), 0);
    for (int t = 0; t < sm.num_triangles(); ++t) {
      const auto& tr = sm.triangle(t);
      CHECK(sm.edge(tr.primal_edge).is_primal());
      CHECK(sm.edge(tr.dual_edges[0]).kind == EdgeKind::dual);
      CHECK(sm.edge(tr.dual_edges[1]).kind == EdgeKind::dual);
      ++seen[tr.primal_edge];
      ++seen[tr.dual_edges[0]];
      ++seen[tr.dual_edges[1]];
    }
    for (int e = 0; e < sm.num_edges(); ++e) {
      const auto& edge = sm.edge(e);
      CHECK(seen[e] == (edge.kind == EdgeKind::primal_boundary ? 1 : 2));
      if (edge.kind == EdgeKind::dual) {
        CHECK(sm.triangle(edge.tris[0]).cell == edge.cell);
        CHECK(sm.triangle(edge.tris[1]).cell == edge.cell);
      }
      if (edge.kind == EdgeKind::primal_interior)
        CHECK(sm.triangle(edge.tris[0]).cell != sm.triangle(edge.tris[1]).cell);
    }

    // dual-cell cover
    double cover = 0.0;
    for (int e : sm.primal_edges())
      for (int t : sm.dual_cell(e)) cover += sm.triangle(t).area;
    CHECK(std::abs(cover - area) <= 1e-12 * area);

    // normal consistency: outward from tris[0], inward for tris[1]
    for (int e = 0; e < sm.num_edges(); ++e) {
      const auto& edge = sm.edge(e);
      const Vec2 mid = 0.5 * (sm.point(edge.nodes[0]) + sm.point(edge.nodes[1]));
      CHECK(std::abs(edge.normal.norm() - 1.0) <= 1e-14);
      auto centre = [&](int t) {
        const auto& tr = sm.triangle(t);
        return (sm.point(tr.nodes[0]) + sm.point(tr.nodes[1]) + sm.point(tr.nodes[2])) / 3.0;
      };
      CHECK(edge.normal.dot(mid - centre(edge.tris[0])) > 0.0);
      if (edge.tris[1] >= 0) CHECK(edge.normal.dot(mid - centre(edge.tris[1])) < 0.0);
    }
    CHECK(sm.h() > 0.0);
  }
}
