#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "oracles.hpp"
#include "sdg/fespace.hpp"
#include "sdg/quadrature.hpp"

using namespace sdg;
using std::numbers::pi;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// int over the reference triangle of x^a y^b = a! b! / (a+b+2)!
double ref_monomial_integral(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

}  // namespace

TEST_CASE("quadrature rules") {
  const auto& t1 = triangle_rule(1);
  double area = 0.0;
  for (double w : t1.weights) area += w;
  CHECK(area == doctest::Approx(0.5).epsilon(1e-15));

  const auto& e3 = edge_rule(3);
  double m3 = 0.0;
  for (std::size_t i = 0; i < e3.points.size(); ++i) m3 += e3.weights[i] * std::pow(e3.points[i], 3);
  CHECK(std::abs(m3 - 0.25) <= 1e-15);

  // random polynomial of degree 2k+2 against the symbolic monomial integral
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int k = 0; k <= 3; ++k) {
    const int d = 2 * k + 2;
    const auto& rule = triangle_rule(d);
    std::vector<std::array<double, 3>> terms;
    double exact = 0.0;
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b) {
        const double c = dist(gen);
        terms.push_back({static_cast<double>(a), static_cast<double>(b), c});
        exact += c * ref_monomial_integral(a, b);
      }
    double approx = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      double v = 0.0;
      for (const auto& [a, b, c] : terms) v += c * std::pow(rule.points[q].x(), a) * std::pow(rule.points[q].y(), b);
      approx += rule.weights[q] * v;
      CHECK(rule.weights[q] > 0.0);
    }
    CHECK(std::abs(approx - exact) <= 1e-13);
  }
  CHECK_THROWS_AS(triangle_rule(-1), std::invalid_argument);
  CHECK_THROWS_AS(edge_rule(max_quadrature_degree + 1), std::invalid_argument);
}

TEST_CASE("space dimensions against the rank oracle") {
  const StaggeredMesh one(generate_uniform_square(1));
  {
    const SpaceSet sp(one, 0);
    CHECK(sp.scalar.num_dofs() == 4 + 0);
    CHECK(oracle::rank_oracle_dimension(sp.scalar, true) == sp.scalar.num_dofs() - oracle::boundary_scalar_dofs(sp));
    CHECK(oracle::rank_oracle_dimension(sp.scalar, true) == 0);
  }
  {
    const SpaceSet sp(one, 1);
    CHECK(sp.flux.num_dofs() == 16);
    CHECK(oracle::rank_oracle_dimension(sp.flux, false) == 16);
  }

  std::vector<PrimalMesh> meshes{generate_uniform_square(2), generate_trapezoidal(4), generate_shishkin(4, 1e-2)};
  {
    // L-shaped fixture with a hanging node
    PrimalMesh l;
    l.vertices = {{0, 0}, {0.5, 0}, {1, 0}, {2, 0}, {0, 1}, {0.5, 1}, {1, 1}, {2, 1}, {0, 2}, {1, 2}};
    l.cells = {{0, 1, 5, 4}, {1, 2, 6, 5}, {2, 3, 7, 6}, {4, 6, 9, 8}};
    split_hanging_edges(l);
    meshes.push_back(l);
  }
  for (const auto& pm : meshes) {
    REQUIRE(pm.num_cells() <= 16);
    const StaggeredMesh sm(pm);
    for (int k = 0; k <= 2; ++k) {
      CAPTURE(k);
      const SpaceSet sp(sm, k);
      CHECK(oracle::rank_oracle_dimension(sp.scalar, false) == sp.scalar.num_dofs());
      CHECK(oracle::rank_oracle_dimension(sp.scalar, true) == sp.scalar.num_dofs() - oracle::boundary_scalar_dofs(sp));
      CHECK(oracle::rank_oracle_dimension(sp.flux, false) == sp.flux.num_dofs());
      CHECK(oracle::rank_oracle_dimension(sp.rotation, false) == sp.rotation.num_dofs());
      if (k == 0) CHECK(sp.rotation.num_dofs() == sm.num_cells());

      // the global basis is independent and lies in the constrained space
      for (const FiniteElementSpace* s : {&sp.scalar, &sp.flux, &sp.rotation}) {
        const Eigen::MatrixXd basis = oracle::global_basis_in_broken(*s);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
        lu.setThreshold(1e-10);
        CHECK(lu.rank() == s->num_dofs());
      }
    }
  }
}

TEST_CASE("trace continuity of random fields") {
  const StaggeredMesh sm(generate_trapezoidal(4));
  for (int k = 0; k <= 2; ++k) {
    const SpaceSet sp(sm, k);
    const Eigen::VectorXd cs = oracle::random_vector(sp.scalar.num_dofs(), 11 + k);
    const Eigen::VectorXd cf = oracle::random_vector(sp.flux.num_dofs(), 21 + k);
    const Eigen::VectorXd cm = oracle::random_vector(sp.rotation.num_dofs(), 31 + k);
    const auto& er = edge_rule(2 * k + 2);
    double js = 0.0, jf = 0.0, jm = 0.0;
    auto gathered = [](const FiniteElementSpace& s, const Eigen::VectorXd& c, int t) {
      const auto d = s.local_dofs(t);
      Eigen::VectorXd l(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) l[i] = c[d[i]];
      return l;
    };
    for (int e = 0; e < sm.num_edges(); ++e) {
      const auto& edge = sm.edge(e);
      if (edge.tris[1] < 0) continue;
      for (double s : er.points) {
        const Vec2 x = edge_point(sm, e, s);
        std::array<double, 2> vs{}, vm{}, vf{};
        for (int side = 0; side < 2; ++side) {
          const int t = edge.tris[side];
          vs[side] = (oracle::local_values(sp.scalar, t, x) * gathered(sp.scalar, cs, t))(0);
          vm[side] = (oracle::local_values(sp.rotation, t, x) * gathered(sp.rotation, cm, t))(0);
          vf[side] = edge.normal.dot(oracle::local_values(sp.flux, t, x) * gathered(sp.flux, cf, t));
        }
        if (edge.is_primal()) js = std::max(js, std::abs(vs[0] - vs[1]));
        if (!edge.is_primal()) {
          jf = std::max(jf, std::abs(vf[0] - vf[1]));
          jm = std::max(jm, std::abs(vm[0] - vm[1]));
        }
      }
    }
    CHECK(js <= 1e-12);
    CHECK(jf <= 1e-12);
    CHECK(jm <= 1e-12);
  }
}

TEST_CASE("interpolation preserves polynomials") {
  const StaggeredMesh sm(generate_trapezoidal(4), InteriorPointRule{0.1});
  for (int k = 0; k <= 3; ++k) {
    CAPTURE(k);
    const SpaceSet sp(sm, k);
    // a fixed polynomial of total degree k
    auto poly = [k](const Vec2& x, double shift) {
      double v = 0.3 + shift;
      for (int d = 1; d <= k; ++d) v += (0.7 - 0.1 * d) * std::pow(x.x() - 0.2, d - (d / 2)) * std::pow(x.y() + shift, d / 2);
      return v;
    };
    const ScalarFunction w = [&](const Vec2& x) { return poly(x, 0.0); };
    const VectorFunction phi = [&](const Vec2& x) { return Vec2(poly(x, 0.1), poly(x, -0.4)); };
    const int deg = 2 * k + 4;
    CHECK(oracle::l2_error(sp.scalar, interpolate_moments(sp.scalar, w), w, deg) <= 1e-12);
    CHECK(oracle::l2_error(sp.flux, interpolate_normal_moments(sp.flux, phi), phi, deg) <= 1e-12);
    CHECK(oracle::l2_error(sp.rotation, interpolate_nodal(sp.rotation, w), w, deg) <= 1e-12);
  }
  const SpaceSet sp(sm, 1);
  CHECK(interpolate_moments(sp.scalar, [](const Vec2&) { return 0.0; }).norm() == 0.0);
}

TEST_CASE("interpolation moment conditions on smooth data") {
  const StaggeredMesh sm(generate_uniform_square(3));
  const int k = 2;
  const SpaceSet sp(sm, k);
  const ScalarFunction w = [](const Vec2& x) { return std::exp(x.x()) * std::sin(3 * x.y()); };
  const Eigen::VectorXd iw = interpolate_moments(sp.scalar, w);
  const auto& er = edge_rule(2 * k + 2);
  double worst = 0.0;
  for (int e : sm.primal_edges()) {
    const auto& edge = sm.edge(e);
    const int t = edge.tris[0];
    const auto d = sp.scalar.local_dofs(t);
    Eigen::VectorXd local(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) local[i] = iw[d[i]];
    for (int j = 0; j <= k; ++j) {
      double m = 0.0;
      for (std::size_t q = 0; q < er.points.size(); ++q) {
        const Vec2 x = edge_point(sm, e, er.points[q]);
        const double diff = (oracle::local_values(sp.scalar, t, x) * local)(0) - w(x);
        m += er.weights[q] * diff * legendre01(j, er.points[q]);
      }
      worst = std::max(worst, std::abs(m));
    }
  }
  CHECK(worst <= 1e-13);
}

TEST_CASE("interpolation convergence") {
  const ScalarFunction w = [](const Vec2& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  const VectorFunction phi = [](const Vec2& x) { return Vec2(std::sin(2 * pi * x.y()), std::cos(2 * pi * x.x())); };
  const ScalarFunction g = [](const Vec2& x) { return std::sin(pi * x.x()) * std::cos(pi * x.y()); };
  std::vector<double> es, ef, em;
  for (int n : {4, 8, 16}) {
    const StaggeredMesh sm(generate_uniform_square(n));
    const SpaceSet sp(sm, 1);
    es.push_back(oracle::l2_error(sp.scalar, interpolate_moments(sp.scalar, w), w, 6));
    ef.push_back(oracle::l2_error(sp.flux, interpolate_normal_moments(sp.flux, phi), phi, 6));
    em.push_back(oracle::l2_error(sp.rotation, interpolate_nodal(sp.rotation, g), g, 6));
  }
  for (int i = 0; i + 1 < 3; ++i) {
    CHECK(es[i] / es[i + 1] == doctest::Approx(4.0).epsilon(0.15));
    CHECK(em[i] / em[i + 1] == doctest::Approx(4.0).epsilon(0.15));
  }
  CHECK(ef[1] / ef[2] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("evaluation") {
  const StaggeredMesh sm(generate_uniform_square(1));
  const SpaceSet sp(sm, 1);
  const Eigen::VectorXd one = interpolate_moments(sp.scalar, [](const Vec2&) { return 1.0; });
  for (int t = 0; t < sm.num_triangles(); ++t) {
    const auto& tr = sm.triangle(t);
    const Vec2 c = (sm.point(tr.nodes[0]) + sm.point(tr.nodes[1]) + sm.point(tr.nodes[2])) / 3.0;
    CHECK(evaluate_scalar(sp.scalar, one, t, c) == doctest::Approx(1.0).epsilon(1e-14));
  }
  const Eigen::VectorXd lin = interpolate_moments(sp.scalar, [](const Vec2& x) { return x.x() + x.y(); });
  CHECK(evaluate_scalar(sp.scalar, lin, 0, Vec2(0.5, 0.5)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(evaluate_scalar(sp.scalar, lin, 0, Vec2(0.5, 0.9)), std::out_of_range);

  // dual-basis oracle: recover the physical polynomial from the local dof
  // values with an independent moment system and compare point values
  const StaggeredMesh tm(generate_trapezoidal(2), InteriorPointRule{0.05});
  for (int k = 1; k <= 3; ++k) {
    const SpaceSet s(tm, k);
    const Eigen::VectorXd c = oracle::random_vector(s.scalar.num_dofs(), 100 + k);
    const int n = poly_dim(k);
    const auto& er = edge_rule(2 * k + 6);
    const auto& tr = triangle_rule(2 * k + 6);
    for (int t = 0; t < tm.num_triangles(); ++t) {
      const auto& tri = tm.triangle(t);
      const TriangleMap map(tm, t);
      const Vec2 x0 = tm.point(tri.nodes[0]);
      auto phys = [&](const Vec2& x) {
        Eigen::VectorXd m(n);
        int idx = 0;
        for (int d = 0; d <= k; ++d)
          for (int b = 0; b <= d; ++b) m[idx++] = std::pow(x.x() - x0.x(), d - b) * std::pow(x.y() - x0.y(), b);
        return m;
      };
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
      for (std::size_t q = 0; q < er.points.size(); ++q) {
        const Eigen::VectorXd m = phys(edge_point(tm, tri.primal_edge, er.points[q]));
        for (int j = 0; j <= k; ++j) a.row(j) += er.weights[q] * legendre01(j, er.points[q]) * m.transpose();
      }
      const int ni = poly_dim(k - 1);
      for (std::size_t q = 0; q < tr.points.size(); ++q) {
        const Eigen::VectorXd m = phys(map.to_physical(tr.points[q]));
        const Vec2& xi = tr.points[q];
        int idx = 0;
        for (int d = 0; d < k; ++d)
          for (int b = 0; b <= d; ++b, ++idx)
            a.row(k + 1 + idx) += 2.0 * tr.weights[q] * std::pow(xi.x(), d - b) * std::pow(xi.y(), b) * m.transpose();
      }
      (void)ni;
      const auto dofs = s.scalar.local_dofs(t);
      Eigen::VectorXd rhs(n);
      for (int i = 0; i < n; ++i) rhs[i] = c[dofs[i]];
      const Eigen::VectorXd p = a.fullPivLu().solve(rhs);
      const Vec2 x = map.to_physical(Vec2(0.21, 0.33));
      CHECK(evaluate_scalar(s.scalar, c, t, x) == doctest::Approx(phys(x).dot(p)).epsilon(1e-10));
    }
  }
}

TEST_CASE("nodal interpolant on one sub-triangle matches vertex values") {
  const StaggeredMesh sm(generate_uniform_square(1));
  const SpaceSet sp(sm, 1);
  const ScalarFunction g = [](const Vec2& x) { return x.x() * x.y(); };
  const Eigen::VectorXd c = interpolate_nodal(sp.rotation, g);
  const auto& tri = sm.triangle(0);
  for (int v = 0; v < 3; ++v) {
    const Vec2 x = sm.point(tri.nodes[v]);
    CHECK(evaluate_scalar(sp.rotation, c, 0, x) == doctest::Approx(g(x)).epsilon(1e-14));
  }
}
