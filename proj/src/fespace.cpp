#include "sdg/fespace.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

#include "sdg/quadrature.hpp"

namespace sdg {

void monomials(int k, const Vec2& xi, Eigen::Ref<Eigen::VectorXd> values) {
  int idx = 0;
  for (int d = 0; d <= k; ++d)
    for (int b = 0; b <= d; ++b) {
      const int a = d - b;
      values[idx++] = std::pow(xi.x(), a) * std::pow(xi.y(), b);
    }
}

void monomial_gradients(int k, const Vec2& xi, Eigen::Ref<Eigen::MatrixX2d> grads) {
  int idx = 0;
  for (int d = 0; d <= k; ++d)
    for (int b = 0; b <= d; ++b) {
      const int a = d - b;
      grads(idx, 0) = a > 0 ? a * std::pow(xi.x(), a - 1) * std::pow(xi.y(), b) : 0.0;
      grads(idx, 1) = b > 0 ? b * std::pow(xi.x(), a) * std::pow(xi.y(), b - 1) : 0.0;
      ++idx;
    }
}

TriangleMap::TriangleMap(const StaggeredMesh& mesh, int tri) {
  const auto& t = mesh.triangle(tri);
  origin = mesh.point(t.nodes[0]);
  jacobian.col(0) = mesh.point(t.nodes[1]) - origin;
  jacobian.col(1) = mesh.point(t.nodes[2]) - origin;
  det = jacobian.determinant();
  inverse = jacobian.inverse();
}

Vec2 edge_point(const StaggeredMesh& mesh, int edge, double t) {
  const auto& e = mesh.edge(edge);
  return (1.0 - t) * mesh.point(e.nodes[0]) + t * mesh.point(e.nodes[1]);
}

namespace {

// Reference-triangle lattice index for the nodal (dual-continuous) space.
struct LatticeNode {
  int a;
  int b;
};

std::vector<LatticeNode> lattice(int k) {
  std::vector<LatticeNode> nodes;
  for (int a = 0; a <= k; ++a)
    for (int b = 0; a + b <= k; ++b) nodes.push_back({a, b});
  return nodes;
}

}  // namespace

FiniteElementSpace::FiniteElementSpace(const StaggeredMesh& mesh, SpaceKind kind, int order)
    : mesh_(&mesh), kind_(kind), order_(order) {
  if (order < 0) throw std::invalid_argument("polynomial order must be >= 0");
  const int k = order;
  const int n = poly_dim(k);
  const int ni = poly_dim(k - 1);
  const int ntri = mesh.num_triangles();
  maps_.reserve(ntri);
  for (int t = 0; t < ntri; ++t) maps_.emplace_back(mesh, t);
  edge_dof_offset_.assign(mesh.num_edges(), -1);

  const auto& er = edge_rule(2 * k + 2);
  const auto& tr = triangle_rule(2 * k + 2);
  Eigen::VectorXd m(n), q(ni);

  switch (kind) {
    case SpaceKind::primal_continuous: {
      local_size_ = n;
      for (int e : mesh.primal_edges()) {
        edge_dof_offset_[e] = ndofs_;
        for (int j = 0; j <= k; ++j) {
          dof_edge_.push_back(e);
          dof_cell_.push_back(mesh.edge(e).on_boundary() ? mesh.triangle(mesh.edge(e).tris[0]).cell : -1);
        }
        ndofs_ += k + 1;
      }
      dof_map_.resize(static_cast<std::size_t>(ntri) * n);
      for (int t = 0; t < ntri; ++t) {
        const auto& tri = mesh.triangle(t);
        for (int j = 0; j <= k; ++j) dof_map_[t * n + j] = edge_dof_offset_[tri.primal_edge] + j;
        for (int j = 0; j < ni; ++j) {
          dof_map_[t * n + k + 1 + j] = ndofs_++;
          dof_edge_.push_back(-1);
          dof_cell_.push_back(tri.cell);
        }
        // interior edges are shared by two cells; boundary edges belong to one
      }
      coeffs_.resize(ntri);
      for (int t = 0; t < ntri; ++t) {
        const auto& tri = mesh.triangle(t);
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t qp = 0; qp < er.points.size(); ++qp) {
          const Vec2 xi = maps_[t].to_reference(edge_point(mesh, tri.primal_edge, er.points[qp]));
          monomials(k, xi, m);
          for (int j = 0; j <= k; ++j) v.row(j) += er.weights[qp] * legendre01(j, er.points[qp]) * m.transpose();
        }
        for (std::size_t qp = 0; qp < tr.points.size(); ++qp) {
          monomials(k, tr.points[qp], m);
          for (int j = 0; j < ni; ++j) v.row(k + 1 + j) += 2.0 * tr.weights[qp] * m[j] * m.transpose();
        }
        coeffs_[t] = v.inverse();
      }
      break;
    }
    case SpaceKind::normal_continuous: {
      local_size_ = 2 * n;
      for (int e : mesh.dual_edges()) {
        edge_dof_offset_[e] = ndofs_;
        for (int j = 0; j <= k; ++j) {
          dof_edge_.push_back(e);
          dof_cell_.push_back(mesh.edge(e).cell);
        }
        ndofs_ += k + 1;
      }
      dof_map_.resize(static_cast<std::size_t>(ntri) * 2 * n);
      for (int t = 0; t < ntri; ++t) {
        const auto& tri = mesh.triangle(t);
        int* local = dof_map_.data() + static_cast<std::size_t>(t) * 2 * n;
        for (int s = 0; s < 2; ++s)
          for (int j = 0; j <= k; ++j) local[s * (k + 1) + j] = edge_dof_offset_[tri.dual_edges[s]] + j;
        for (int j = 0; j < 2 * ni; ++j) {
          local[2 * (k + 1) + j] = ndofs_++;
          dof_edge_.push_back(-1);
          dof_cell_.push_back(tri.cell);
        }
      }
      coeffs_.resize(ntri);
      for (int t = 0; t < ntri; ++t) {
        const auto& tri = mesh.triangle(t);
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        for (int s = 0; s < 2; ++s) {
          const auto& edge = mesh.edge(tri.dual_edges[s]);
          for (std::size_t qp = 0; qp < er.points.size(); ++qp) {
            const Vec2 xi = maps_[t].to_reference(edge_point(mesh, tri.dual_edges[s], er.points[qp]));
            monomials(k, xi, m);
            for (int j = 0; j <= k; ++j) {
              const double w = er.weights[qp] * legendre01(j, er.points[qp]);
              v.block(s * (k + 1) + j, 0, 1, n) += w * edge.normal.x() * m.transpose();
              v.block(s * (k + 1) + j, n, 1, n) += w * edge.normal.y() * m.transpose();
            }
          }
        }
        for (std::size_t qp = 0; qp < tr.points.size(); ++qp) {
          monomials(k, tr.points[qp], m);
          for (int c = 0; c < 2; ++c)
            for (int j = 0; j < ni; ++j)
              v.block(2 * (k + 1) + c * ni + j, c * n, 1, n) += 2.0 * tr.weights[qp] * m[j] * m.transpose();
        }
        coeffs_[t] = v.inverse();
      }
      break;
    }
    case SpaceKind::dual_continuous: {
      local_size_ = n;
      dof_map_.resize(static_cast<std::size_t>(ntri) * n);
      coeffs_.resize(ntri);
      if (k == 0) {
        for (int c = 0; c < mesh.num_cells(); ++c) {
          for (int t = mesh.cell_first_triangle(c); t < mesh.cell_first_triangle(c) + mesh.cell_triangle_count(c); ++t)
            dof_map_[t] = ndofs_;
          dof_edge_.push_back(-1);
          dof_cell_.push_back(c);
          ++ndofs_;
        }
        for (int t = 0; t < ntri; ++t) coeffs_[t] = Eigen::MatrixXd::Ones(1, 1);
        break;
      }
      const auto nodes = lattice(k);
      for (int c = 0; c < mesh.num_cells(); ++c) {
        const int first = mesh.cell_first_triangle(c);
        const int mcount = mesh.cell_triangle_count(c);
        const int base = ndofs_;
        // centre, then k nodes per spoke (interior point -> vertex j)
        const int shared = 1 + mcount * k;
        int own = base + shared;
        for (int i = 0; i < mcount; ++i) {
          const int t = first + i;
          for (int l = 0; l < n; ++l) {
            const auto [a, b] = nodes[l];
            int id;
            if (a == 0 && b == 0)
              id = base;
            else if (b == 0)
              id = base + 1 + i * k + (a - 1);
            else if (a == 0)
              id = base + 1 + ((i + 1) % mcount) * k + (b - 1);
            else
              id = own++;
            dof_map_[t * n + l] = id;
          }
        }
        for (int d = base; d < own; ++d) {
          dof_edge_.push_back(-1);
          dof_cell_.push_back(c);
        }
        ndofs_ = own;
      }
      Eigen::MatrixXd v(n, n);
      for (int l = 0; l < n; ++l) {
        monomials(k, Vec2(static_cast<double>(nodes[l].a) / k, static_cast<double>(nodes[l].b) / k), m);
        v.row(l) = m.transpose();
      }
      const Eigen::MatrixXd inv = v.inverse();
      for (int t = 0; t < ntri; ++t) coeffs_[t] = inv;
      break;
    }
  }
  edge_dof_list_.assign(static_cast<std::size_t>(mesh.num_edges()) * (k + 1), -1);
  for (int e = 0; e < mesh.num_edges(); ++e)
    if (edge_dof_offset_[e] >= 0)
      for (int j = 0; j <= k; ++j) edge_dof_list_[static_cast<std::size_t>(e) * (k + 1) + j] = edge_dof_offset_[e] + j;
}

std::span<const int> FiniteElementSpace::edge_dofs(int edge) const {
  if (edge_dof_offset_[edge] < 0) return {};
  return {edge_dof_list_.data() + static_cast<std::size_t>(edge) * (order_ + 1), static_cast<std::size_t>(order_ + 1)};
}

void FiniteElementSpace::values(int tri, const Vec2& xi, Eigen::MatrixXd& out) const {
  const int n = poly_dim(order_);
  Eigen::VectorXd m(n);
  monomials(order_, xi, m);
  const auto& c = coeffs_[tri];
  if (value_dim() == 1) {
    out = m.transpose() * c;
  } else {
    out.resize(2, local_size_);
    out.row(0) = m.transpose() * c.topRows(n);
    out.row(1) = m.transpose() * c.bottomRows(n);
  }
}

void FiniteElementSpace::gradients(int tri, const Vec2& xi, Eigen::MatrixXd& out) const {
  if (value_dim() != 1) throw std::logic_error("gradients requested on a vector space");
  const int n = poly_dim(order_);
  Eigen::MatrixX2d g(n, 2);
  monomial_gradients(order_, xi, g);
  // physical gradient = J^{-T} grad_ref
  const Eigen::MatrixXd ref = (g.transpose() * coeffs_[tri]);  // 2 x n
  out = maps_[tri].inverse.transpose() * ref;
}

void FiniteElementSpace::divergences(int tri, const Vec2& xi, Eigen::RowVectorXd& out) const {
  if (value_dim() != 2) throw std::logic_error("divergence requested on a scalar space");
  const int n = poly_dim(order_);
  Eigen::MatrixX2d g(n, 2);
  monomial_gradients(order_, xi, g);
  const Mat2& inv = maps_[tri].inverse;
  // d/dx = inv(0,0) d/dxi + inv(1,0) d/deta ; d/dy = inv(0,1) d/dxi + inv(1,1) d/deta
  const Eigen::VectorXd dx = g * Vec2(inv(0, 0), inv(1, 0));
  const Eigen::VectorXd dy = g * Vec2(inv(0, 1), inv(1, 1));
  const auto& c = coeffs_[tri];
  out = dx.transpose() * c.topRows(n) + dy.transpose() * c.bottomRows(n);
}

// --- interpolation ------------------------------------------------------------

Eigen::VectorXd interpolate_moments(const FiniteElementSpace& space, const ScalarFunction& w, int degree) {
  if (space.kind() != SpaceKind::primal_continuous)
    throw std::invalid_argument("moment interpolation targets the primal-continuous space");
  const auto& mesh = space.mesh();
  const int k = space.order();
  if (degree < 0) degree = 2 * k + 2;
  const auto& er = edge_rule(degree);
  const auto& tr = triangle_rule(degree);
  const int ni = poly_dim(k - 1);
  Eigen::VectorXd out(space.num_dofs());
  for (int e : mesh.primal_edges()) {
    const auto dofs = space.edge_dofs(e);
    std::vector<double> acc(k + 1, 0.0);
    for (std::size_t qp = 0; qp < er.points.size(); ++qp) {
      const double val = w(edge_point(mesh, e, er.points[qp]));
      for (int j = 0; j <= k; ++j) acc[j] += er.weights[qp] * val * legendre01(j, er.points[qp]);
    }
    for (int j = 0; j <= k; ++j) out[dofs[j]] = acc[j];
  }
  Eigen::VectorXd m(poly_dim(k));
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleMap map(mesh, t);
    const auto dofs = space.local_dofs(t);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ni);
    for (std::size_t qp = 0; qp < tr.points.size(); ++qp) {
      monomials(k, tr.points[qp], m);
      acc += 2.0 * tr.weights[qp] * w(map.to_physical(tr.points[qp])) * m.head(ni);
    }
    for (int j = 0; j < ni; ++j) out[dofs[k + 1 + j]] = acc[j];
  }
  return out;
}

Eigen::VectorXd interpolate_normal_moments(const FiniteElementSpace& space, const VectorFunction& phi,
                                           int degree) {
  if (space.kind() != SpaceKind::normal_continuous)
    throw std::invalid_argument("normal-moment interpolation targets the normal-continuous space");
  const auto& mesh = space.mesh();
  const int k = space.order();
  if (degree < 0) degree = 2 * k + 2;
  const auto& er = edge_rule(degree);
  const auto& tr = triangle_rule(degree);
  const int ni = poly_dim(k - 1);
  Eigen::VectorXd out(space.num_dofs());
  for (int e : mesh.dual_edges()) {
    const auto dofs = space.edge_dofs(e);
    const Vec2& n = mesh.edge(e).normal;
    std::vector<double> acc(k + 1, 0.0);
    for (std::size_t qp = 0; qp < er.points.size(); ++qp) {
      const double val = phi(edge_point(mesh, e, er.points[qp])).dot(n);
      for (int j = 0; j <= k; ++j) acc[j] += er.weights[qp] * val * legendre01(j, er.points[qp]);
    }
    for (int j = 0; j <= k; ++j) out[dofs[j]] = acc[j];
  }
  Eigen::VectorXd m(poly_dim(k));
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleMap map(mesh, t);
    const auto dofs = space.local_dofs(t);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(ni, 2);
    for (std::size_t qp = 0; qp < tr.points.size(); ++qp) {
      monomials(k, tr.points[qp], m);
      const Vec2 val = phi(map.to_physical(tr.points[qp]));
      acc.col(0) += 2.0 * tr.weights[qp] * val.x() * m.head(ni);
      acc.col(1) += 2.0 * tr.weights[qp] * val.y() * m.head(ni);
    }
    for (int c = 0; c < 2; ++c)
      for (int j = 0; j < ni; ++j) out[dofs[2 * (k + 1) + c * ni + j]] = acc(j, c);
  }
  return out;
}

Eigen::VectorXd interpolate_nodal(const FiniteElementSpace& space, const ScalarFunction& gamma) {
  if (space.kind() != SpaceKind::dual_continuous)
    throw std::invalid_argument("nodal interpolation targets the dual-continuous space");
  const auto& mesh = space.mesh();
  const int k = space.order();
  Eigen::VectorXd out(space.num_dofs());
  const auto nodes = lattice(k);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleMap map(mesh, t);
    const auto dofs = space.local_dofs(t);
    if (k == 0) {
      out[dofs[0]] = gamma(mesh.interior_point(mesh.triangle(t).cell));
      continue;
    }
    for (std::size_t l = 0; l < nodes.size(); ++l)
      out[dofs[l]] = gamma(map.to_physical(Vec2(static_cast<double>(nodes[l].a) / k, static_cast<double>(nodes[l].b) / k)));
  }
  return out;
}

TensorCoefficients interpolate_tensor(const FiniteElementSpace& space, const TensorFunction& psi, int degree) {
  return {interpolate_normal_moments(space, [&](const Vec2& x) -> Vec2 { return psi(x).row(0).transpose(); }, degree),
          interpolate_normal_moments(space, [&](const Vec2& x) -> Vec2 { return psi(x).row(1).transpose(); }, degree)};
}

// --- evaluation -----------------------------------------------------------------

namespace {

Vec2 checked_reference(const FiniteElementSpace& space, int tri, const Vec2& x) {
  const TriangleMap map(space.mesh(), tri);
  const Vec2 xi = map.to_reference(x);
  constexpr double tol = 1e-10;
  if (xi.x() < -tol || xi.y() < -tol || xi.x() + xi.y() > 1.0 + tol)
    throw std::out_of_range("evaluation point lies outside sub-triangle " + std::to_string(tri));
  return xi;
}

Eigen::VectorXd gather(const FiniteElementSpace& space, const Eigen::VectorXd& coeffs, int tri) {
  const auto dofs = space.local_dofs(tri);
  Eigen::VectorXd local(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) local[i] = coeffs[dofs[i]];
  return local;
}

}  // namespace

double evaluate_scalar(const FiniteElementSpace& space, const Eigen::VectorXd& coeffs, int tri, const Vec2& x) {
  if (space.value_dim() != 1) throw std::invalid_argument("scalar evaluation on a vector space");
  Eigen::MatrixXd phi;
  space.values(tri, checked_reference(space, tri, x), phi);
  return (phi * gather(space, coeffs, tri))(0);
}

Vec2 evaluate_vector(const FiniteElementSpace& space, const Eigen::VectorXd& coeffs, int tri, const Vec2& x) {
  if (space.value_dim() != 2) throw std::invalid_argument("vector evaluation on a scalar space");
  Eigen::MatrixXd phi;
  space.values(tri, checked_reference(space, tri, x), phi);
  return phi * gather(space, coeffs, tri);
}

Mat2 evaluate_tensor(const FiniteElementSpace& space, const Eigen::VectorXd& row1, const Eigen::VectorXd& row2,
                     int tri, const Vec2& x) {
  Mat2 out;
  out.row(0) = evaluate_vector(space, row1, tri, x).transpose();
  out.row(1) = evaluate_vector(space, row2, tri, x).transpose();
  return out;
}

SpaceSet::SpaceSet(const StaggeredMesh& m, int k)
    : mesh(&m),
      order(k),
      scalar(m, SpaceKind::primal_continuous, k),
      flux(m, SpaceKind::normal_continuous, k),
      rotation(m, SpaceKind::dual_continuous, k) {}

}  // namespace sdg
