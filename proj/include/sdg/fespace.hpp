#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sdg/staggered_mesh.hpp"

namespace sdg {

using ScalarFunction = std::function<double(const Vec2&)>;
using VectorFunction = std::function<Vec2(const Vec2&)>;
using TensorFunction = std::function<Mat2(const Vec2&)>;

/// Dimension of P^k in two variables.
constexpr int poly_dim(int k) { return k < 0 ? 0 : (k + 1) * (k + 2) / 2; }

/// Monomials xi^a eta^b (a+b <= k) on the reference triangle, graded order.
void monomials(int k, const Vec2& xi, Eigen::Ref<Eigen::VectorXd> values);
/// Reference-coordinate gradients, one row per monomial.
void monomial_gradients(int k, const Vec2& xi, Eigen::Ref<Eigen::MatrixX2d> grads);

/// Affine map x = origin + jacobian * xi of a sub-triangle.
struct TriangleMap {
  Vec2 origin;
  Mat2 jacobian;
  Mat2 inverse;
  double det = 0.0;

  TriangleMap(const StaggeredMesh& mesh, int tri);
  [[nodiscard]] Vec2 to_physical(const Vec2& xi) const { return origin + jacobian * xi; }
  [[nodiscard]] Vec2 to_reference(const Vec2& x) const { return inverse * (x - origin); }
};

/// Point at parameter t in [0,1] along an edge, from nodes[0] to nodes[1].
Vec2 edge_point(const StaggeredMesh& mesh, int edge, double t);

enum class SpaceKind {
  /// Scalar P^k, continuous across primal edges (displacement, pressure).
  primal_continuous,
  /// Vector (P^k)^2, normal-continuous across dual edges (stress rows, flux).
  normal_continuous,
  /// Scalar P^k, continuous across dual edges (rotation).
  dual_continuous,
};

/// One staggered space at order k on a fixed StaggeredMesh. Immutable.
class FiniteElementSpace {
 public:
  FiniteElementSpace(const StaggeredMesh& mesh, SpaceKind kind, int order);

  [[nodiscard]] SpaceKind kind() const { return kind_; }
  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] int num_dofs() const { return ndofs_; }
  [[nodiscard]] int value_dim() const { return kind_ == SpaceKind::normal_continuous ? 2 : 1; }
  [[nodiscard]] int local_size() const { return local_size_; }
  [[nodiscard]] const StaggeredMesh& mesh() const { return *mesh_; }

  [[nodiscard]] std::span<const int> local_dofs(int tri) const {
    return {dof_map_.data() + static_cast<std::size_t>(tri) * local_size_, static_cast<std::size_t>(local_size_)};
  }
  /// Edge carrying a dof (moment dofs), or -1.
  [[nodiscard]] int dof_edge(int dof) const { return dof_edge_[dof]; }
  /// Primal cell owning a dof, or -1 for dofs shared between cells.
  [[nodiscard]] int dof_cell(int dof) const { return dof_cell_[dof]; }
  /// Dofs carried by an edge (primal edges for primal_continuous, dual edges
  /// for normal_continuous); empty otherwise.
  [[nodiscard]] std::span<const int> edge_dofs(int edge) const;

  /// Shape values at a reference point: (value_dim x local_size).
  void values(int tri, const Vec2& xi, Eigen::MatrixXd& out) const;
  /// Physical gradients of a scalar space: (2 x local_size).
  void gradients(int tri, const Vec2& xi, Eigen::MatrixXd& out) const;
  /// Physical divergence of a vector space: (1 x local_size).
  void divergences(int tri, const Vec2& xi, Eigen::RowVectorXd& out) const;

  /// Monomial coefficients of the local shape functions, one column each.
  [[nodiscard]] const Eigen::MatrixXd& shape_coefficients(int tri) const { return coeffs_[tri]; }

 private:
  const StaggeredMesh* mesh_;
  SpaceKind kind_;
  int order_;
  int ndofs_ = 0;
  int local_size_ = 0;
  std::vector<int> dof_map_;
  std::vector<int> dof_edge_;
  std::vector<int> dof_cell_;
  std::vector<int> edge_dof_offset_;  // per edge: first dof or -1
  std::vector<int> edge_dof_list_;
  std::vector<Eigen::MatrixXd> coeffs_;
  std::vector<TriangleMap> maps_;
};

/// The three staggered spaces at a common order.
struct SpaceSet {
  SpaceSet(const StaggeredMesh& mesh, int order);

  const StaggeredMesh* mesh;
  int order;
  FiniteElementSpace scalar;    // S_h
  FiniteElementSpace flux;      // Sigma_h
  FiniteElementSpace rotation;  // M_h

  [[nodiscard]] int default_quadrature_degree() const { return 2 * order + 2; }
};

// --- interpolation and evaluation -------------------------------------------

/// Edge/interior moment interpolant into the primal-continuous space.
Eigen::VectorXd interpolate_moments(const FiniteElementSpace& space, const ScalarFunction& w, int degree = -1);
/// Normal-moment interpolant into the normal-continuous space.
Eigen::VectorXd interpolate_normal_moments(const FiniteElementSpace& space, const VectorFunction& phi,
                                           int degree = -1);
/// Nodal interpolant into the dual-continuous space.
Eigen::VectorXd interpolate_nodal(const FiniteElementSpace& space, const ScalarFunction& gamma);

/// Rows of a tensor field, each in the normal-continuous space.
struct TensorCoefficients {
  Eigen::VectorXd row1;
  Eigen::VectorXd row2;
};
TensorCoefficients interpolate_tensor(const FiniteElementSpace& space, const TensorFunction& psi, int degree = -1);

/// Evaluation at a physical point inside sub-triangle `tri` (throws if outside).
double evaluate_scalar(const FiniteElementSpace& space, const Eigen::VectorXd& coeffs, int tri, const Vec2& x);
Vec2 evaluate_vector(const FiniteElementSpace& space, const Eigen::VectorXd& coeffs, int tri, const Vec2& x);
Mat2 evaluate_tensor(const FiniteElementSpace& space, const Eigen::VectorXd& row1, const Eigen::VectorXd& row2,
                     int tri, const Vec2& x);

}  // namespace sdg
