#pragma once

#include <array>
#include <functional>
#include <map>
#include <vector>

#include <Eigen/SparseCore>

#include "sdg/fespace.hpp"
#include "sdg/material.hpp"

namespace sdg {

using SparseMatrix = Eigen::SparseMatrix<double>;
using TimeScalarFunction = std::function<double(const Vec2&, double)>;
using TimeVectorFunction = std::function<Vec2(const Vec2&, double)>;

// Block layout used throughout: a tensor in [Sigma_h]^2 is stored as
// [row1 ; row2] (2 * n_flux entries), a vector in [S_h]^2 as [u1 ; u2].

/// b_h(xi, w): rows are S_h test functions w, columns Sigma_h trial xi.
SparseMatrix assemble_bh(const SpaceSet& spaces);
/// b_h*(w, xi) assembled directly from its edge/divergence form; rows xi,
/// columns w. With `include_boundary` the boundary primal edges contribute
/// (w, xi.n)_e, which extends the adjoint identity to w not vanishing on the
/// boundary.
SparseMatrix assemble_bh_adjoint(const SpaceSet& spaces, bool include_boundary = false);
/// B_h(psi, v) = b_h row-wise: blockdiag(b, b).
SparseMatrix assemble_Bh(const SpaceSet& spaces);
SparseMatrix assemble_Bh_adjoint(const SpaceSet& spaces, bool include_boundary = false);

/// All matrices of the discrete system.
struct OperatorSet {
  int n_scalar = 0;    // dim S_h
  int n_flux = 0;      // dim Sigma_h
  int n_rotation = 0;  // dim M_h

  SparseMatrix b;            // n_scalar x n_flux
  SparseMatrix B;            // 2 n_scalar x 2 n_flux
  SparseMatrix mass_A;       // (A psi, psi'), 2 n_flux square
  SparseMatrix coupling;     // M_Ap: (A(alpha w I), psi), n_scalar x 2 n_flux
  SparseMatrix storage;      // c0 (p, w)
  SparseMatrix pressure_compliance;  // alpha^2 (A(pI), wI)
  SparseMatrix mass_pp;      // storage + pressure_compliance
  SparseMatrix mass_K;       // (K^-1 xi, xi'), n_flux square
  SparseMatrix asym;         // G: (as(psi), eta), n_rotation x 2 n_flux
  SparseMatrix scalar_mass;  // (p, w)
};

OperatorSet assemble_operators(const SpaceSet& spaces, const MaterialField& material);

// --- boundary data and loads ---------------------------------------------------

enum class FlowCondition {
  pressure,  // p prescribed (essential)
  flux,      // z.n prescribed (natural); zero data is no-flow
};

/// Conditions on one boundary marker. Each displacement component is either
/// fixed (essential) or carries a traction component (natural).
struct BoundaryCondition {
  FlowCondition flow = FlowCondition::flux;
  std::array<bool, 2> fixed{false, false};
  TimeScalarFunction pressure;      // empty means zero
  TimeScalarFunction flux;          // outward z.n, empty means zero
  TimeVectorFunction displacement;  // used on fixed components, empty means zero
  TimeVectorFunction traction;      // used on free components, empty means zero

  static BoundaryCondition dirichlet(TimeVectorFunction u, TimeScalarFunction p);
};

class BoundaryData {
 public:
  void set(int tag, BoundaryCondition bc) { by_tag_[tag] = std::move(bc); }
  [[nodiscard]] bool has(int tag) const { return by_tag_.count(tag) != 0; }
  /// Throws std::invalid_argument naming the marker when unassigned.
  [[nodiscard]] const BoundaryCondition& at(int tag) const;
  /// Throws when a boundary edge of the mesh carries an unassigned marker.
  void check_covers(const StaggeredMesh& mesh) const;
  [[nodiscard]] const std::map<int, BoundaryCondition>& all() const { return by_tag_; }

 private:
  std::map<int, BoundaryCondition> by_tag_;
};

/// Right-hand sides: momentum rows [v1 ; v2] and mass rows w.
struct LoadVectors {
  Eigen::VectorXd momentum;
  Eigen::VectorXd mass;
};

/// (f, v) + natural traction on momentum rows; (q, w) - (g, w)_e on mass rows.
/// Empty f or q contribute nothing.
LoadVectors assemble_loads(const SpaceSet& spaces, const TimeVectorFunction& f, const TimeScalarFunction& q,
                           const BoundaryData& bc, double t, int degree = -1);

/// Essential degrees of freedom (sorted) with their prescribed values.
struct EssentialSet {
  std::vector<int> dofs;
  Eigen::VectorXd values;
};

struct EssentialData {
  EssentialSet displacement;  // indices into [u1 ; u2]
  EssentialSet pressure;      // indices into p
};

EssentialData essential_data(const SpaceSet& spaces, const BoundaryData& bc, double t, int degree = -1);

}  // namespace sdg
