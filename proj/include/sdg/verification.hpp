#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "sdg/solver.hpp"

namespace sdg {

/// Pointwise values of every field of an exact solution.
struct ExactFields {
  Vec2 u;
  double p = 0.0;
  Mat2 sigma;
  double gamma = 0.0;
  Vec2 z;
};

using ExactSolution = std::function<ExactFields(const Vec2&, double)>;

/// Error integrals split each sub-triangle uniformly into 4^r pieces until the
/// pieces are at most `piece_diameter` wide (smallest value over the
/// sub-triangle's vertices), then apply a rule of `degree` (default 2k+4) on
/// every piece. One rule per sub-triangle does not resolve layered exact
/// fields on coarse cells.
struct ErrorQuadrature {
  int degree = -1;
  std::function<double(const Vec2&)> piece_diameter;  // empty: error_piece_diameter everywhere
};

inline constexpr double error_piece_diameter = 1.0 / 64;
inline constexpr int max_error_refinement = 8;

/// Raw closed-form derivatives of a manufactured (u, p) pair. Everything else
/// (stress, rotation, flux, sources) is derived from these.
struct Kinematics {
  Vec2 u;
  Mat2 grad_u;        // (i, j) = d u_i / d x_j
  Vec2 laplace_u;
  Vec2 grad_div_u;
  double dt_div_u = 0.0;
  double p = 0.0;
  double dt_p = 0.0;
  Vec2 grad_p;
  Mat2 hess_p;
};

enum class CaseId { smooth, layered };

/// Manufactured solutions on the unit square: a smooth trigonometric pair and
/// a pair with an exponential layer of width theta at x = 0.
class ManufacturedCase {
 public:
  static ManufacturedCase smooth(const MaterialParams& material);
  static ManufacturedCase layered(const MaterialParams& material, double theta = 1e-2);

  [[nodiscard]] CaseId id() const { return id_; }
  [[nodiscard]] const MaterialParams& material() const { return material_; }
  [[nodiscard]] double theta() const { return theta_; }

  [[nodiscard]] Kinematics kinematics(const Vec2& x, double t) const;
  [[nodiscard]] ExactFields fields(const Vec2& x, double t) const;
  /// f = -div(sigma)
  [[nodiscard]] Vec2 body_force(const Vec2& x, double t) const;
  /// q = d/dt (c0 p + alpha div u) + div z
  [[nodiscard]] double source(const Vec2& x, double t) const;

  [[nodiscard]] ExactSolution exact() const;
  /// Composite error rule fine enough for this case: pieces of width theta/4
  /// within 25 theta of the layer.
  [[nodiscard]] ErrorQuadrature error_quadrature() const;
  /// Exact traces of u and p imposed on all four sides.
  [[nodiscard]] BoundaryData boundary() const;
  [[nodiscard]] TransientProblem problem(const SpaceSet& spaces, double final_time, int steps) const;

 private:
  CaseId id_ = CaseId::smooth;
  MaterialParams material_;
  double theta_ = 0.0;
};

inline constexpr std::array<const char*, 5> field_names{"sigma", "u", "gamma", "z", "p"};

/// L2(Omega) error of each field of one state, order as field_names.
using FieldErrors = std::array<double, 5>;


FieldErrors state_errors(const SpaceSet& spaces, const FieldState& state, const ExactSolution& exact,
                         const ErrorQuadrature& quadrature = {});
/// ||K^{-1/2}(z - z_h)|| over the mesh.
double flux_energy_error(const SpaceSet& spaces, const MaterialField& material, const FieldState& state,
                         const ExactSolution& exact,
                         const ErrorQuadrature& quadrature = {});

struct ErrorReport {
  double h = 0.0;
  double dt = 0.0;
  int dofs = 0;
  FieldErrors final_time{};
  FieldErrors l2_time{};    // (sum_n dt e_n^2)^{1/2}, n = 1..N
  FieldErrors linf_time{};  // max_n e_n
  double z_norm = 0.0;      // K-weighted flux error at the final time
};

ErrorReport compute_errors(const BiotSolver& solver, const Trajectory& trajectory, const ExactSolution& exact,
                           double h, const ErrorQuadrature& quadrature = {});

/// Observed rates over a refinement ladder.
struct RateSummary {
  std::vector<double> pairwise;  // entry i: between levels i and i+1
  double least_squares = 0.0;
};

/// Throws std::invalid_argument unless h is strictly decreasing and errors are positive.
RateSummary convergence_rates(const std::vector<double>& h, const std::vector<double>& errors);

/// max over interior primal edges e and both stress rows of
/// |(sigma_h n_D, 1)_{dD(e)} + (f, 1)_{D(e)}|. The load integral uses the same
/// quadrature as the assembled right-hand side by default.
double check_conservation(const SpaceSet& spaces, const Eigen::VectorXd& sigma, const TimeVectorFunction& f,
                          double t, int degree = -1);

struct LineProfile {
  double y = 0.0;
  std::vector<double> x;
  std::vector<double> p;
  int extrema = 0;
};

/// Pressure sampled at the centroid abscissae of the cells crossed by the line.
LineProfile oscillation_profile(const SpaceSet& spaces, const Eigen::VectorXd& p, double y);
/// Interior strict local extrema of a sequence; differences below
/// rel_tol * range count as flat and are skipped.
int count_extrema(const std::vector<double>& values, double rel_tol = 1e-10);

/// Sub-triangle containing x, or -1.
int find_triangle(const StaggeredMesh& mesh, const Vec2& x);

}  // namespace sdg
