#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdg/assembly.hpp"
#include "sdg/linear_solver.hpp"

namespace sdg {

/// Discrete solution at one time level. Layouts follow OperatorSet:
/// sigma = [row1 ; row2], u = [u1 ; u2].
struct FieldState {
  double t = 0.0;
  Eigen::VectorXd sigma;
  Eigen::VectorXd u;
  Eigen::VectorXd gamma;
  Eigen::VectorXd z;
  Eigen::VectorXd p;

  static FieldState zeros(const OperatorSet& ops, double t = 0.0);
};

struct TransientProblem {
  const SpaceSet* spaces = nullptr;
  MaterialField material;
  TimeVectorFunction body_force;  // f(x, t); empty means zero
  TimeScalarFunction source;      // q(x, t); empty means zero
  BoundaryData boundary;
  ScalarFunction initial_pressure;  // p^0; empty means zero
  double final_time = 1.0;
  int steps = 1;

  [[nodiscard]] double dt() const { return final_time / steps; }
  /// Throws std::invalid_argument on inconsistent data.
  void validate() const;
};

/// A linear solve whose residual check failed, with per-block residuals.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<std::pair<std::string, double>> blocks)
      : std::runtime_error(what), blocks_(std::move(blocks)) {}
  [[nodiscard]] const std::vector<std::pair<std::string, double>>& block_residuals() const { return blocks_; }

 private:
  std::vector<std::pair<std::string, double>> blocks_;
};

struct FixedStressConfig {
  /// Stabilization; a negative value selects the threshold alpha^2/(2(mu+lambda)).
  double beta = -1.0;
  double tolerance = 1e-8;
  int max_iterations = 200;
  /// Raise beta to the threshold (with a warning) when it is below it.
  bool clamp = true;
  /// Eliminate z and (sigma, gamma) cell by cell in the sub-solves.
  bool local_elimination = false;
  /// Observer called with (i, state^{n,i}) after every iteration.
  std::function<void(int, const FieldState&)> on_iterate;
};

struct FixedStressResult {
  FieldState state;
  int iterations = 0;
  double beta = 0.0;
  /// ||p^{n,i} - p^{n,i-1}||_0 for i = 1..iterations.
  std::vector<double> increments;
  /// ||p_ref - p^{n,i}||_0 for i = 0..iterations when a reference was given.
  std::vector<double> errors;
  std::vector<std::string> warnings;
};

/// Thrown when the fixed-stress iteration does not reach its tolerance.
class FixedStressError : public std::runtime_error {
 public:
  FixedStressError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  [[nodiscard]] const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// Smallest admissible fixed-stress stabilization over all material regions.
double fixed_stress_threshold(const MaterialField& material);
/// Contraction bound (beta/2) / (c0 + beta/2 + alpha^2/(mu+lambda)), worst region.
double fixed_stress_bound(const MaterialField& material, double beta);

/// Fully discrete backward-Euler solver. Operators and factorizations are
/// built once per problem; steps are sequential.
class BiotSolver {
 public:
  explicit BiotSolver(TransientProblem problem);
  ~BiotSolver();

  [[nodiscard]] const TransientProblem& problem() const { return problem_; }
  [[nodiscard]] const OperatorSet& operators() const { return ops_; }
  [[nodiscard]] int num_unknowns() const;

  /// Compatible initial data: p = I_h p^0, Darcy z, elasticity (sigma, u, gamma).
  [[nodiscard]] FieldState initial_state() const;
  [[nodiscard]] FieldState monolithic_step(const FieldState& previous, double t) const;
  [[nodiscard]] FixedStressResult fixed_stress_step(const FieldState& previous, double t,
                                                    const FixedStressConfig& config,
                                                    const Eigen::VectorXd* reference_pressure = nullptr) const;

  /// Elasticity solve with -(A(alpha p I), psi) data and load f(t).
  [[nodiscard]] FieldState elasticity_solve(const Eigen::VectorXd& p, double t) const;

  /// Monolithic matrix on free unknowns (essential dofs removed) and a solve
  /// against it; used by uniqueness checks.
  [[nodiscard]] const SparseMatrix& monolithic_matrix() const;
  [[nodiscard]] Eigen::VectorXd solve_monolithic(const Eigen::VectorXd& rhs_free) const;

  /// ||v||_0 of a pressure-space coefficient vector.
  [[nodiscard]] double pressure_norm(const Eigen::VectorXd& v) const;

 private:
  struct Impl;
  TransientProblem problem_;
  OperatorSet ops_;
  std::unique_ptr<Impl> impl_;
};

enum class Scheme { monolithic, fixed_stress };

struct StepRecord {
  int step = 0;
  double t = 0.0;
  int iterations = 0;  // fixed-stress only
  std::vector<double> increments;
  std::vector<double> errors;  // against the monolithic step, when requested
};

struct RunOptions {
  Scheme scheme = Scheme::monolithic;
  FixedStressConfig fixed_stress;
  /// Keep every n-th state (the final one is always kept); 0 keeps only the
  /// initial and final states.
  int save_every = 1;
  /// For fixed stress: also solve the monolithic step from the same previous
  /// state and record ||p_mono - p^{n,i}||_0 per iteration.
  bool record_contraction = false;
  /// Called after every step with the new state.
  std::function<void(const FieldState&)> on_step;
};

struct Trajectory {
  std::vector<FieldState> states;
  std::vector<StepRecord> records;
  std::vector<std::string> warnings;
};

Trajectory run_transient(const BiotSolver& solver, const RunOptions& options);

// --- checkpoints -----------------------------------------------------------------

void write_checkpoint(std::ostream& out, const FieldState& state);
FieldState read_checkpoint(std::istream& in);
/// FNV-1a over coefficients quantized relative to each field's max magnitude.
std::uint64_t state_hash(const FieldState& state);

}  // namespace sdg
