#pragma once

#include <memory>
#include <string>

#include <Eigen/SparseCore>

namespace sdg {

/// Sparse direct LU factorization (Eigen::SparseLU with COLAMD ordering).
/// Factor once, solve many times.
class DirectSolver {
 public:
  DirectSolver();
  ~DirectSolver();
  DirectSolver(DirectSolver&&) noexcept;
  DirectSolver& operator=(DirectSolver&&) noexcept;

  /// Throws std::runtime_error when the matrix is numerically singular.
  void factor(const Eigen::SparseMatrix<double>& a);
  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  [[nodiscard]] bool factored() const;
  [[nodiscard]] int size() const { return n_; }

  /// Name of the backend in use.
  static std::string backend();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
};

}  // namespace sdg
