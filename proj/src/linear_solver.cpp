#include "sdg/linear_solver.hpp"

#include <stdexcept>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

namespace sdg {

struct DirectSolver::Impl {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool ok = false;
};

DirectSolver::DirectSolver() : impl_(std::make_unique<Impl>()) {}
DirectSolver::~DirectSolver() = default;
DirectSolver::DirectSolver(DirectSolver&&) noexcept = default;
DirectSolver& DirectSolver::operator=(DirectSolver&&) noexcept = default;

void DirectSolver::factor(const Eigen::SparseMatrix<double>& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("direct solver needs a square matrix");
  n_ = static_cast<int>(a.rows());
  impl_->ok = false;
  impl_->lu.compute(a);
  if (impl_->lu.info() != Eigen::Success) throw std::runtime_error("sparse LU factorization failed (singular matrix)");
  impl_->ok = true;
}

Eigen::VectorXd DirectSolver::solve(const Eigen::VectorXd& rhs) const {
  if (!impl_->ok) throw std::logic_error("direct solver used before factorization");
  Eigen::VectorXd x = impl_->lu.solve(rhs);
  if (impl_->lu.info() != Eigen::Success) throw std::runtime_error("sparse LU solve failed");
  return x;
}

bool DirectSolver::factored() const { return impl_->ok; }

std::string DirectSolver::backend() {
  return "Eigen::SparseLU";
}

}  // namespace sdg
