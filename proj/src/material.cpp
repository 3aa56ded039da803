#include "sdg/material.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace sdg {

MaterialParams MaterialParams::from_young(double young, double poisson, double alpha, double c0,
                                          const Mat2& permeability) {
  if (!(young > 0.0)) throw MaterialError("Young's modulus must be positive");
  if (!(poisson > -1.0 && poisson < 0.5))
    throw MaterialError("Poisson ratio must lie in (-1, 0.5); nu = 0.5 makes lambda infinite");
  MaterialParams m;
  m.lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  m.mu = young / (2.0 * (1.0 + poisson));
  m.alpha = alpha;
  m.c0 = c0;
  m.permeability = permeability;
  return m;
}

void MaterialParams::validate() const {
  if (!(mu > 0.0)) throw MaterialError("shear modulus mu must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw MaterialError("Lame parameter lambda must be finite and >= 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw MaterialError("Biot-Willis coefficient alpha must lie in (0, 1]");
  if (!(c0 >= 0.0)) throw MaterialError("storativity c0 must be >= 0");
  if (std::abs(permeability(0, 1) - permeability(1, 0)) > 1e-14 * permeability.norm())
    throw MaterialError("permeability tensor must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat2> eig(permeability);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) throw MaterialError("permeability tensor must be positive definite");
}

Mat2 apply_compliance(const MaterialParams& m, const Mat2& psi) {
  const double c = m.lambda / (2.0 * m.mu + 2.0 * m.lambda);
  return (psi - c * psi.trace() * Mat2::Identity()) / (2.0 * m.mu);
}

const MaterialParams& MaterialField::for_tag(int tag) const {
  if (by_tag_.empty()) throw MaterialError("material field is empty");
  if (by_tag_.size() == 1) return by_tag_.front();
  if (tag < 0 || tag >= static_cast<int>(by_tag_.size()))
    throw MaterialError("no material assigned to cell tag " + std::to_string(tag));
  return by_tag_[tag];
}

double MaterialField::k_min() const {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& m : by_tag_) v = std::min(v, Eigen::SelfAdjointEigenSolver<Mat2>(m.permeability).eigenvalues()(0));
  return v;
}

double MaterialField::k_max() const {
  double v = 0.0;
  for (const auto& m : by_tag_) v = std::max(v, Eigen::SelfAdjointEigenSolver<Mat2>(m.permeability).eigenvalues()(1));
  return v;
}

void MaterialField::validate() const {
  if (by_tag_.empty()) throw MaterialError("material field is empty");
  for (std::size_t i = 0; i < by_tag_.size(); ++i) {
    try {
      by_tag_[i].validate();
    } catch (const MaterialError& e) {
      throw MaterialError("region " + std::to_string(i) + ": " + e.what());
    }
  }
}

}  // namespace sdg
