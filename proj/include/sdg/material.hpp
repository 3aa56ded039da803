#pragma once

#include <span>
#include <stdexcept>

#include <Eigen/Dense>
#include <vector>

#include "sdg/mesh.hpp"

namespace sdg {

class MaterialError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Linear poroelastic coefficients of one material region.
struct MaterialParams {
  double mu = 1.0;      ///< shear modulus
  double lambda = 1.0;  ///< first Lame parameter
  double alpha = 1.0;   ///< Biot-Willis coefficient
  double c0 = 0.0;      ///< storativity
  Mat2 permeability = Mat2::Identity();  ///< K (permeability over viscosity)

  /// Lame parameters from Young's modulus and Poisson ratio.
  static MaterialParams from_young(double young, double poisson, double alpha, double c0,
                                   const Mat2& permeability = Mat2::Identity());

  /// Throws MaterialError when a coefficient is out of range.
  void validate() const;

  [[nodiscard]] Mat2 permeability_inverse() const { return permeability.inverse(); }
  /// alpha^2 / (mu + lambda): the pressure-pressure compliance coefficient.
  [[nodiscard]] double pressure_compliance() const { return alpha * alpha / (mu + lambda); }
};

/// Compliance tensor A psi = (psi - lambda/(2 mu + 2 lambda) tr(psi) I) / (2 mu).
Mat2 apply_compliance(const MaterialParams& m, const Mat2& psi);

/// Asymmetry functional as(psi) = -psi_12 + psi_21.
inline double as_of(const Mat2& psi) { return -psi(0, 1) + psi(1, 0); }

/// Per-cell material assignment through the mesh's cell tags.
class MaterialField {
 public:
  MaterialField() = default;
  explicit MaterialField(MaterialParams uniform) : by_tag_{uniform} {}
  explicit MaterialField(std::vector<MaterialParams> by_tag) : by_tag_(std::move(by_tag)) {}

  [[nodiscard]] const MaterialParams& for_tag(int tag) const;
  [[nodiscard]] const MaterialParams& for_cell(const PrimalMesh& mesh, int cell) const {
    return for_tag(mesh.cell_tag(cell));
  }
  [[nodiscard]] std::span<const MaterialParams> regions() const { return by_tag_; }
  [[nodiscard]] bool uniform() const { return by_tag_.size() == 1; }

  /// Smallest and largest permeability eigenvalue over all regions.
  [[nodiscard]] double k_min() const;
  [[nodiscard]] double k_max() const;
  [[nodiscard]] double anisotropy_ratio() const { return k_max() / k_min(); }

  void validate() const;

 private:
  std::vector<MaterialParams> by_tag_;
};

}  // namespace sdg
