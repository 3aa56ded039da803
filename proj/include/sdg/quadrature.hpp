#pragma once

#include <vector>

#include <Eigen/Core>

namespace sdg {

/// Gauss-Legendre rule on [0,1]; weights sum to 1.
struct EdgeRule {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Rule on the reference triangle (0,0),(1,0),(0,1); weights sum to 1/2.
struct TriangleRule {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
};

inline constexpr int max_quadrature_degree = 60;

/// Exact for polynomials of degree <= `degree`. Rules are cached and the
/// returned references stay valid for the lifetime of the program.
const EdgeRule& edge_rule(int degree);
const TriangleRule& triangle_rule(int degree);

/// Orthonormal Legendre polynomial of degree j on [0,1].
double legendre01(int j, double t);

}  // namespace sdg
