#include "sdg/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sdg {

namespace {

void check_degree(int degree) {
  if (degree < 0 || degree > max_quadrature_degree)
    throw std::invalid_argument("unsupported quadrature degree " + std::to_string(degree));
}

// n-point Gauss-Legendre on [-1,1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

std::mutex cache_mutex;

}  // namespace

const EdgeRule& edge_rule(int degree) {
  check_degree(degree);
  static std::map<int, EdgeRule> cache;
  std::lock_guard lock(cache_mutex);
  if (auto it = cache.find(degree); it != cache.end()) return it->second;
  const int n = degree / 2 + 1;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  EdgeRule rule;
  for (int i = 0; i < n; ++i) {
    rule.points.push_back(0.5 * (x[i] + 1.0));
    rule.weights.push_back(0.5 * w[i]);
  }
  return cache.emplace(degree, std::move(rule)).first->second;
}

const TriangleRule& triangle_rule(int degree) {
  check_degree(degree);
  static std::map<int, TriangleRule> cache;
  std::lock_guard lock(cache_mutex);
  if (auto it = cache.find(degree); it != cache.end()) return it->second;
  // Collapsed (Duffy) tensor rule: the Jacobian adds one degree in u.
  const int n = (degree + 1) / 2 + 1;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  TriangleRule rule;
  for (int i = 0; i < n; ++i) {
    const double u = 0.5 * (x[i] + 1.0);
    for (int j = 0; j < n; ++j) {
      const double v = 0.5 * (x[j] + 1.0);
      rule.points.emplace_back(u, v * (1.0 - u));
      rule.weights.push_back(0.25 * w[i] * w[j] * (1.0 - u));
    }
  }
  return cache.emplace(degree, std::move(rule)).first->second;
}

double legendre01(int j, double t) {
  const double z = 2.0 * t - 1.0;
  double p0 = 1.0, p1 = z;
  if (j == 0) return 1.0;
  for (int k = 2; k <= j; ++k) {
    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * j + 1.0) * p1;
}

}  // namespace sdg
