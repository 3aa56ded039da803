#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sdg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Marker attached to a boundary segment `a -> b`.
struct BoundarySegment {
  int a = 0;
  int b = 0;
  int tag = 0;
};

/// User-level polygonal mesh. Cells are counter-clockwise vertex loops; a
/// hanging node is simply an extra (collinear) vertex in the coarse cell.
struct PrimalMesh {
  std::vector<Vec2> vertices;
  std::vector<std::vector<int>> cells;
  std::vector<BoundarySegment> boundary;
  /// Optional per-cell material/layer tag; empty means every cell is tag 0.
  std::vector<int> cell_tags;

  [[nodiscard]] int num_cells() const { return static_cast<int>(cells.size()); }
  [[nodiscard]] int cell_tag(int c) const { return cell_tags.empty() ? 0 : cell_tags[c]; }
  [[nodiscard]] double cell_area(int c) const;
  [[nodiscard]] Vec2 cell_centroid(int c) const;
  [[nodiscard]] double cell_diameter(int c) const;
  [[nodiscard]] double total_cell_area() const;
  /// Area enclosed by the boundary (edges used by a single cell).
  [[nodiscard]] double domain_area() const;
};

/// Checks orientation, simplicity and edge adjacency. Throws MeshError.
void validate(const PrimalMesh& mesh);

/// Inserts vertices lying in the interior of a cell edge into that cell's
/// loop, so that a coarse edge facing a refined neighbour is split into
/// matching segments.
void split_hanging_edges(PrimalMesh& mesh, double rel_tol = 1e-10);

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c);

// --- generators -----------------------------------------------------------

/// Boundary tags used by the unit-square generators.
namespace square_tag {
inline constexpr int bottom = 1;
inline constexpr int right = 2;
inline constexpr int top = 3;
inline constexpr int left = 4;
}  // namespace square_tag

PrimalMesh generate_uniform_square(int n);
PrimalMesh generate_trapezoidal(int n, double offset_fraction = 0.25);
/// Transition point of the Shishkin grading.
double shishkin_transition(double theta);
PrimalMesh generate_shishkin(int n, double theta);
/// Tensor-product rectangle mesh of (0,1)^2 with the given grid lines.
PrimalMesh generate_tensor_grid(std::span<const double> xs, std::span<const double> ys);

/// Geometry of the layered sedimentary basin.
struct BasinSpec {
  double width = 5000.0;
  double step_x = 4000.0;
  double deep_thickness = 420.0;
  double shallow_thickness = 120.0;
  double upper_aquifer = 20.0;
  double confining = 20.0;
  int columns = 50;
  int rows = 21;
};

namespace basin_tag {
// boundary segments
inline constexpr int A = 1;  // bedrock (bottom and step face)
inline constexpr int B = 2;  // right side
inline constexpr int C = 3;  // basin centre, upper aquifer + confining layer
inline constexpr int D = 4;  // top surface
inline constexpr int E = 5;  // basin centre, lower (pumped) aquifer
// cell layers
inline constexpr int aquifer = 0;
inline constexpr int confining = 1;
}  // namespace basin_tag

PrimalMesh generate_basin(const BasinSpec& spec = {});
/// Thickness of the sediment stack above the bedrock at abscissa x.
double basin_depth(const BasinSpec& spec, double x);

// --- text format ------------------------------------------------------------

PrimalMesh load_primal_mesh(const std::string& text);
std::string save_primal_mesh(const PrimalMesh& mesh);

}  // namespace sdg
