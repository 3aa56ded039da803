#include "sdg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <utility>

namespace sdg {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

double PrimalMesh::cell_area(int c) const {
  const auto& loop = cells[c];
  double area = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec2& p = vertices[loop[i]];
    const Vec2& q = vertices[loop[(i + 1) % loop.size()]];
    area += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * area;
}

Vec2 PrimalMesh::cell_centroid(int c) const {
  const auto& loop = cells[c];
  // Fan from the first vertex; exact for any simple polygon.
  const Vec2& o = vertices[loop[0]];
  Vec2 acc = Vec2::Zero();
  double area = 0.0;
  for (std::size_t i = 1; i + 1 < loop.size(); ++i) {
    const Vec2& p = vertices[loop[i]];
    const Vec2& q = vertices[loop[i + 1]];
    const double a = signed_area(o, p, q);
    acc += a * (o + p + q) / 3.0;
    area += a;
  }
  return acc / area;
}

double PrimalMesh::cell_diameter(int c) const {
  double d = 0.0;
  const auto& loop = cells[c];
  for (std::size_t i = 0; i < loop.size(); ++i)
    for (std::size_t j = i + 1; j < loop.size(); ++j)
      d = std::max(d, (vertices[loop[i]] - vertices[loop[j]]).norm());
  return d;
}

double PrimalMesh::total_cell_area() const {
  double a = 0.0;
  for (int c = 0; c < num_cells(); ++c) a += cell_area(c);
  return a;
}

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

// Directed edge usage: key -> list of (cell, a, b).
struct EdgeUse {
  int cell;
  int a;
  int b;
};

std::map<EdgeKey, std::vector<EdgeUse>> edge_uses(const PrimalMesh& mesh) {
  std::map<EdgeKey, std::vector<EdgeUse>> uses;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& loop = mesh.cells[c];
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const int a = loop[i];
      const int b = loop[(i + 1) % loop.size()];
      uses[key(a, b)].push_back({c, a, b});
    }
  }
  return uses;
}

bool segments_cross(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = signed_area(q1, q2, p1);
  const double d2 = signed_area(q1, q2, p2);
  const double d3 = signed_area(p1, p2, q1);
  const double d4 = signed_area(p1, p2, q2);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

double PrimalMesh::domain_area() const {
  double area = 0.0;
  for (const auto& [k, list] : edge_uses(*this)) {
    if (list.size() != 1) continue;
    const Vec2& p = vertices[list[0].a];
    const Vec2& q = vertices[list[0].b];
    area += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * area;
}

void validate(const PrimalMesh& mesh) {
  const int nv = static_cast<int>(mesh.vertices.size());
  if (mesh.cells.empty()) throw MeshError("mesh has no cells");
  if (!mesh.cell_tags.empty() && mesh.cell_tags.size() != mesh.cells.size())
    throw MeshError("cell tag count does not match cell count");
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& loop = mesh.cells[c];
    if (loop.size() < 3) throw MeshError("cell " + std::to_string(c) + " has fewer than 3 vertices");
    for (int v : loop)
      if (v < 0 || v >= nv) throw MeshError("cell " + std::to_string(c) + " references missing vertex");
    for (std::size_t i = 0; i < loop.size(); ++i)
      for (std::size_t j = i + 1; j < loop.size(); ++j)
        if (loop[i] == loop[j]) throw MeshError("cell " + std::to_string(c) + " repeats a vertex");
    // non-adjacent sides must not cross
    const std::size_t m = loop.size();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 2; j < m; ++j) {
        if (i == 0 && j == m - 1) continue;
        if (segments_cross(mesh.vertices[loop[i]], mesh.vertices[loop[(i + 1) % m]],
                           mesh.vertices[loop[j]], mesh.vertices[loop[(j + 1) % m]]))
          throw MeshError("cell " + std::to_string(c) + " is not a simple polygon");
      }
    }
    if (mesh.cell_area(c) <= 0.0)
      throw MeshError("cell " + std::to_string(c) + " is not counter-clockwise");
  }
  for (const auto& [k, list] : edge_uses(mesh)) {
    if (list.size() > 2)
      throw MeshError("edge (" + std::to_string(k.first) + "," + std::to_string(k.second) +
                      ") is shared by more than two cells");
    if (list.size() == 2 && list[0].a == list[1].a)
      throw MeshError("cells " + std::to_string(list[0].cell) + " and " + std::to_string(list[1].cell) +
                      " traverse a shared edge in the same direction");
  }
  for (const auto& s : mesh.boundary)
    if (s.a < 0 || s.a >= nv || s.b < 0 || s.b >= nv)
      throw MeshError("boundary segment references missing vertex");
  const double total = mesh.total_cell_area();
  const double dom = mesh.domain_area();
  if (std::abs(total - dom) > 1e-12 * std::max(1.0, std::abs(dom)) * 10.0)
    throw MeshError("cells do not tile the domain (overlap or gap)");
}

void split_hanging_edges(PrimalMesh& mesh, double rel_tol) {
  const int nv = static_cast<int>(mesh.vertices.size());
  // Only edges that are not already matched can hide a hanging node.
  auto uses = edge_uses(mesh);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    auto& loop = mesh.cells[c];
    std::vector<int> out;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const int a = loop[i];
      const int b = loop[(i + 1) % loop.size()];
      out.push_back(a);
      if (uses[key(a, b)].size() != 1) continue;
      const Vec2& pa = mesh.vertices[a];
      const Vec2& pb = mesh.vertices[b];
      const Vec2 d = pb - pa;
      const double len2 = d.squaredNorm();
      const double tol = rel_tol * std::sqrt(len2);
      std::vector<std::pair<double, int>> inside;
      for (int v = 0; v < nv; ++v) {
        if (v == a || v == b) continue;
        const Vec2 w = mesh.vertices[v] - pa;
        const double t = w.dot(d) / len2;
        if (t <= rel_tol || t >= 1.0 - rel_tol) continue;
        const double dist = std::abs(d.x() * w.y() - d.y() * w.x()) / std::sqrt(len2);
        if (dist <= tol) inside.emplace_back(t, v);
      }
      std::sort(inside.begin(), inside.end());
      for (const auto& [t, v] : inside) out.push_back(v);
    }
    loop = std::move(out);
  }
  // Boundary segments are split the same way.
  std::vector<BoundarySegment> bnd;
  for (const auto& s : mesh.boundary) {
    const Vec2& pa = mesh.vertices[s.a];
    const Vec2 d = mesh.vertices[s.b] - pa;
    const double len2 = d.squaredNorm();
    std::vector<std::pair<double, int>> inside;
    for (int v = 0; v < nv; ++v) {
      if (v == s.a || v == s.b) continue;
      const Vec2 w = mesh.vertices[v] - pa;
      const double t = w.dot(d) / len2;
      if (t <= rel_tol || t >= 1.0 - rel_tol) continue;
      if (std::abs(d.x() * w.y() - d.y() * w.x()) / std::sqrt(len2) <= rel_tol * std::sqrt(len2))
        inside.emplace_back(t, v);
    }
    std::sort(inside.begin(), inside.end());
    int prev = s.a;
    for (const auto& [t, v] : inside) {
      bnd.push_back({prev, v, s.tag});
      prev = v;
    }
    bnd.push_back({prev, s.b, s.tag});
  }
  mesh.boundary = std::move(bnd);
}

// --- generators -------------------------------------------------------------

PrimalMesh generate_tensor_grid(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 2 || ys.size() < 2) throw MeshError("tensor grid needs at least two lines per direction");
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;
  PrimalMesh mesh;
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) mesh.vertices.emplace_back(xs[i], ys[j]);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      mesh.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
  for (int i = 0; i < nx; ++i) {
    mesh.boundary.push_back({vid(i, 0), vid(i + 1, 0), square_tag::bottom});
    mesh.boundary.push_back({vid(i + 1, ny), vid(i, ny), square_tag::top});
  }
  for (int j = 0; j < ny; ++j) {
    mesh.boundary.push_back({vid(nx, j), vid(nx, j + 1), square_tag::right});
    mesh.boundary.push_back({vid(0, j + 1), vid(0, j), square_tag::left});
  }
  return mesh;
}

PrimalMesh generate_uniform_square(int n) {
  if (n < 1) throw MeshError("square mesh needs N >= 1");
  std::vector<double> lines(n + 1);
  for (int i = 0; i <= n; ++i) lines[i] = static_cast<double>(i) / n;
  lines[n] = 1.0;
  return generate_tensor_grid(lines, lines);
}

PrimalMesh generate_trapezoidal(int n, double offset_fraction) {
  if (n < 2 || n % 2 != 0) throw MeshError("trapezoidal mesh needs an even N >= 2");
  if (!(offset_fraction > 0.0 && offset_fraction < 0.5))
    throw MeshError("trapezoid offset fraction must lie in (0, 0.5)");
  PrimalMesh mesh = generate_uniform_square(n);
  const double shift = offset_fraction / n;
  for (int j = 1; j < n; ++j)
    for (int i = 0; i <= n; ++i) {
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      mesh.vertices[j * (n + 1) + i].y() += sign * shift;
    }
  return mesh;
}

double shishkin_transition(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw MeshError("Shishkin parameter theta must lie in (0,1)");
  return std::min(0.5, 3.0 * theta * std::abs(std::log(theta)));
}

PrimalMesh generate_shishkin(int n, double theta) {
  if (n < 2 || n % 2 != 0) throw MeshError("Shishkin mesh needs an even N >= 2");
  const double delta = shishkin_transition(theta);
  std::vector<double> xs(n + 1), ys(n + 1);
  for (int j = 0; j <= n; ++j) {
    xs[j] = (2 * j <= n) ? j * 2.0 * delta / n : delta + (j - n / 2) * 2.0 * (1.0 - delta) / n;
    ys[j] = static_cast<double>(j) / n;
  }
  xs[n] = 1.0;
  ys[n] = 1.0;
  return generate_tensor_grid(xs, ys);
}

double basin_depth(const BasinSpec& spec, double x) {
  return x <= spec.step_x ? spec.deep_thickness : spec.shallow_thickness;
}

PrimalMesh generate_basin(const BasinSpec& spec) {
  if (spec.columns <= 0 || spec.rows <= 0) throw MeshError("basin resolution must be positive");
  if (spec.rows < 5) throw MeshError("basin mesh needs at least 5 rows (2 + 2 + lower aquifer)");
  if (!(spec.step_x > 0 && spec.step_x < spec.width)) throw MeshError("basin step must lie inside the basin");
  const double top = spec.deep_thickness;
  const double bedrock_high = spec.deep_thickness - spec.shallow_thickness;
  const double lower_top = top - spec.upper_aquifer - spec.confining;
  if (!(bedrock_high > 0 && bedrock_high < lower_top)) throw MeshError("inconsistent basin layer thicknesses");

  const int left_cols = std::clamp(static_cast<int>(std::lround(spec.columns * spec.step_x / spec.width)), 1,
                                   spec.columns - 1);
  const int right_cols = spec.columns - left_cols;
  const int lower_rows = spec.rows - 4;
  const int shallow_rows = std::clamp(
      static_cast<int>(std::lround(lower_rows * (lower_top - bedrock_high) / lower_top)), 1, lower_rows - 1);
  const int deep_rows = lower_rows - shallow_rows;

  // Row lines from the bottom up; the bedrock step sits on line deep_rows.
  std::vector<double> ys;
  for (int r = 0; r < deep_rows; ++r) ys.push_back(bedrock_high * r / deep_rows);
  for (int r = 0; r < shallow_rows; ++r) ys.push_back(bedrock_high + (lower_top - bedrock_high) * r / shallow_rows);
  ys.push_back(lower_top);
  ys.push_back(lower_top + 0.5 * spec.confining);
  ys.push_back(lower_top + spec.confining);
  ys.push_back(lower_top + spec.confining + 0.5 * spec.upper_aquifer);
  ys.push_back(top);
  const int nrows = static_cast<int>(ys.size()) - 1;

  std::vector<double> xs;
  for (int i = 0; i < left_cols; ++i) xs.push_back(spec.step_x * i / left_cols);
  for (int i = 0; i <= right_cols; ++i) xs.push_back(spec.step_x + (spec.width - spec.step_x) * i / right_cols);

  PrimalMesh mesh;
  const int ncols = static_cast<int>(xs.size()) - 1;
  // node[i][r] = vertex id or -1 below the bedrock
  std::vector<std::vector<int>> node(ncols + 1, std::vector<int>(nrows + 1, -1));
  for (int i = 0; i <= ncols; ++i) {
    const int first = (i <= left_cols) ? 0 : deep_rows;
    for (int r = first; r <= nrows; ++r) {
      node[i][r] = static_cast<int>(mesh.vertices.size());
      mesh.vertices.emplace_back(xs[i], ys[r]);
    }
  }
  for (int r = 0; r < nrows; ++r) {
    for (int i = 0; i < ncols; ++i) {
      if (i >= left_cols && r < deep_rows) continue;
      mesh.cells.push_back({node[i][r], node[i + 1][r], node[i + 1][r + 1], node[i][r + 1]});
      const double ymid = 0.5 * (ys[r] + ys[r + 1]);
      const bool conf = ymid > lower_top && ymid < lower_top + spec.confining;
      mesh.cell_tags.push_back(conf ? basin_tag::confining : basin_tag::aquifer);
    }
  }
  using namespace basin_tag;
  for (int i = 0; i < ncols; ++i) {
    const int r0 = (i < left_cols) ? 0 : deep_rows;
    mesh.boundary.push_back({node[i][r0], node[i + 1][r0], A});
    mesh.boundary.push_back({node[i + 1][nrows], node[i][nrows], D});
  }
  for (int r = 0; r < deep_rows; ++r) mesh.boundary.push_back({node[left_cols][r], node[left_cols][r + 1], A});
  for (int r = deep_rows; r < nrows; ++r) mesh.boundary.push_back({node[ncols][r], node[ncols][r + 1], B});
  for (int r = 0; r < nrows; ++r) {
    const bool upper = ys[r] >= lower_top - 1e-9;
    mesh.boundary.push_back({node[0][r + 1], node[0][r], upper ? C : E});
  }
  return mesh;
}

// --- text format ------------------------------------------------------------

namespace {

struct LineReader {
  std::istringstream in;
  int line_no = 0;
  explicit LineReader(const std::string& text) : in(text) {}

  // Next non-empty line with comments stripped, split into tokens.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      std::istringstream ls(line);
      tokens.clear();
      for (std::string t; ls >> t;) tokens.push_back(t);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw MeshError("mesh parse error at line " + std::to_string(line_no) + ": " + msg);
  }
};

int to_int(const LineReader& r, const std::string& s) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) r.fail("expected integer, got '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    r.fail("expected integer, got '" + s + "'");
  }
}

double to_double(const LineReader& r, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) r.fail("expected number, got '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    r.fail("expected number, got '" + s + "'");
  }
}

int section_count(LineReader& r, std::vector<std::string>& tok, const char* name) {
  if (!r.next(tok)) r.fail(std::string("missing '") + name + "' section");
  if (tok.size() != 2 || tok[0] != name) r.fail(std::string("expected '") + name + " <count>'");
  const int n = to_int(r, tok[1]);
  if (n < 0) r.fail("negative count");
  return n;
}

}  // namespace

PrimalMesh load_primal_mesh(const std::string& text) {
  LineReader r(text);
  std::vector<std::string> tok;
  if (!r.next(tok) || tok.size() != 2 || tok[0] != "sdgmesh" || tok[1] != "1")
    r.fail("expected header 'sdgmesh 1'");
  PrimalMesh mesh;
  const int nv = section_count(r, tok, "vertices");
  for (int i = 0; i < nv; ++i) {
    if (!r.next(tok) || tok.size() != 2) r.fail("expected 'x y'");
    mesh.vertices.emplace_back(to_double(r, tok[0]), to_double(r, tok[1]));
  }
  const int nc = section_count(r, tok, "cells");
  for (int c = 0; c < nc; ++c) {
    if (!r.next(tok)) r.fail("unexpected end of cells");
    const int k = to_int(r, tok[0]);
    if (k < 3 || static_cast<int>(tok.size()) != k + 1) r.fail("cell line must be 'k i1 ... ik' with k >= 3");
    std::vector<int> loop;
    for (int i = 1; i <= k; ++i) {
      const int v = to_int(r, tok[i]);
      if (v < 0 || v >= nv) r.fail("vertex index out of range");
      loop.push_back(v);
    }
    mesh.cells.push_back(std::move(loop));
  }
  const int nb = section_count(r, tok, "boundary");
  for (int b = 0; b < nb; ++b) {
    if (!r.next(tok) || tok.size() != 3) r.fail("expected 'i j tag'");
    BoundarySegment s{to_int(r, tok[0]), to_int(r, tok[1]), to_int(r, tok[2])};
    if (s.a < 0 || s.a >= nv || s.b < 0 || s.b >= nv) r.fail("vertex index out of range");
    mesh.boundary.push_back(s);
  }
  if (r.next(tok)) {
    if (tok.size() == 2 && tok[0] == "tags") {
      const int nt = to_int(r, tok[1]);
      if (nt != nc) r.fail("tag count must equal cell count");
      for (int c = 0; c < nt; ++c) {
        if (!r.next(tok) || tok.size() != 1) r.fail("expected cell tag");
        mesh.cell_tags.push_back(to_int(r, tok[0]));
      }
    } else {
      r.fail("unexpected trailing content");
    }
  }
  split_hanging_edges(mesh);
  validate(mesh);
  return mesh;
}

std::string save_primal_mesh(const PrimalMesh& mesh) {
  std::ostringstream out;
  out.precision(17);
  out << "sdgmesh 1\n";
  out << "vertices " << mesh.vertices.size() << "\n";
  for (const auto& v : mesh.vertices) out << v.x() << " " << v.y() << "\n";
  out << "cells " << mesh.cells.size() << "\n";
  for (const auto& loop : mesh.cells) {
    out << loop.size();
    for (int v : loop) out << " " << v;
    out << "\n";
  }
  out << "boundary " << mesh.boundary.size() << "\n";
  for (const auto& s : mesh.boundary) out << s.a << " " << s.b << " " << s.tag << "\n";
  if (!mesh.cell_tags.empty()) {
    out << "tags " << mesh.cell_tags.size() << "\n";
    for (int t : mesh.cell_tags) out << t << "\n";
  }
  return out.str();
}

}  // namespace sdg
