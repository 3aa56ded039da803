#include "sdg/verification.hpp"
#include "sdg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace sdg {

using std::numbers::pi;

ManufacturedCase ManufacturedCase::smooth(const MaterialParams& material) {
  material.validate();
  ManufacturedCase c;
  c.id_ = CaseId::smooth;
  c.material_ = material;
  return c;
}

ManufacturedCase ManufacturedCase::layered(const MaterialParams& material, double theta) {
  material.validate();
  if (!(theta > 0.0)) throw std::invalid_argument("layer width theta must be positive");
  ManufacturedCase c;
  c.id_ = CaseId::layered;
  c.material_ = material;
  c.theta_ = theta;
  return c;
}

Kinematics ManufacturedCase::kinematics(const Vec2& x, double t) const {
  Kinematics k;
  const double tp = 2.0 * pi;
  if (id_ == CaseId::smooth) {
    // u = (sin(2 pi t) sin(2 pi x) sin(2 pi y), x cos t)
    // p = e^t (sin(pi x) cos(pi y) + 10)
    const double s = std::sin(tp * t), ds = tp * std::cos(tp * t);
    const double sx = std::sin(tp * x.x()), cx = std::cos(tp * x.x());
    const double sy = std::sin(tp * x.y()), cy = std::cos(tp * x.y());
    k.u = {s * sx * sy, x.x() * std::cos(t)};
    k.grad_u << s * tp * cx * sy, s * tp * sx * cy, std::cos(t), 0.0;
    k.laplace_u = {-2.0 * tp * tp * s * sx * sy, 0.0};
    k.grad_div_u = {-tp * tp * s * sx * sy, tp * tp * s * cx * cy};
    k.dt_div_u = ds * tp * cx * sy;
    const double e = std::exp(t);
    const double spx = std::sin(pi * x.x()), cpx = std::cos(pi * x.x());
    const double spy = std::sin(pi * x.y()), cpy = std::cos(pi * x.y());
    k.p = e * (spx * cpy + 10.0);
    k.dt_p = k.p;
    k.grad_p = {e * pi * cpx * cpy, -e * pi * spx * spy};
    k.hess_p << -e * pi * pi * spx * cpy, -e * pi * pi * cpx * spy, -e * pi * pi * cpx * spy, -e * pi * pi * spx * cpy;
    return k;
  }
  // u = sin(2 pi t) e^{-x/theta} (sin(2 pi y), cos(2 pi y))
  // p = e^t e^{-x/theta} x (1-x)^2 y (1-y)^2
  const double th = theta_;
  const double s = std::sin(tp * t), ds = tp * std::cos(tp * t);
  const double ex = std::exp(-x.x() / th);
  const double sy = std::sin(tp * x.y()), cy = std::cos(tp * x.y());
  const double a = 1.0 / th + tp;
  const double lap = 1.0 / (th * th) - tp * tp;
  k.u = {s * sy * ex, s * cy * ex};
  k.grad_u << -s * sy * ex / th, s * tp * cy * ex, -s * cy * ex / th, -s * tp * sy * ex;
  k.laplace_u = {s * sy * ex * lap, s * cy * ex * lap};
  k.grad_div_u = {s * sy * ex * a / th, -s * tp * cy * ex * a};
  k.dt_div_u = -ds * sy * ex * a;

  auto cubic = [](double v, double& g, double& g1, double& g2) {
    g = v * (1.0 - v) * (1.0 - v);
    g1 = (1.0 - v) * (1.0 - 3.0 * v);
    g2 = 6.0 * v - 4.0;
  };
  double gx, gx1, gx2, hy, hy1, hy2;
  cubic(x.x(), gx, gx1, gx2);
  cubic(x.y(), hy, hy1, hy2);
  const double px = ex * gx;
  const double px1 = ex * (gx1 - gx / th);
  const double px2 = ex * (gx2 - 2.0 * gx1 / th + gx / (th * th));
  const double e = std::exp(t);
  k.p = e * px * hy;
  k.dt_p = k.p;
  k.grad_p = {e * px1 * hy, e * px * hy1};
  k.hess_p << e * px2 * hy, e * px1 * hy1, e * px1 * hy1, e * px * hy2;
  return k;
}

ExactFields ManufacturedCase::fields(const Vec2& x, double t) const {
  const auto k = kinematics(x, t);
  const auto& m = material_;
  ExactFields f;
  f.u = k.u;
  f.p = k.p;
  const double div = k.grad_u.trace();
  f.sigma = m.mu * (k.grad_u + k.grad_u.transpose()) + (m.lambda * div - m.alpha * k.p) * Mat2::Identity();
  f.gamma = 0.5 * (-k.grad_u(0, 1) + k.grad_u(1, 0));
  f.z = -(m.permeability * k.grad_p);
  return f;
}

Vec2 ManufacturedCase::body_force(const Vec2& x, double t) const {
  const auto k = kinematics(x, t);
  const auto& m = material_;
  const Vec2 div_sigma = m.mu * k.laplace_u + (m.mu + m.lambda) * k.grad_div_u - m.alpha * k.grad_p;
  return -div_sigma;
}

double ManufacturedCase::source(const Vec2& x, double t) const {
  const auto k = kinematics(x, t);
  const auto& m = material_;
  const double div_z = -(m.permeability.cwiseProduct(k.hess_p)).sum();
  return m.c0 * k.dt_p + m.alpha * k.dt_div_u + div_z;
}

ExactSolution ManufacturedCase::exact() const {
  return [c = *this](const Vec2& x, double t) { return c.fields(x, t); };
}

ErrorQuadrature ManufacturedCase::error_quadrature() const {
  if (id_ == CaseId::smooth) return {};
  // e^{-x/theta} needs pieces of width ~theta/4 at the wall; a degree-6 rule on
  // pieces growing like e^{x/(7 theta)} keeps the absolute error level flat.
  return {-1, [theta = theta_](const Vec2& c) {
            return std::min(error_piece_diameter, 0.25 * theta * std::exp(std::max(c.x(), 0.0) / (7 * theta)));
          }};
}

BoundaryData ManufacturedCase::boundary() const {
  BoundaryData bc;
  const auto u = [c = *this](const Vec2& x, double t) { return c.kinematics(x, t).u; };
  const auto p = [c = *this](const Vec2& x, double t) { return c.kinematics(x, t).p; };
  for (int tag : {square_tag::bottom, square_tag::right, square_tag::top, square_tag::left})
    bc.set(tag, BoundaryCondition::dirichlet(u, p));
  return bc;
}

TransientProblem ManufacturedCase::problem(const SpaceSet& spaces, double final_time, int steps) const {
  TransientProblem pb;
  pb.spaces = &spaces;
  pb.material = MaterialField(material_);
  pb.body_force = [c = *this](const Vec2& x, double t) { return c.body_force(x, t); };
  pb.source = [c = *this](const Vec2& x, double t) { return c.source(x, t); };
  pb.boundary = boundary();
  pb.initial_pressure = [c = *this](const Vec2& x) { return c.kinematics(x, 0.0).p; };
  pb.final_time = final_time;
  pb.steps = steps;
  return pb;
}

// --- errors ------------------------------------------------------------------------

namespace {

Eigen::VectorXd gather(const Eigen::VectorXd& c, const std::vector<int>& dofs, int offset = 0) {
  Eigen::VectorXd v(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) v[static_cast<Eigen::Index>(i)] = c[offset + dofs[i]];
  return v;
}

std::vector<int> to_vector(std::span<const int> s) { return {s.begin(), s.end()}; }

// Degree-d rule on the reference triangle split uniformly into 4^r pieces.
const TriangleRule& composite_rule(int degree, int levels) {
  static std::mutex lock;
  static std::map<std::pair<int, int>, TriangleRule> cache;
  const std::scoped_lock guard(lock);
  auto [it, fresh] = cache.try_emplace({degree, levels});
  if (!fresh) return it->second;
  const auto& base = triangle_rule(degree);
  const int m = 1 << levels;
  const double s = 1.0 / m;
  TriangleRule& out = it->second;
  for (int i = 0; i < m; ++i)
    for (int j = 0; i + j < m; ++j) {
      // upward piece at (i, j), and the downward one next to it
      for (std::size_t q = 0; q < base.points.size(); ++q) {
        out.points.emplace_back(s * (i + base.points[q].x()), s * (j + base.points[q].y()));
        out.weights.push_back(base.weights[q] * s * s);
        if (i + j + 1 < m) {
          out.points.emplace_back(s * (i + 1 - base.points[q].x()), s * (j + 1 - base.points[q].y()));
          out.weights.push_back(base.weights[q] * s * s);
        }
      }
    }
  return out;
}

template <class Visit>
void for_each_point(const SpaceSet& sp, const ErrorQuadrature& eq, Visit&& visit) {
  const auto& mesh = *sp.mesh;
  const int degree = eq.degree < 0 ? 2 * sp.order + 4 : eq.degree;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleMap map(mesh, t);
    double target = error_piece_diameter;
    if (eq.piece_diameter)
      for (const Vec2& v : {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}) target = std::min(target, eq.piece_diameter(map.to_physical(v)));
    int levels = 0;
    while (levels < max_error_refinement && mesh.triangle(t).diameter / (1 << levels) > target) ++levels;
    const auto& tr = composite_rule(degree, levels);
    for (std::size_t q = 0; q < tr.points.size(); ++q)
      visit(t, tr.points[q], map.to_physical(tr.points[q]), tr.weights[q] * map.det);
  }
}

}  // namespace

FieldErrors state_errors(const SpaceSet& sp, const FieldState& s, const ExactSolution& exact,
                         const ErrorQuadrature& eq) {
  const int nf = sp.flux.num_dofs();
  const int ns = sp.scalar.num_dofs();
  if (s.sigma.size() != 2 * nf || s.u.size() != 2 * ns || s.gamma.size() != sp.rotation.num_dofs() ||
      s.z.size() != nf || s.p.size() != ns)
    throw std::invalid_argument("state does not match the discrete spaces");
  FieldErrors acc{};
  Eigen::MatrixXd vf, vs, vr;
  int cached = -1;
  std::vector<int> df, ds, dr;
  for_each_point(sp, eq, [&](int t, const Vec2& xi, const Vec2& x, double w) {
    if (t != cached) {
      df = to_vector(sp.flux.local_dofs(t));
      ds = to_vector(sp.scalar.local_dofs(t));
      dr = to_vector(sp.rotation.local_dofs(t));
      cached = t;
    }
    sp.flux.values(t, xi, vf);
    sp.scalar.values(t, xi, vs);
    sp.rotation.values(t, xi, vr);
    const ExactFields e = exact(x, s.t);
    Mat2 sh;
    sh.row(0) = (vf * gather(s.sigma, df)).transpose();
    sh.row(1) = (vf * gather(s.sigma, df, nf)).transpose();
    const Vec2 uh{(vs * gather(s.u, ds)).value(), (vs * gather(s.u, ds, ns)).value()};
    const double gh = (vr * gather(s.gamma, dr)).value();
    const Vec2 zh = vf * gather(s.z, df);
    const double ph = (vs * gather(s.p, ds)).value();
    acc[0] += w * (sh - e.sigma).squaredNorm();
    acc[1] += w * (uh - e.u).squaredNorm();
    acc[2] += w * (gh - e.gamma) * (gh - e.gamma);
    acc[3] += w * (zh - e.z).squaredNorm();
    acc[4] += w * (ph - e.p) * (ph - e.p);
  });
  for (auto& v : acc) v = std::sqrt(v);
  return acc;
}

double flux_energy_error(const SpaceSet& sp, const MaterialField& material, const FieldState& s,
                         const ExactSolution& exact,
                         const ErrorQuadrature& eq) {
  const auto& mesh = *sp.mesh;
  double acc = 0.0;
  Eigen::MatrixXd vf;
  for_each_point(sp, eq, [&](int t, const Vec2& xi, const Vec2& x, double w) {
    const auto dofs = to_vector(sp.flux.local_dofs(t));
    sp.flux.values(t, xi, vf);
    const Vec2 d = vf * gather(s.z, dofs) - exact(x, s.t).z;
    const Mat2 kinv = material.for_cell(mesh.primal(), mesh.triangle(t).cell).permeability_inverse();
    acc += w * d.dot(kinv * d);
  });
  return std::sqrt(acc);
}

ErrorReport compute_errors(const BiotSolver& solver, const Trajectory& traj, const ExactSolution& exact, double h,
                           const ErrorQuadrature& eq) {
  const auto& pb = solver.problem();
  if (static_cast<int>(traj.states.size()) != pb.steps + 1)
    throw std::invalid_argument("error norms need every time level (save_every = 1)");
  ErrorReport r;
  r.h = h;
  r.dt = pb.dt();
  r.dofs = solver.num_unknowns();
  for (int n = 1; n <= pb.steps; ++n) {
    const auto e = state_errors(*pb.spaces, traj.states[n], exact, eq);
    for (int f = 0; f < 5; ++f) {
      r.l2_time[f] += r.dt * e[f] * e[f];
      r.linf_time[f] = std::max(r.linf_time[f], e[f]);
    }
    if (n == pb.steps) r.final_time = e;
  }
  for (auto& v : r.l2_time) v = std::sqrt(v);
  r.z_norm = flux_energy_error(*pb.spaces, pb.material, traj.states.back(), exact, eq);
  return r;
}

RateSummary convergence_rates(const std::vector<double>& h, const std::vector<double>& e) {
  if (h.size() != e.size() || h.size() < 2) throw std::invalid_argument("need at least two refinement levels");
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !(e[i] > 0.0)) throw std::invalid_argument("mesh sizes and errors must be positive");
    if (i > 0 && !(h[i] < h[i - 1])) throw std::invalid_argument("mesh sizes must be strictly decreasing");
  }
  RateSummary r;
  for (std::size_t i = 0; i + 1 < h.size(); ++i)
    r.pairwise.push_back(std::log(e[i] / e[i + 1]) / std::log(h[i] / h[i + 1]));
  double mx = 0, my = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    mx += std::log(h[i]) / n;
    my += std::log(e[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double dx = std::log(h[i]) - mx;
    sxy += dx * (std::log(e[i]) - my);
    sxx += dx * dx;
  }
  r.least_squares = sxy / sxx;
  return r;
}

double check_conservation(const SpaceSet& sp, const Eigen::VectorXd& sigma, const TimeVectorFunction& f, double t,
                          int degree) {
  if (degree < 0) degree = sp.default_quadrature_degree();
  const auto& mesh = *sp.mesh;
  const int nf = sp.flux.num_dofs();
  const auto& er = edge_rule(degree);
  const auto& tr = triangle_rule(degree);
  Eigen::MatrixXd vf;
  double worst = 0.0;
  for (int e : mesh.primal_edges()) {
    if (mesh.edge(e).kind != EdgeKind::primal_interior) continue;
    Vec2 flux = Vec2::Zero();
    Vec2 load = Vec2::Zero();
    for (int tri : mesh.dual_cell(e)) {
      const TriangleMap map(mesh, tri);
      const auto dofs = to_vector(sp.flux.local_dofs(tri));
      const Eigen::VectorXd r1 = gather(sigma, dofs), r2 = gather(sigma, dofs, nf);
      for (int d : mesh.triangle(tri).dual_edges) {
        const auto& edge = mesh.edge(d);
        const Vec2 n = edge.tris[0] == tri ? edge.normal : Vec2(-edge.normal);
        for (std::size_t q = 0; q < er.points.size(); ++q) {
          const Vec2 x = edge_point(mesh, d, er.points[q]);
          sp.flux.values(tri, map.to_reference(x), vf);
          const Eigen::RowVectorXd nv = n.transpose() * vf;
          const double w = er.weights[q] * edge.length;
          flux.x() += w * nv.dot(r1);
          flux.y() += w * nv.dot(r2);
        }
      }
      if (f)
        for (std::size_t q = 0; q < tr.points.size(); ++q)
          load += tr.weights[q] * map.det * f(map.to_physical(tr.points[q]), t);
    }
    worst = std::max(worst, (flux + load).cwiseAbs().maxCoeff());
  }
  return worst;
}

int find_triangle(const StaggeredMesh& mesh, const Vec2& x) {
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const TriangleMap map(mesh, t);
    const Vec2 r = map.to_reference(x);
    const double tol = 1e-12;
    if (r.x() >= -tol && r.y() >= -tol && r.x() + r.y() <= 1.0 + tol) return t;
  }
  return -1;
}

int count_extrema(const std::vector<double>& v, double rel_tol) {
  if (v.size() < 3) return 0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double flat = rel_tol * std::max(*hi - *lo, std::abs(*hi));
  std::vector<double> d;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const double di = v[i + 1] - v[i];
    if (std::abs(di) > flat) d.push_back(di);
  }
  int count = 0;
  for (std::size_t i = 0; i + 1 < d.size(); ++i)
    if (d[i] * d[i + 1] < 0.0) ++count;
  return count;
}

LineProfile oscillation_profile(const SpaceSet& sp, const Eigen::VectorXd& p, double y) {
  const auto& mesh = *sp.mesh;
  const auto& primal = mesh.primal();
  LineProfile prof;
  prof.y = y;
  std::vector<double> xs;
  double ymax = -1e300;
  for (const auto& v : primal.vertices) ymax = std::max(ymax, v.y());
  for (int c = 0; c < primal.num_cells(); ++c) {
    double lo = 1e300, hi = -1e300;
    for (int v : primal.cells[c]) {
      lo = std::min(lo, primal.vertices[v].y());
      hi = std::max(hi, primal.vertices[v].y());
    }
    if (y >= lo && (y < hi || (hi == ymax && y <= hi))) xs.push_back(primal.cell_centroid(c).x());
  }
  std::sort(xs.begin(), xs.end());
  for (double x : xs) {
    const Vec2 pt{x, y};
    const int t = find_triangle(mesh, pt);
    if (t < 0) continue;
    prof.x.push_back(x);
    prof.p.push_back(evaluate_scalar(sp.scalar, p, t, pt));
  }
  prof.extrema = count_extrema(prof.p);
  return prof;
}

}  // namespace sdg
