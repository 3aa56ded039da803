#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sdg/verification.hpp"

using namespace sdg;

namespace {

// fourth-order central difference of g at s with step h
template <class G>
auto fd(G&& g, double s, double h) {
  return (-g(s + 2 * h) + 8.0 * g(s + h) - 8.0 * g(s - h) + g(s - 2 * h)) / (12.0 * h);
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

std::vector<ManufacturedCase> all_cases() {
  std::vector<ManufacturedCase> out;
  for (double c0 : {1.0, 0.0}) {
    MaterialParams m;
    m.c0 = c0;
    m.mu = 1.3;
    m.lambda = 2.1;
    m.alpha = 0.8;
    out.push_back(ManufacturedCase::smooth(m));
    m.permeability << 1.0 / 50, 0.0, 0.0, 1.0;
    out.push_back(ManufacturedCase::smooth(m));
    out.push_back(ManufacturedCase::layered(m, 0.05));
    m.permeability.setIdentity();
    out.push_back(ManufacturedCase::layered(m, 1e-2));
  }
  return out;
}

}  // namespace

TEST_CASE("manufactured fields at known points") {
  MaterialParams m;
  const auto sm = ManufacturedCase::smooth(m);
  for (const Vec2 x : {Vec2(0.3, 0.7), Vec2(0.9, 0.1)}) CHECK(sm.fields(x, 0.0).u.x() == 0.0);
  CHECK(sm.fields(Vec2(0.5, 0.0), 0.0).p == doctest::Approx(11.0).epsilon(1e-15));
  CHECK(sm.fields(Vec2(0.2, 0.4), 0.0).u.y() == doctest::Approx(0.2));

  const double theta = 1e-2;
  const auto ly = ManufacturedCase::layered(m, theta);
  const Vec2 a(0.0, 0.3), b(theta, 0.3);
  const double t = 0.2;
  CHECK(ly.fields(b, t).u.x() == doctest::Approx(ly.fields(a, t).u.x() * std::exp(-1.0)));
  CHECK(ly.fields(b, t).u.y() == doctest::Approx(ly.fields(a, t).u.y() * std::exp(-1.0)));
}

TEST_CASE("manufactured derivatives match finite differences") {
  std::mt19937 gen(42);
  std::uniform_real_distribution<double> u01(0.05, 0.95);
  const double h = 1e-4, tol = 1e-6;
  for (const auto& mc : all_cases()) {
    const auto& m = mc.material();
    for (int trial = 0; trial < 100; ++trial) {
      const Vec2 x(u01(gen), u01(gen));
      const double t = 0.01 * u01(gen);
      const auto k = mc.kinematics(x, t);
      const auto f = mc.fields(x, t);
      auto at = [&](double dx, double dy) { return mc.fields(x + Vec2(dx, dy), t); };

      // gradients of u and p
      for (int i = 0; i < 2; ++i) {
        CHECK(close(k.grad_u(i, 0), fd([&](double s) { return at(s, 0).u[i]; }, 0.0, h), tol));
        CHECK(close(k.grad_u(i, 1), fd([&](double s) { return at(0, s).u[i]; }, 0.0, h), tol));
      }
      CHECK(close(k.grad_p.x(), fd([&](double s) { return at(s, 0).p; }, 0.0, h), tol));
      CHECK(close(k.grad_p.y(), fd([&](double s) { return at(0, s).p; }, 0.0, h), tol));
      CHECK(close(k.dt_p, fd([&](double s) { return mc.fields(x, t + s).p; }, 0.0, h), tol));

      // rotation = (-du1/dy + du2/dx) / 2
      const double rot = 0.5 * (-fd([&](double s) { return at(0, s).u.x(); }, 0.0, h) +
                                fd([&](double s) { return at(s, 0).u.y(); }, 0.0, h));
      CHECK(close(f.gamma, rot, tol));

      // z = -K grad p through the flux field itself
      CHECK(close(f.z.x(), -(m.permeability * k.grad_p).x(), 1e-14));

      // f = -div sigma from differences of the exact stress
      for (int i = 0; i < 2; ++i) {
        const double div = fd([&](double s) { return at(s, 0).sigma(i, 0); }, 0.0, h) +
                           fd([&](double s) { return at(0, s).sigma(i, 1); }, 0.0, h);
        CHECK(close(mc.body_force(x, t)[i], -div, tol));
      }

      // q = d/dt (c0 p + alpha div u) + div z
      auto storage = [&](double s) {
        const auto kk = mc.kinematics(x, t + s);
        return m.c0 * kk.p + m.alpha * kk.grad_u.trace();
      };
      const double div_z = fd([&](double s) { return at(s, 0).z.x(); }, 0.0, h) +
                           fd([&](double s) { return at(0, s).z.y(); }, 0.0, h);
      CHECK(close(mc.source(x, t), fd(storage, 0.0, h) + div_z, tol));
    }
  }
}

TEST_CASE("source loses only the storage term at c0 = 0") {
  MaterialParams m1, m0;
  m1.c0 = 1.0;
  m0.c0 = 0.0;
  const auto a = ManufacturedCase::smooth(m1), b = ManufacturedCase::smooth(m0);
  const Vec2 x(0.37, 0.61);
  const double t = 0.004;
  CHECK(a.source(x, t) - b.source(x, t) == doctest::Approx(a.kinematics(x, t).dt_p).epsilon(1e-13));
}

TEST_CASE("error norms") {
  const StaggeredMesh mesh(generate_trapezoidal(4));
  const SpaceSet sp(mesh, 1);

  // injecting the interpolant of a linear solution gives zero error
  const auto sigma = [](const Vec2& x) {
    Mat2 s;
    s << 1 + x.x(), 2 - x.y(), 0.5 * x.x(), 3 * x.y();
    return s;
  };
  const ExactSolution exact = [&](const Vec2& x, double) {
    ExactFields f;
    f.sigma = sigma(x);
    f.u = Vec2(x.x() - 2 * x.y(), 1 + x.y());
    f.gamma = 0.3 - x.x() + x.y();
    f.z = Vec2(2 * x.y(), -x.x());
    f.p = 4 - x.x() * 0.5;
    return f;
  };
  FieldState st;
  const auto ts = interpolate_tensor(sp.flux, sigma);
  st.sigma = Eigen::VectorXd(2 * sp.flux.num_dofs());
  st.sigma << ts.row1, ts.row2;
  st.u = Eigen::VectorXd(2 * sp.scalar.num_dofs());
  st.u << interpolate_moments(sp.scalar, [&](const Vec2& x) { return exact(x, 0).u.x(); }),
      interpolate_moments(sp.scalar, [&](const Vec2& x) { return exact(x, 0).u.y(); });
  st.gamma = interpolate_nodal(sp.rotation, [&](const Vec2& x) { return exact(x, 0).gamma; });
  st.z = interpolate_normal_moments(sp.flux, [&](const Vec2& x) { return exact(x, 0).z; });
  st.p = interpolate_moments(sp.scalar, [&](const Vec2& x) { return exact(x, 0).p; });
  for (double e : state_errors(sp, st, exact)) CHECK(e <= 1e-11);

  // quadrature saturation on a smooth-case state
  MaterialParams m;
  const auto mc = ManufacturedCase::smooth(m);
  const BiotSolver solver(mc.problem(sp, 0.01, 1));
  const auto s1 = solver.monolithic_step(solver.initial_state(), 0.01);
  const auto e6 = state_errors(sp, s1, mc.exact());
  const auto e12 = state_errors(sp, s1, mc.exact(), {12, {}});
  for (int f = 0; f < 5; ++f) CHECK(std::abs(e6[f] - e12[f]) <= 1e-9 * e12[f]);

  // the layered case needs its graded composite rule
  const auto ly = ManufacturedCase::layered(m, 1e-2);
  const BiotSolver lsolver(ly.problem(sp, 0.01, 1));
  const auto l1 = lsolver.monolithic_step(lsolver.initial_state(), 0.01);
  auto q = ly.error_quadrature();
  const auto l6 = state_errors(sp, l1, ly.exact(), q);
  q.degree = 12;
  const auto l12 = state_errors(sp, l1, ly.exact(), q);
  for (int f = 0; f < 5; ++f) CHECK(std::abs(l6[f] - l12[f]) <= 1e-9 * l12[f]);

  CHECK_THROWS_AS((void)state_errors(sp, FieldState{}, exact), std::invalid_argument);
}

TEST_CASE("discrete time norms on constant-in-time errors") {
  const StaggeredMesh mesh(generate_uniform_square(2));
  const SpaceSet sp(mesh, 1);
  MaterialParams m;
  const auto mc = ManufacturedCase::smooth(m);
  const double T = 0.5;
  const BiotSolver solver(mc.problem(sp, T, 4));
  Trajectory traj;
  const auto s0 = solver.initial_state();
  for (int n = 0; n <= 4; ++n) {
    auto s = s0;
    s.t = n * T / 4;
    traj.states.push_back(s);
  }
  const ExactSolution frozen = [&](const Vec2& x, double) { return mc.fields(x, 0.3); };
  const auto r = compute_errors(solver, traj, frozen, 0.5);
  for (int f = 0; f < 5; ++f) {
    CHECK(r.final_time[f] >= 0.0);
    CHECK(r.linf_time[f] == doctest::Approx(r.final_time[f]));
    CHECK(r.l2_time[f] == doctest::Approx(std::sqrt(T) * r.final_time[f]));
    CHECK(r.linf_time[f] >= r.l2_time[f] / std::sqrt(T) * (1 - 1e-12));
  }
  // K = I: the weighted flux error equals the plain one
  CHECK(r.z_norm == doctest::Approx(r.final_time[3]));

  traj.states.pop_back();
  CHECK_THROWS_AS((void)compute_errors(solver, traj, frozen, 0.5), std::invalid_argument);
}

TEST_CASE("convergence rates") {
  std::vector<double> h{0.25, 0.125, 0.0625, 0.03125};
  std::vector<double> e2, e15;
  for (double v : h) {
    e2.push_back(v * v);
    e15.push_back(std::pow(v, 1.5));
  }
  const auto r2 = convergence_rates(h, e2);
  for (double r : r2.pairwise) CHECK(r == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r2.least_squares == doctest::Approx(2.0).epsilon(1e-12));
  const auto r15 = convergence_rates(h, e15);
  for (double r : r15.pairwise) CHECK(r == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r15.least_squares == doctest::Approx(1.5).epsilon(1e-12));

  CHECK_THROWS_AS((void)convergence_rates({0.1, 0.2}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS((void)convergence_rates({0.1}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS((void)convergence_rates({0.2, 0.1}, {1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("local conservation residual") {
  const StaggeredMesh mesh(generate_uniform_square(4));
  const SpaceSet sp(mesh, 1);
  MaterialParams m;
  const auto mc = ManufacturedCase::smooth(m);
  const BiotSolver solver(mc.problem(sp, 0.01, 2));
  const auto traj = run_transient(solver, {});
  const auto f = solver.problem().body_force;
  for (const auto& st : traj.states) CHECK(check_conservation(sp, st.sigma, f, st.t) <= 1e-9);

  // perturbation probe
  auto bad = traj.states.back().sigma;
  bad += 1e-3 * oracle::random_vector(static_cast<int>(bad.size()), 3);
  CHECK(check_conservation(sp, bad, f, traj.states.back().t) > 1e-6);
}

TEST_CASE("local conservation with zero body force and traction data") {
  const StaggeredMesh mesh(generate_uniform_square(4));
  const SpaceSet sp(mesh, 1);
  TransientProblem pb;
  pb.spaces = &sp;
  pb.material = MaterialField(MaterialParams{});
  BoundaryCondition left;
  left.fixed = {true, true};
  BoundaryCondition top;
  top.traction = [](const Vec2&, double t) { return Vec2(0.0, t > 0 ? -1.0 : 0.0); };
  pb.boundary.set(square_tag::left, left);
  pb.boundary.set(square_tag::top, top);
  pb.boundary.set(square_tag::bottom, BoundaryCondition{});
  pb.boundary.set(square_tag::right, BoundaryCondition{});
  pb.final_time = 0.002;
  pb.steps = 2;
  const BiotSolver solver(pb);
  const auto traj = run_transient(solver, {});
  CHECK(traj.states.back().sigma.lpNorm<Eigen::Infinity>() > 0.1);
  for (const auto& st : traj.states) CHECK(check_conservation(sp, st.sigma, {}, st.t) <= 1e-9);
}

TEST_CASE("oscillation detector") {
  CHECK(count_extrema({1, 1, 1, 1, 1}) == 0);
  CHECK(count_extrema({1, 2, 3, 4}) == 0);
  CHECK(count_extrema({1, 3, 2}) == 1);
  std::vector<double> checker;
  for (int i = 0; i < 12; ++i) checker.push_back(i % 2 ? 1.0 : -1.0);
  CHECK(count_extrema(checker) == 10);

  const StaggeredMesh mesh(generate_uniform_square(8));
  const SpaceSet sp(mesh, 1);
  const Eigen::VectorXd c = interpolate_moments(sp.scalar, [](const Vec2&) { return 2.5; });
  const auto flat = oscillation_profile(sp, c, 0.5);
  CHECK(flat.x.size() == 8);
  CHECK(flat.extrema == 0);
  for (double v : flat.p) CHECK(v == doctest::Approx(2.5));

  const Eigen::VectorXd lin = interpolate_moments(sp.scalar, [](const Vec2& x) { return x.x(); });
  const auto ramp = oscillation_profile(sp, lin, 0.75);
  CHECK(ramp.extrema == 0);
  CHECK(ramp.p.front() == doctest::Approx(1.0 / 16));
}
