#include "sdg/assembly.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "sdg/quadrature.hpp"

namespace sdg {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void scatter(Triplets& out, std::span<const int> rows, int row_offset, std::span<const int> cols, int col_offset,
             const Eigen::MatrixXd& local) {
  for (Eigen::Index i = 0; i < local.rows(); ++i)
    for (Eigen::Index j = 0; j < local.cols(); ++j)
      if (local(i, j) != 0.0) out.emplace_back(rows[i] + row_offset, cols[j] + col_offset, local(i, j));
}

SparseMatrix build(int rows, int cols, const Triplets& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

std::vector<TriangleMap> triangle_maps(const StaggeredMesh& mesh) {
  std::vector<TriangleMap> maps;
  maps.reserve(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) maps.emplace_back(mesh, t);
  return maps;
}

SparseMatrix block_diagonal2(const SparseMatrix& a) {
  Triplets t;
  t.reserve(2 * a.nonZeros());
  for (int c = 0; c < a.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
      t.emplace_back(it.row(), it.col(), it.value());
      t.emplace_back(it.row() + a.rows(), it.col() + a.cols(), it.value());
    }
  return build(2 * static_cast<int>(a.rows()), 2 * static_cast<int>(a.cols()), t);
}

}  // namespace

SparseMatrix assemble_bh(const SpaceSet& spaces) {
  const auto& mesh = *spaces.mesh;
  const auto& S = spaces.scalar;
  const auto& F = spaces.flux;
  const int k = spaces.order;
  const auto& tr = triangle_rule(spaces.default_quadrature_degree());
  const auto& er = edge_rule(spaces.default_quadrature_degree());
  const auto maps = triangle_maps(mesh);
  Triplets trip;
  Eigen::MatrixXd sv, sg, fv;

  // (xi, grad w)_tau
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(S.local_size(), F.local_size());
    for (std::size_t q = 0; q < tr.points.size(); ++q) {
      S.gradients(t, tr.points[q], sg);
      F.values(t, tr.points[q], fv);
      local.noalias() += (tr.weights[q] * maps[t].det) * sg.transpose() * fv;
    }
    scatter(trip, S.local_dofs(t), 0, F.local_dofs(t), 0, local);
  }
  // -(xi.n_e, [w])_e on dual edges; the normal trace of edge dof j is l_j
  for (int e : mesh.dual_edges()) {
    const auto& edge = mesh.edge(e);
    const auto fdofs = F.edge_dofs(e);
    for (int s = 0; s < 2; ++s) {
      const int t = edge.tris[s];
      const double sign = s == 0 ? 1.0 : -1.0;
      Eigen::MatrixXd local = Eigen::MatrixXd::Zero(S.local_size(), k + 1);
      for (std::size_t q = 0; q < er.points.size(); ++q) {
        S.values(t, maps[t].to_reference(edge_point(mesh, e, er.points[q])), sv);
        for (int j = 0; j <= k; ++j)
          local.col(j) -= sign * er.weights[q] * edge.length * legendre01(j, er.points[q]) * sv.row(0).transpose();
      }
      scatter(trip, S.local_dofs(t), 0, fdofs, 0, local);
    }
  }
  return build(S.num_dofs(), F.num_dofs(), trip);
}

SparseMatrix assemble_bh_adjoint(const SpaceSet& spaces, bool include_boundary) {
  const auto& mesh = *spaces.mesh;
  const auto& S = spaces.scalar;
  const auto& F = spaces.flux;
  const int k = spaces.order;
  const auto& tr = triangle_rule(spaces.default_quadrature_degree());
  const auto& er = edge_rule(spaces.default_quadrature_degree());
  const auto maps = triangle_maps(mesh);
  Triplets trip;
  Eigen::MatrixXd sv, fv;
  Eigen::RowVectorXd div;

  // -(w, div xi)_tau
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(F.local_size(), S.local_size());
    for (std::size_t q = 0; q < tr.points.size(); ++q) {
      S.values(t, tr.points[q], sv);
      F.divergences(t, tr.points[q], div);
      local.noalias() -= (tr.weights[q] * maps[t].det) * div.transpose() * sv;
    }
    scatter(trip, F.local_dofs(t), 0, S.local_dofs(t), 0, local);
  }
  // (w, [xi.n_e])_e on primal edges; the trace of edge dof j is l_j
  for (int e : mesh.primal_edges()) {
    const auto& edge = mesh.edge(e);
    if (edge.on_boundary() && !include_boundary) continue;
    const auto sdofs = S.edge_dofs(e);
    for (int s = 0; s < 2; ++s) {
      const int t = edge.tris[s];
      if (t < 0) continue;
      const double sign = s == 0 ? 1.0 : -1.0;
      Eigen::MatrixXd local = Eigen::MatrixXd::Zero(F.local_size(), k + 1);
      for (std::size_t q = 0; q < er.points.size(); ++q) {
        F.values(t, maps[t].to_reference(edge_point(mesh, e, er.points[q])), fv);
        const Eigen::RowVectorXd normal_trace = edge.normal.transpose() * fv;
        for (int j = 0; j <= k; ++j)
          local.col(j) += sign * er.weights[q] * edge.length * legendre01(j, er.points[q]) * normal_trace.transpose();
      }
      scatter(trip, F.local_dofs(t), 0, sdofs, 0, local);
    }
  }
  return build(F.num_dofs(), S.num_dofs(), trip);
}

SparseMatrix assemble_Bh(const SpaceSet& spaces) { return block_diagonal2(assemble_bh(spaces)); }

SparseMatrix assemble_Bh_adjoint(const SpaceSet& spaces, bool include_boundary) {
  return block_diagonal2(assemble_bh_adjoint(spaces, include_boundary));
}

OperatorSet assemble_operators(const SpaceSet& spaces, const MaterialField& material) {
  const auto& mesh = *spaces.mesh;
  const auto& S = spaces.scalar;
  const auto& F = spaces.flux;
  const auto& M = spaces.rotation;
  material.validate();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Mat2& K = material.for_cell(mesh.primal(), c).permeability;
    if (!(Eigen::SelfAdjointEigenSolver<Mat2>(K).eigenvalues()(0) > 0.0) || (K - K.transpose()).norm() > 1e-14 * K.norm())
      throw MaterialError("permeability is not symmetric positive definite on cell " + std::to_string(c));
  }

  OperatorSet ops;
  ops.n_scalar = S.num_dofs();
  ops.n_flux = F.num_dofs();
  ops.n_rotation = M.num_dofs();
  const int nf = ops.n_flux;

  const auto& tr = triangle_rule(spaces.default_quadrature_degree());
  const auto maps = triangle_maps(mesh);
  Triplets tA, tAp, tS, tC0, tPa, tK, tG;
  Eigen::MatrixXd sv, fv, mv;
  const int ls = S.local_size();
  const int lf = F.local_size();
  const int lm = M.local_size();

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& mat = material.for_cell(mesh.primal(), mesh.triangle(t).cell);
    const double c = mat.lambda / (2.0 * mat.mu + 2.0 * mat.lambda);
    const Mat2 kinv = mat.permeability_inverse();

    Eigen::MatrixXd mf = Eigen::MatrixXd::Zero(lf, lf);
    Eigen::MatrixXd mk = Eigen::MatrixXd::Zero(lf, lf);
    Eigen::MatrixXd ms = Eigen::MatrixXd::Zero(ls, ls);
    std::array<std::array<Eigen::MatrixXd, 2>, 2> tt;
    std::array<Eigen::MatrixXd, 2> st, g;
    for (int i = 0; i < 2; ++i) {
      st[i] = Eigen::MatrixXd::Zero(ls, lf);
      g[i] = Eigen::MatrixXd::Zero(lm, lf);
      for (int j = 0; j < 2; ++j) tt[i][j] = Eigen::MatrixXd::Zero(lf, lf);
    }
    for (std::size_t q = 0; q < tr.points.size(); ++q) {
      const double w = tr.weights[q] * maps[t].det;
      S.values(t, tr.points[q], sv);
      F.values(t, tr.points[q], fv);
      M.values(t, tr.points[q], mv);
      mf.noalias() += w * fv.transpose() * fv;
      mk.noalias() += w * fv.transpose() * kinv * fv;
      ms.noalias() += w * sv.transpose() * sv;
      // trace of [row1; row2] picks component x of row 1 and y of row 2
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) tt[i][j].noalias() += w * fv.row(i).transpose() * fv.row(j);
        st[i].noalias() += w * sv.transpose() * fv.row(i);
      }
      // as(psi) = -psi_12 + psi_21
      g[0].noalias() -= w * mv.transpose() * fv.row(1);
      g[1].noalias() += w * mv.transpose() * fv.row(0);
    }

    const auto fd = F.local_dofs(t);
    const auto sd = S.local_dofs(t);
    const auto md = M.local_dofs(t);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        Eigen::MatrixXd block = (-c / (2.0 * mat.mu)) * tt[i][j];
        if (i == j) block += mf / (2.0 * mat.mu);
        scatter(tA, fd, i * nf, fd, j * nf, block);
      }
      scatter(tAp, sd, 0, fd, i * nf, (mat.alpha / (2.0 * (mat.mu + mat.lambda))) * st[i]);
      scatter(tG, md, 0, fd, i * nf, g[i]);
    }
    scatter(tK, fd, 0, fd, 0, mk);
    scatter(tS, sd, 0, sd, 0, ms);
    if (mat.c0 != 0.0) scatter(tC0, sd, 0, sd, 0, mat.c0 * ms);
    scatter(tPa, sd, 0, sd, 0, mat.pressure_compliance() * ms);
  }

  const int ns = ops.n_scalar;
  ops.b = assemble_bh(spaces);
  ops.B = block_diagonal2(ops.b);
  ops.mass_A = build(2 * nf, 2 * nf, tA);
  ops.coupling = build(ns, 2 * nf, tAp);
  ops.storage = build(ns, ns, tC0);
  ops.pressure_compliance = build(ns, ns, tPa);
  ops.mass_pp = ops.storage + ops.pressure_compliance;
  ops.mass_K = build(nf, nf, tK);
  ops.asym = build(ops.n_rotation, 2 * nf, tG);
  ops.scalar_mass = build(ns, ns, tS);
  return ops;
}

// --- boundary data ------------------------------------------------------------

BoundaryCondition BoundaryCondition::dirichlet(TimeVectorFunction u, TimeScalarFunction p) {
  BoundaryCondition bc;
  bc.flow = FlowCondition::pressure;
  bc.fixed = {true, true};
  bc.displacement = std::move(u);
  bc.pressure = std::move(p);
  return bc;
}

const BoundaryCondition& BoundaryData::at(int tag) const {
  auto it = by_tag_.find(tag);
  if (it == by_tag_.end())
    throw std::invalid_argument("boundary marker " + std::to_string(tag) + " has no assigned condition");
  return it->second;
}

void BoundaryData::check_covers(const StaggeredMesh& mesh) const {
  for (int e : mesh.primal_edges())
    if (mesh.edge(e).on_boundary()) (void)at(mesh.edge(e).tag);
}

namespace {

// Legendre moments of g along a primal edge: int_0^1 g(x(s)) l_j(s) ds.
template <class G>
Eigen::VectorXd edge_moments(const StaggeredMesh& mesh, int e, int k, const EdgeRule& er, G&& g) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(k + 1);
  for (std::size_t q = 0; q < er.points.size(); ++q) {
    const double v = g(edge_point(mesh, e, er.points[q]));
    for (int j = 0; j <= k; ++j) out[j] += er.weights[q] * v * legendre01(j, er.points[q]);
  }
  return out;
}

}  // namespace

LoadVectors assemble_loads(const SpaceSet& spaces, const TimeVectorFunction& f, const TimeScalarFunction& q,
                           const BoundaryData& bc, double t, int degree) {
  const auto& mesh = *spaces.mesh;
  const auto& S = spaces.scalar;
  const int ns = S.num_dofs();
  const int k = spaces.order;
  if (degree < 0) degree = spaces.default_quadrature_degree();
  bc.check_covers(mesh);
  const auto& tr = triangle_rule(degree);
  const auto& er = edge_rule(degree);

  LoadVectors out{Eigen::VectorXd::Zero(2 * ns), Eigen::VectorXd::Zero(ns)};
  if (f || q) {
    Eigen::MatrixXd sv;
    for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
      const TriangleMap map(mesh, tri);
      const auto sd = S.local_dofs(tri);
      Eigen::VectorXd lf1 = Eigen::VectorXd::Zero(S.local_size());
      Eigen::VectorXd lf2 = lf1;
      Eigen::VectorXd lq = lf1;
      for (std::size_t p = 0; p < tr.points.size(); ++p) {
        const double w = tr.weights[p] * map.det;
        const Vec2 x = map.to_physical(tr.points[p]);
        S.values(tri, tr.points[p], sv);
        if (f) {
          const Vec2 fx = f(x, t);
          lf1 += w * fx.x() * sv.row(0).transpose();
          lf2 += w * fx.y() * sv.row(0).transpose();
        }
        if (q) lq += w * q(x, t) * sv.row(0).transpose();
      }
      for (std::size_t i = 0; i < sd.size(); ++i) {
        out.momentum[sd[i]] += lf1[i];
        out.momentum[ns + sd[i]] += lf2[i];
        out.mass[sd[i]] += lq[i];
      }
    }
  }

  for (int e : mesh.primal_edges()) {
    const auto& edge = mesh.edge(e);
    if (!edge.on_boundary()) continue;
    const auto& cond = bc.at(edge.tag);
    const auto dofs = S.edge_dofs(e);
    for (int c = 0; c < 2; ++c) {
      if (cond.fixed[c] || !cond.traction) continue;
      const Eigen::VectorXd m = edge_moments(mesh, e, k, er, [&](const Vec2& x) { return cond.traction(x, t)[c]; });
      for (int j = 0; j <= k; ++j) out.momentum[c * ns + dofs[j]] += edge.length * m[j];
    }
    if (cond.flow == FlowCondition::flux && cond.flux) {
      const Eigen::VectorXd m = edge_moments(mesh, e, k, er, [&](const Vec2& x) { return cond.flux(x, t); });
      for (int j = 0; j <= k; ++j) out.mass[dofs[j]] -= edge.length * m[j];
    }
  }
  return out;
}

EssentialData essential_data(const SpaceSet& spaces, const BoundaryData& bc, double t, int degree) {
  const auto& mesh = *spaces.mesh;
  const auto& S = spaces.scalar;
  const int ns = S.num_dofs();
  const int k = spaces.order;
  if (degree < 0) degree = spaces.default_quadrature_degree();
  const auto& er = edge_rule(degree);
  std::vector<std::pair<int, double>> u, p;
  for (int e : mesh.primal_edges()) {
    const auto& edge = mesh.edge(e);
    if (!edge.on_boundary()) continue;
    const auto& cond = bc.at(edge.tag);
    const auto dofs = S.edge_dofs(e);
    for (int c = 0; c < 2; ++c) {
      if (!cond.fixed[c]) continue;
      Eigen::VectorXd m = Eigen::VectorXd::Zero(k + 1);
      if (cond.displacement)
        m = edge_moments(mesh, e, k, er, [&](const Vec2& x) { return cond.displacement(x, t)[c]; });
      for (int j = 0; j <= k; ++j) u.emplace_back(c * ns + dofs[j], m[j]);
    }
    if (cond.flow == FlowCondition::pressure) {
      Eigen::VectorXd m = Eigen::VectorXd::Zero(k + 1);
      if (cond.pressure) m = edge_moments(mesh, e, k, er, [&](const Vec2& x) { return cond.pressure(x, t); });
      for (int j = 0; j <= k; ++j) p.emplace_back(dofs[j], m[j]);
    }
  }
  auto pack = [](std::vector<std::pair<int, double>>& v) {
    std::sort(v.begin(), v.end());
    EssentialSet s;
    s.values.resize(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      s.dofs.push_back(v[i].first);
      s.values[static_cast<Eigen::Index>(i)] = v[i].second;
    }
    return s;
  };
  return {pack(u), pack(p)};
}

}  // namespace sdg
