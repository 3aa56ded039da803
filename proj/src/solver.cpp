#include "sdg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace sdg {

FieldState FieldState::zeros(const OperatorSet& ops, double t) {
  FieldState s;
  s.t = t;
  s.sigma = Eigen::VectorXd::Zero(2 * ops.n_flux);
  s.u = Eigen::VectorXd::Zero(2 * ops.n_scalar);
  s.gamma = Eigen::VectorXd::Zero(ops.n_rotation);
  s.z = Eigen::VectorXd::Zero(ops.n_flux);
  s.p = Eigen::VectorXd::Zero(ops.n_scalar);
  return s;
}

void TransientProblem::validate() const {
  if (spaces == nullptr) throw std::invalid_argument("problem has no discrete spaces");
  if (!(final_time > 0.0)) throw std::invalid_argument("final time must be positive");
  if (steps < 1) throw std::invalid_argument("number of time steps must be >= 1");
  material.validate();
  boundary.check_covers(*spaces->mesh);
}

double fixed_stress_threshold(const MaterialField& material) {
  double v = 0.0;
  for (const auto& m : material.regions()) v = std::max(v, m.alpha * m.alpha / (2.0 * (m.mu + m.lambda)));
  return v;
}

double fixed_stress_bound(const MaterialField& material, double beta) {
  double v = 0.0;
  for (const auto& m : material.regions())
    v = std::max(v, 0.5 * beta / (m.c0 + 0.5 * beta + m.alpha * m.alpha / (m.mu + m.lambda)));
  return v;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void add_block(Triplets& t, const SparseMatrix& m, int row_off, int col_off, double scale = 1.0,
               bool transpose = false) {
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      const int r = transpose ? static_cast<int>(it.col()) : static_cast<int>(it.row());
      const int cc = transpose ? static_cast<int>(it.row()) : static_cast<int>(it.col());
      t.emplace_back(r + row_off, cc + col_off, scale * it.value());
    }
}

struct Block {
  std::string name;
  int offset;
  int size;
};

// Square system with essential unknowns removed (their rows are dropped and
// their columns moved to the right-hand side).
class ReducedSystem {
 public:
  void setup(const SparseMatrix& full, std::vector<int> essential, std::vector<Block> blocks, bool use_lu = true) {
    const int n = static_cast<int>(full.rows());
    ess_ = std::move(essential);
    blocks_ = std::move(blocks);
    to_free_.assign(n, -1);
    std::vector<int> ess_pos(n, -1);
    for (std::size_t i = 0; i < ess_.size(); ++i) ess_pos[ess_[i]] = static_cast<int>(i);
    free_.clear();
    for (int i = 0; i < n; ++i)
      if (ess_pos[i] < 0) {
        to_free_[i] = static_cast<int>(free_.size());
        free_.push_back(i);
      }
    Triplets tff, tfe;
    for (int c = 0; c < full.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(full, c); it; ++it) {
        const int fr = to_free_[it.row()];
        if (fr < 0) continue;
        const int fc = to_free_[it.col()];
        if (fc >= 0)
          tff.emplace_back(fr, fc, it.value());
        else
          tfe.emplace_back(fr, ess_pos[it.col()], it.value());
      }
    const int nf = static_cast<int>(free_.size());
    ff_.resize(nf, nf);
    ff_.setFromTriplets(tff.begin(), tff.end());
    ff_.makeCompressed();
    fe_.resize(nf, static_cast<int>(ess_.size()));
    fe_.setFromTriplets(tfe.begin(), tfe.end());
    abs_ff_ = ff_.cwiseAbs();
    row_block_.assign(nf, 0);
    for (int i = 0; i < nf; ++i)
      for (std::size_t b = 0; b < blocks_.size(); ++b)
        if (free_[i] >= blocks_[b].offset && free_[i] < blocks_[b].offset + blocks_[b].size) row_block_[i] = static_cast<int>(b);
    if (use_lu) lu_.factor(ff_);
  }

  [[nodiscard]] Eigen::VectorXd reduce_rhs(const Eigen::VectorXd& rhs, const Eigen::VectorXd& ess_values) const {
    Eigen::VectorXd rf(free_.size());
    for (std::size_t i = 0; i < free_.size(); ++i) rf[static_cast<Eigen::Index>(i)] = rhs[free_[i]];
    if (!ess_.empty()) rf -= fe_ * ess_values;
    return rf;
  }

  [[nodiscard]] Eigen::VectorXd expand(const Eigen::VectorXd& xf, const Eigen::VectorXd& ess_values) const {
    Eigen::VectorXd x(to_free_.size());
    for (std::size_t i = 0; i < free_.size(); ++i) x[free_[i]] = xf[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < ess_.size(); ++i) x[ess_[i]] = ess_values[static_cast<Eigen::Index>(i)];
    return x;
  }

  [[nodiscard]] Eigen::VectorXd solve_free(const Eigen::VectorXd& rf) const {
    Eigen::VectorXd xf = lu_.solve(rf);
    check(rf, xf);
    return xf;
  }

  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs, const Eigen::VectorXd& ess_values) const {
    return expand(solve_free(reduce_rhs(rhs, ess_values)), ess_values);
  }

  // Per block: ||r||_inf <= 1e-10 (1 + ||rhs||_inf + || |A| |x| ||_inf).
  void check(const Eigen::VectorXd& rf, const Eigen::VectorXd& xf) const {
    const Eigen::VectorXd r = ff_ * xf - rf;
    const Eigen::VectorXd ax = abs_ff_ * xf.cwiseAbs();
    std::vector<double> res(blocks_.size(), 0.0), rhs(blocks_.size(), 0.0), mag(blocks_.size(), 0.0);
    bool finite = true;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const int b = row_block_[i];
      if (!std::isfinite(r[i])) finite = false;
      res[b] = std::max(res[b], std::abs(r[i]));
      rhs[b] = std::max(rhs[b], std::abs(rf[i]));
      mag[b] = std::max(mag[b], ax[i]);
    }
    bool ok = finite;
    std::vector<std::pair<std::string, double>> report;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      report.emplace_back(blocks_[b].name, res[b]);
      if (!(res[b] <= 1e-10 * (1.0 + rhs[b] + mag[b]))) ok = false;
    }
    if (!ok) {
      std::ostringstream msg;
      msg << "linear solve residual check failed:";
      for (const auto& [name, v] : report) msg << " " << name << "=" << v;
      throw SolverError(msg.str(), report);
    }
  }

  [[nodiscard]] const SparseMatrix& matrix() const { return ff_; }
  [[nodiscard]] int num_free() const { return static_cast<int>(free_.size()); }
  [[nodiscard]] const std::vector<int>& free_indices() const { return free_; }

 private:
  std::vector<int> ess_, free_, to_free_, row_block_;
  std::vector<Block> blocks_;
  SparseMatrix ff_, fe_, abs_ff_;
  DirectSolver lu_;
};

Eigen::VectorXd concat(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(a.size() + b.size());
  out << a, b;
  return out;
}

// Inverse of a block-diagonal matrix given the dof groups of its blocks.
SparseMatrix block_inverse(const SparseMatrix& m, const std::vector<std::vector<int>>& groups) {
  const Eigen::MatrixXd unused;
  Triplets t;
  for (const auto& g : groups) {
    const int n = static_cast<int>(g.size());
    Eigen::MatrixXd local(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) local(i, j) = m.coeff(g[i], g[j]);
    const Eigen::MatrixXd inv = local.inverse();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (inv(i, j) != 0.0) t.emplace_back(g[i], g[j], inv(i, j));
  }
  SparseMatrix out(m.rows(), m.cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

// SPD system on free dofs solved by sparse Cholesky.
struct CholeskySystem {
  std::vector<int> free, ess, to_free;
  SparseMatrix ff, fe;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;

  void setup(const SparseMatrix& full, const std::vector<int>& essential) {
    const int n = static_cast<int>(full.rows());
    ess = essential;
    to_free.assign(n, -1);
    std::vector<int> ess_pos(n, -1);
    for (std::size_t i = 0; i < ess.size(); ++i) ess_pos[ess[i]] = static_cast<int>(i);
    free.clear();
    for (int i = 0; i < n; ++i)
      if (ess_pos[i] < 0) {
        to_free[i] = static_cast<int>(free.size());
        free.push_back(i);
      }
    Triplets tff, tfe;
    for (int c = 0; c < full.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(full, c); it; ++it) {
        const int fr = to_free[it.row()];
        if (fr < 0) continue;
        const int fc = to_free[it.col()];
        if (fc >= 0)
          tff.emplace_back(fr, fc, it.value());
        else
          tfe.emplace_back(fr, ess_pos[it.col()], it.value());
      }
    ff.resize(static_cast<int>(free.size()), static_cast<int>(free.size()));
    ff.setFromTriplets(tff.begin(), tff.end());
    fe.resize(static_cast<int>(free.size()), static_cast<int>(ess.size()));
    fe.setFromTriplets(tfe.begin(), tfe.end());
    ldlt.compute(ff);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("local-elimination Schur complement is not SPD");
  }

  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs, const Eigen::VectorXd& ess_values) const {
    Eigen::VectorXd rf(free.size());
    for (std::size_t i = 0; i < free.size(); ++i) rf[static_cast<Eigen::Index>(i)] = rhs[free[i]];
    if (!ess.empty()) rf -= fe * ess_values;
    const Eigen::VectorXd xf = ldlt.solve(rf);
    const double res = (ff * xf - rf).lpNorm<Eigen::Infinity>();
    if (!(res <= 1e-10 * (1.0 + rf.lpNorm<Eigen::Infinity>() + (ff.cwiseAbs() * xf.cwiseAbs()).lpNorm<Eigen::Infinity>())))
      throw SolverError("Schur complement solve residual check failed", {{"schur", res}});
    Eigen::VectorXd x(rhs.size());
    for (std::size_t i = 0; i < free.size(); ++i) x[free[i]] = xf[static_cast<Eigen::Index>(i)];
    for (std::size_t i = 0; i < ess.size(); ++i) x[ess[i]] = ess_values[static_cast<Eigen::Index>(i)];
    return x;
  }
};

}  // namespace

struct BiotSolver::Impl {
  int nf = 0, ns = 0, nm = 0;
  int off_u = 0, off_g = 0, off_z = 0, off_p = 0, total = 0;
  std::vector<int> ess_u, ess_p;  // indices within the u and p blocks

  ReducedSystem mono;
  ReducedSystem elastic;
  Eigen::SimplicialLDLT<SparseMatrix> darcy;

  // fixed-stress flow systems keyed by (beta, local elimination)
  mutable std::map<std::pair<double, bool>, std::unique_ptr<ReducedSystem>> flow;
  mutable std::map<double, std::unique_ptr<CholeskySystem>> flow_schur;

  // local elimination of (sigma, gamma)
  mutable bool local_ready = false;
  mutable SparseMatrix l_ss, l_gs, k_inv;
  mutable std::unique_ptr<CholeskySystem> elastic_schur;

  [[nodiscard]] EssentialData essential(const TransientProblem& pb, double t) const {
    return essential_data(*pb.spaces, pb.boundary, t);
  }
};

BiotSolver::BiotSolver(TransientProblem problem) : problem_(std::move(problem)), impl_(std::make_unique<Impl>()) {
  problem_.validate();
  ops_ = assemble_operators(*problem_.spaces, problem_.material);
  auto& im = *impl_;
  im.nf = ops_.n_flux;
  im.ns = ops_.n_scalar;
  im.nm = ops_.n_rotation;
  im.off_u = 2 * im.nf;
  im.off_g = im.off_u + 2 * im.ns;
  im.off_z = im.off_g + im.nm;
  im.off_p = im.off_z + im.nf;
  im.total = im.off_p + im.ns;

  const auto ess = essential_data(*problem_.spaces, problem_.boundary, 0.0);
  im.ess_u = ess.displacement.dofs;
  im.ess_p = ess.pressure.dofs;

  const double dt = problem_.dt();
  {
    Triplets t;
    add_block(t, ops_.mass_A, 0, 0);
    add_block(t, ops_.B, 0, im.off_u, -1.0, true);
    add_block(t, ops_.asym, 0, im.off_g, 1.0, true);
    add_block(t, ops_.coupling, 0, im.off_p, 1.0, true);
    add_block(t, ops_.B, im.off_u, 0, -1.0);
    add_block(t, ops_.asym, im.off_g, 0);
    add_block(t, ops_.mass_K, im.off_z, im.off_z);
    add_block(t, ops_.b, im.off_z, im.off_p, 1.0, true);
    add_block(t, ops_.coupling, im.off_p, 0);
    add_block(t, ops_.b, im.off_p, im.off_z, -dt);
    add_block(t, ops_.mass_pp, im.off_p, im.off_p);
    SparseMatrix a(im.total, im.total);
    a.setFromTriplets(t.begin(), t.end());
    std::vector<int> e;
    for (int d : im.ess_u) e.push_back(im.off_u + d);
    for (int d : im.ess_p) e.push_back(im.off_p + d);
    im.mono.setup(a, e,
                  {{"sigma", 0, 2 * im.nf}, {"u", im.off_u, 2 * im.ns}, {"gamma", im.off_g, im.nm},
                   {"z", im.off_z, im.nf}, {"p", im.off_p, im.ns}});
  }
  {
    const int n = im.off_g + im.nm;
    Triplets t;
    add_block(t, ops_.mass_A, 0, 0);
    add_block(t, ops_.B, 0, im.off_u, -1.0, true);
    add_block(t, ops_.asym, 0, im.off_g, 1.0, true);
    add_block(t, ops_.B, im.off_u, 0, -1.0);
    add_block(t, ops_.asym, im.off_g, 0);
    SparseMatrix a(n, n);
    a.setFromTriplets(t.begin(), t.end());
    std::vector<int> e;
    for (int d : im.ess_u) e.push_back(im.off_u + d);
    im.elastic.setup(a, e, {{"sigma", 0, 2 * im.nf}, {"u", im.off_u, 2 * im.ns}, {"gamma", im.off_g, im.nm}});
  }
  im.darcy.compute(ops_.mass_K);
  if (im.darcy.info() != Eigen::Success) throw std::runtime_error("flux mass matrix is not positive definite");
}

BiotSolver::~BiotSolver() = default;

int BiotSolver::num_unknowns() const { return impl_->total; }

double BiotSolver::pressure_norm(const Eigen::VectorXd& v) const {
  return std::sqrt(std::max(0.0, v.dot(ops_.scalar_mass * v)));
}

const SparseMatrix& BiotSolver::monolithic_matrix() const { return impl_->mono.matrix(); }

Eigen::VectorXd BiotSolver::solve_monolithic(const Eigen::VectorXd& rhs_free) const {
  return impl_->mono.solve_free(rhs_free);
}

FieldState BiotSolver::elasticity_solve(const Eigen::VectorXd& p, double t) const {
  const auto& im = *impl_;
  const auto loads = assemble_loads(*problem_.spaces, problem_.body_force, {}, problem_.boundary, t);
  const auto ess = im.essential(problem_, t);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(im.off_g + im.nm);
  rhs.head(2 * im.nf) = -(ops_.coupling.transpose() * p);
  rhs.segment(im.off_u, 2 * im.ns) = -loads.momentum;
  const Eigen::VectorXd x = im.elastic.solve(rhs, ess.displacement.values);
  FieldState s;
  s.t = t;
  s.sigma = x.head(2 * im.nf);
  s.u = x.segment(im.off_u, 2 * im.ns);
  s.gamma = x.segment(im.off_g, im.nm);
  s.p = p;
  return s;
}

FieldState BiotSolver::initial_state() const {
  const auto& im = *impl_;
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(im.ns);
  if (problem_.initial_pressure) p0 = interpolate_moments(problem_.spaces->scalar, problem_.initial_pressure);
  FieldState s = elasticity_solve(p0, 0.0);
  s.z = im.darcy.solve(-(ops_.b.transpose() * p0));
  const double res = (ops_.mass_K * s.z + ops_.b.transpose() * p0).lpNorm<Eigen::Infinity>();
  const double scale = 1.0 + (ops_.b.transpose() * p0).lpNorm<Eigen::Infinity>();
  if (!(res <= 1e-10 * scale)) throw SolverError("initial Darcy solve residual check failed", {{"z", res}});
  return s;
}

FieldState BiotSolver::monolithic_step(const FieldState& prev, double t) const {
  const auto& im = *impl_;
  const double dt = problem_.dt();
  const auto loads = assemble_loads(*problem_.spaces, problem_.body_force, problem_.source, problem_.boundary, t);
  const auto ess = im.essential(problem_, t);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(im.total);
  rhs.segment(im.off_u, 2 * im.ns) = -loads.momentum;
  rhs.segment(im.off_p, im.ns) = dt * loads.mass + ops_.coupling * prev.sigma + ops_.mass_pp * prev.p;
  const Eigen::VectorXd x = im.mono.solve(rhs, concat(ess.displacement.values, ess.pressure.values));
  FieldState s;
  s.t = t;
  s.sigma = x.head(2 * im.nf);
  s.u = x.segment(im.off_u, 2 * im.ns);
  s.gamma = x.segment(im.off_g, im.nm);
  s.z = x.segment(im.off_z, im.nf);
  s.p = x.segment(im.off_p, im.ns);
  return s;
}

FixedStressResult BiotSolver::fixed_stress_step(const FieldState& prev, double t, const FixedStressConfig& config,
                                                const Eigen::VectorXd* reference) const {
  auto& im = *impl_;
  const double dt = problem_.dt();
  if (!(config.tolerance > 0.0)) throw std::invalid_argument("fixed-stress tolerance must be positive");
  if (config.max_iterations < 1) throw std::invalid_argument("fixed-stress max iterations must be >= 1");

  FixedStressResult result;
  const double threshold = fixed_stress_threshold(problem_.material);
  double beta = config.beta < 0.0 ? threshold : config.beta;
  if (beta < threshold) {
    std::ostringstream msg;
    msg << std::setprecision(6) << "fixed-stress beta = " << beta
        << " is below the threshold alpha^2/(2(mu+lambda)) = " << threshold;
    if (config.clamp) {
      msg << "; clamped to the threshold";
      beta = threshold;
    }
    result.warnings.push_back(msg.str());
  }
  result.beta = beta;

  const SparseMatrix flow_pp = ops_.storage + beta * ops_.scalar_mass + ops_.pressure_compliance;
  const bool local = config.local_elimination;

  // factorizations, built on first use
  ReducedSystem* flow = nullptr;
  CholeskySystem* flow_schur = nullptr;
  if (!local) {
    auto& slot = im.flow[{beta, false}];
    if (!slot) {
      Triplets tr;
      add_block(tr, ops_.mass_K, 0, 0);
      add_block(tr, ops_.b, 0, im.nf, 1.0, true);
      add_block(tr, ops_.b, im.nf, 0, -dt);
      add_block(tr, flow_pp, im.nf, im.nf);
      SparseMatrix a(im.nf + im.ns, im.nf + im.ns);
      a.setFromTriplets(tr.begin(), tr.end());
      std::vector<int> e;
      for (int d : im.ess_p) e.push_back(im.nf + d);
      slot = std::make_unique<ReducedSystem>();
      slot->setup(a, e, {{"z", 0, im.nf}, {"p", im.nf, im.ns}});
    }
    flow = slot.get();
  } else {
    if (!im.local_ready) {
      const auto& sp = *problem_.spaces;
      const int nc = sp.mesh->num_cells();
      std::vector<std::vector<int>> zg(nc), sg(nc), gg(nc);
      for (int d = 0; d < im.nf; ++d) {
        zg[sp.flux.dof_cell(d)].push_back(d);
        sg[sp.flux.dof_cell(d)].push_back(d);
      }
      for (int c = 0; c < nc; ++c) {
        const auto row1 = sg[c];
        for (int d : row1) sg[c].push_back(im.nf + d);
      }
      for (int d = 0; d < im.nm; ++d) gg[sp.rotation.dof_cell(d)].push_back(d);
      im.k_inv = block_inverse(ops_.mass_K, zg);
      // per-cell saddle [M_A G^T; G 0]^{-1}
      Triplets tss, tgs;
      for (int c = 0; c < nc; ++c) {
        const int a = static_cast<int>(sg[c].size());
        const int g = static_cast<int>(gg[c].size());
        Eigen::MatrixXd kl = Eigen::MatrixXd::Zero(a + g, a + g);
        for (int i = 0; i < a; ++i)
          for (int j = 0; j < a; ++j) kl(i, j) = ops_.mass_A.coeff(sg[c][i], sg[c][j]);
        for (int i = 0; i < g; ++i)
          for (int j = 0; j < a; ++j) {
            kl(a + i, j) = ops_.asym.coeff(gg[c][i], sg[c][j]);
            kl(j, a + i) = kl(a + i, j);
          }
        const Eigen::MatrixXd inv = kl.fullPivLu().inverse();
        for (int i = 0; i < a; ++i)
          for (int j = 0; j < a; ++j)
            if (inv(i, j) != 0.0) tss.emplace_back(sg[c][i], sg[c][j], inv(i, j));
        for (int i = 0; i < g; ++i)
          for (int j = 0; j < a; ++j)
            if (inv(a + i, j) != 0.0) tgs.emplace_back(gg[c][i], sg[c][j], inv(a + i, j));
      }
      im.l_ss.resize(2 * im.nf, 2 * im.nf);
      im.l_ss.setFromTriplets(tss.begin(), tss.end());
      im.l_gs.resize(im.nm, 2 * im.nf);
      im.l_gs.setFromTriplets(tgs.begin(), tgs.end());
      const SparseMatrix su = ops_.B * im.l_ss * SparseMatrix(ops_.B.transpose());
      im.elastic_schur = std::make_unique<CholeskySystem>();
      im.elastic_schur->setup(su, im.ess_u);
      im.local_ready = true;
    }
    auto& slot = im.flow_schur[beta];
    if (!slot) {
      const SparseMatrix sp_mat = flow_pp + dt * (ops_.b * im.k_inv * SparseMatrix(ops_.b.transpose()));
      slot = std::make_unique<CholeskySystem>();
      slot->setup(sp_mat, im.ess_p);
    }
    flow_schur = slot.get();
  }

  const auto loads = assemble_loads(*problem_.spaces, problem_.body_force, problem_.source, problem_.boundary, t);
  const auto ess = im.essential(problem_, t);
  const Eigen::VectorXd fixed_part =
      dt * loads.mass + ops_.storage * prev.p + ops_.coupling * prev.sigma + ops_.pressure_compliance * prev.p;

  Eigen::VectorXd sigma_it = prev.sigma;
  Eigen::VectorXd p_it = prev.p;
  if (reference) result.errors.push_back(pressure_norm(*reference - p_it));

  for (int i = 1; i <= config.max_iterations; ++i) {
    const Eigen::VectorXd rhs_p = fixed_part + beta * (ops_.scalar_mass * p_it) - ops_.coupling * sigma_it;
    // Step 1: flow
    Eigen::VectorXd z, p;
    if (!local) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(im.nf + im.ns);
      rhs.tail(im.ns) = rhs_p;
      const Eigen::VectorXd x = flow->solve(rhs, ess.pressure.values);
      z = x.head(im.nf);
      p = x.tail(im.ns);
    } else {
      p = flow_schur->solve(rhs_p, ess.pressure.values);
      z = -(im.k_inv * (ops_.b.transpose() * p));
    }
    // Step 2: mechanics
    FieldState mech;
    if (!local) {
      mech = elasticity_solve(p, t);
    } else {
      const Eigen::VectorXd r = -(ops_.coupling.transpose() * p);
      const Eigen::VectorXd rhs_u = loads.momentum - ops_.B * (im.l_ss * r);
      mech.u = im.elastic_schur->solve(rhs_u, ess.displacement.values);
      const Eigen::VectorXd load = ops_.B.transpose() * mech.u + r;
      mech.sigma = im.l_ss * load;
      mech.gamma = im.l_gs * load;
    }
    const double inc = pressure_norm(p - p_it);
    result.increments.push_back(inc);
    if (reference) result.errors.push_back(pressure_norm(*reference - p));
    sigma_it = mech.sigma;
    p_it = p;
    result.state.t = t;
    result.state.sigma = std::move(mech.sigma);
    result.state.u = std::move(mech.u);
    result.state.gamma = std::move(mech.gamma);
    result.state.z = std::move(z);
    result.state.p = std::move(p);
    result.iterations = i;
    if (config.on_iterate) config.on_iterate(i, result.state);
    if (inc <= config.tolerance) return result;
  }
  std::ostringstream msg;
  msg << "fixed-stress iteration did not converge in " << config.max_iterations
      << " iterations (last increment " << result.increments.back() << ")";
  throw FixedStressError(msg.str(), result.increments);
}

Trajectory run_transient(const BiotSolver& solver, const RunOptions& options) {
  const auto& pb = solver.problem();
  Trajectory traj;
  FieldState state = solver.initial_state();
  traj.states.push_back(state);
  if (options.on_step) options.on_step(state);
  for (int n = 1; n <= pb.steps; ++n) {
    const double t = n == pb.steps ? pb.final_time : n * pb.dt();
    StepRecord rec;
    rec.step = n;
    rec.t = t;
    if (options.scheme == Scheme::monolithic) {
      state = solver.monolithic_step(state, t);
    } else {
      FieldState mono;
      if (options.record_contraction) mono = solver.monolithic_step(state, t);
      auto res = solver.fixed_stress_step(state, t, options.fixed_stress, options.record_contraction ? &mono.p : nullptr);
      rec.iterations = res.iterations;
      rec.increments = std::move(res.increments);
      rec.errors = std::move(res.errors);
      for (auto& w : res.warnings)
        if (std::find(traj.warnings.begin(), traj.warnings.end(), w) == traj.warnings.end()) traj.warnings.push_back(w);
      state = std::move(res.state);
    }
    traj.records.push_back(std::move(rec));
    if (options.on_step) options.on_step(state);
    const bool keep = n == pb.steps || (options.save_every > 0 && n % options.save_every == 0);
    if (keep) traj.states.push_back(state);
  }
  return traj;
}

// --- checkpoints -----------------------------------------------------------------

namespace {

struct NamedField {
  const char* name;
  const char* space;
};
constexpr NamedField checkpoint_fields[] = {{"sigma", "flux_tensor"},
                                           {"u", "scalar_vector"},
                                           {"gamma", "rotation"},
                                           {"z", "flux"},
                                           {"p", "scalar"}};

Eigen::VectorXd& field_ref(FieldState& s, int i) {
  switch (i) {
    case 0: return s.sigma;
    case 1: return s.u;
    case 2: return s.gamma;
    case 3: return s.z;
    default: return s.p;
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const FieldState& state) {
  FieldState& s = const_cast<FieldState&>(state);
  out << "sdgstate 1 t=" << std::setprecision(17) << state.t << "\n";
  for (int i = 0; i < 5; ++i) {
    const auto& v = field_ref(s, i);
    out << checkpoint_fields[i].name << " " << checkpoint_fields[i].space << " " << v.size() << "\n";
    for (Eigen::Index j = 0; j < v.size(); ++j) out << v[j] << "\n";
  }
}

FieldState read_checkpoint(std::istream& in) {
  std::string magic, version, tfield;
  if (!(in >> magic >> version >> tfield) || magic != "sdgstate" || version != "1" || tfield.rfind("t=", 0) != 0)
    throw std::runtime_error("checkpoint: expected header 'sdgstate 1 t=<time>'");
  FieldState s;
  s.t = std::stod(tfield.substr(2));
  for (int i = 0; i < 5; ++i) {
    std::string name, space;
    long n = 0;
    if (!(in >> name >> space >> n) || name != checkpoint_fields[i].name || n < 0)
      throw std::runtime_error(std::string("checkpoint: expected field '") + checkpoint_fields[i].name + "'");
    auto& v = field_ref(s, i);
    v.resize(n);
    for (long j = 0; j < n; ++j)
      if (!(in >> v[j])) throw std::runtime_error("checkpoint: truncated coefficients");
  }
  return s;
}

std::uint64_t state_hash(const FieldState& state) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  FieldState& s = const_cast<FieldState&>(state);
  for (int i = 0; i < 5; ++i) {
    const auto& v = field_ref(s, i);
    const double scale = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    mix(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const long long q = scale > 0.0 ? std::llround(v[j] / scale * 1e6) : 0;
      mix(static_cast<std::uint64_t>(q));
    }
  }
  return h;
}

}  // namespace sdg
