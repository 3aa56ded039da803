#include "sdg/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sdg {

std::string_view experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::cantilever: return "cantilever";
    case ExperimentKind::shishkin: return "shishkin";
    case ExperimentKind::compaction: return "compaction";
    case ExperimentKind::fixed_stress_compare: return "fixed-stress-compare";
  }
  return "?";
}

std::optional<ExperimentKind> parse_experiment_name(std::string_view name) {
  for (auto k : {ExperimentKind::convergence, ExperimentKind::cantilever, ExperimentKind::shishkin,
                 ExperimentKind::compaction, ExperimentKind::fixed_stress_compare})
    if (experiment_name(k) == name) return k;
  return std::nullopt;
}

std::string_view mesh_family_name(MeshFamily family) {
  switch (family) {
    case MeshFamily::square: return "square";
    case MeshFamily::trapezoid: return "trapezoid";
    case MeshFamily::shishkin: return "shishkin";
  }
  return "?";
}

std::optional<MeshFamily> parse_mesh_family(std::string_view name) {
  for (auto f : {MeshFamily::square, MeshFamily::trapezoid, MeshFamily::shishkin})
    if (mesh_family_name(f) == name) return f;
  return std::nullopt;
}

PrimalMesh make_unit_square_mesh(MeshFamily family, int n, double theta) {
  switch (family) {
    case MeshFamily::square: return generate_uniform_square(n);
    case MeshFamily::trapezoid: return generate_trapezoidal(n);
    case MeshFamily::shishkin: return generate_shishkin(n, theta);
  }
  throw std::invalid_argument("unknown mesh family");
}

int step_count(double final_time, double dt) {
  if (!(final_time > 0.0) || !(dt > 0.0)) throw std::invalid_argument("final time and time step must be positive");
  // tolerate round-off in T/dt before taking the ceiling
  return std::max(1, static_cast<int>(std::ceil(final_time / dt * (1.0 - 1e-12))));
}

// --- ladders ----------------------------------------------------------------------

namespace {

void merge_warnings(std::vector<std::string>& into, const std::vector<std::string>& from) {
  for (const auto& w : from)
    if (std::find(into.begin(), into.end(), w) == into.end()) into.push_back(w);
}

RunOptions options_for(Scheme scheme, const FixedStressConfig& fs) {
  RunOptions opt;
  opt.scheme = scheme;
  opt.fixed_stress = fs;
  return opt;
}

}  // namespace

LadderResult run_ladder(const ManufacturedCase& mc, const LadderSetup& setup) {
  if (setup.levels.size() < 2) throw std::invalid_argument("a ladder needs at least two levels");
  LadderResult out;
  const auto exact = mc.exact();
  const auto quad = mc.error_quadrature();
  for (int n : setup.levels) {
    const StaggeredMesh mesh(make_unit_square_mesh(setup.family, n, setup.theta));
    const SpaceSet sp(mesh, setup.order);
    const double h = mesh.h();
    const int steps = step_count(setup.final_time, setup.dt > 0.0 ? setup.dt : h * h);
    const BiotSolver solver(mc.problem(sp, setup.final_time, steps));
    const auto traj = run_transient(solver, options_for(setup.scheme, setup.fixed_stress));
    merge_warnings(out.warnings, traj.warnings);
    LadderLevel lvl;
    lvl.n = n;
    lvl.steps = steps;
    lvl.report = compute_errors(solver, traj, exact, h, quad);
    lvl.final_state = traj.states.back();
    out.levels.push_back(std::move(lvl));
  }
  std::vector<double> hs;
  for (const auto& l : out.levels) hs.push_back(l.report.h);
  for (int f = 0; f < 5; ++f) {
    std::vector<double> es;
    for (const auto& l : out.levels) es.push_back(l.report.final_time[f]);
    out.rates[f] = convergence_rates(hs, es);
  }
  return out;
}

// --- cantilever -------------------------------------------------------------------

TransientProblem cantilever_problem(const SpaceSet& spaces, const CantileverSetup& s) {
  Mat2 k = s.permeability * Mat2::Identity();
  TransientProblem pb;
  pb.spaces = &spaces;
  pb.material = MaterialField(MaterialParams::from_young(s.young, s.poisson, s.alpha, s.c0, k));
  BoundaryCondition clamped;
  clamped.fixed = {true, true};
  BoundaryCondition loaded;
  loaded.traction = [load = s.traction](const Vec2&, double t) { return Vec2(0.0, t > 0.0 ? -load : 0.0); };
  pb.boundary.set(square_tag::left, clamped);
  pb.boundary.set(square_tag::top, loaded);
  pb.boundary.set(square_tag::bottom, BoundaryCondition{});
  pb.boundary.set(square_tag::right, BoundaryCondition{});
  pb.final_time = s.final_time;
  pb.steps = step_count(s.final_time, s.dt);
  return pb;
}

CantileverResult run_cantilever(const CantileverSetup& s) {
  const StaggeredMesh mesh(generate_uniform_square(s.cells));
  const SpaceSet sp(mesh, 1);
  const BiotSolver solver(cantilever_problem(sp, s));
  CantileverResult out;
  const double dt = solver.problem().dt();
  auto opt = options_for(s.scheme, s.fixed_stress);
  opt.save_every = 0;
  opt.on_step = [&](const FieldState& st) {
    out.conservation = std::max(out.conservation, check_conservation(sp, st.sigma, {}, st.t));
    for (double pt : s.profile_times) {
      if (std::abs(st.t - pt) > 1e-9 * std::max(1.0, pt) + 1e-3 * dt) continue;
      for (double y : s.lines) out.profiles.emplace_back(pt, oscillation_profile(sp, st.p, y));
    }
  };
  auto traj = run_transient(solver, opt);
  out.final_state = traj.states.back();
  out.warnings = traj.warnings;
  return out;
}

// --- compaction -------------------------------------------------------------------

std::optional<SegmentCondition> SegmentCondition::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string a, b, extra;
  if (!(in >> a >> b) || (in >> extra)) return std::nullopt;
  SegmentCondition c;
  if (a == "no-flow")
    c.flow = Flow::no_flow;
  else if (a == "drained")
    c.flow = Flow::drained;
  else if (a == "head")
    c.flow = Flow::head;
  else
    return std::nullopt;
  if (b == "clamped")
    c.mechanics = Mechanics::clamped;
  else if (b == "roller")
    c.mechanics = Mechanics::roller;
  else if (b == "free")
    c.mechanics = Mechanics::free;
  else
    return std::nullopt;
  return c;
}

std::string SegmentCondition::str() const {
  std::string s = flow == Flow::no_flow ? "no-flow" : flow == Flow::drained ? "drained" : "head";
  s += ' ';
  s += mechanics == Mechanics::clamped ? "clamped" : mechanics == Mechanics::roller ? "roller" : "free";
  return s;
}

std::map<char, SegmentCondition> CompactionSetup::default_segments() {
  using F = SegmentCondition::Flow;
  using M = SegmentCondition::Mechanics;
  return {{'A', {F::no_flow, M::clamped}},
          {'B', {F::no_flow, M::roller}},
          {'C', {F::drained, M::roller}},
          {'D', {F::drained, M::free}},
          {'E', {F::head, M::roller}}};
}

namespace {

MaterialParams layer_material(const LayerParams& l) {
  return MaterialParams::from_young(l.young, l.poisson, l.alpha, l.c0, l.permeability * Mat2::Identity());
}

int marker_tag(char m) { return m - 'A' + basin_tag::A; }

std::string missing_markers(const std::map<char, SegmentCondition>& segments) {
  std::string missing;
  for (char m : basin_markers)
    if (!segments.count(m)) missing += std::string(missing.empty() ? "" : ", ") + m;
  return missing;
}

}  // namespace

TransientProblem compaction_problem(const SpaceSet& spaces, const CompactionSetup& s) {
  if (const auto missing = missing_markers(s.segments); !missing.empty())
    throw std::invalid_argument("basin boundary markers A, B, C, D, E must all be assigned; missing: " + missing);
  TransientProblem pb;
  pb.spaces = &spaces;
  std::vector<MaterialParams> layers(2);
  layers[basin_tag::aquifer] = layer_material(s.aquifer);
  layers[basin_tag::confining] = layer_material(s.confining);
  pb.material = MaterialField(std::move(layers));
  for (const auto& [m, c] : s.segments) {
    BoundaryCondition bc;
    switch (c.flow) {
      case SegmentCondition::Flow::no_flow: bc.flow = FlowCondition::flux; break;
      case SegmentCondition::Flow::drained: bc.flow = FlowCondition::pressure; break;
      case SegmentCondition::Flow::head:
        bc.flow = FlowCondition::pressure;
        bc.pressure = [rate = s.head_rate](const Vec2&, double t) { return rate * t; };
        break;
    }
    if (c.mechanics == SegmentCondition::Mechanics::clamped) bc.fixed = {true, true};
    if (c.mechanics == SegmentCondition::Mechanics::roller) bc.fixed = {true, false};
    pb.boundary.set(marker_tag(m), std::move(bc));
  }
  pb.final_time = s.dt * s.steps;
  pb.steps = s.steps;
  return pb;
}

CompactionResult run_compaction(const CompactionSetup& s) {
  const StaggeredMesh mesh(generate_basin(s.basin));
  const SpaceSet sp(mesh, 1);
  const BiotSolver solver(compaction_problem(sp, s));
  auto traj = run_transient(solver, options_for(s.scheme, s.fixed_stress));
  CompactionResult out;
  for (const auto& st : traj.states) out.hashes.push_back(state_hash(st));
  out.states = std::move(traj.states);
  out.warnings = std::move(traj.warnings);
  return out;
}

// --- fixed stress against monolithic ----------------------------------------------

FixedStressComparison compare_fixed_stress(const ManufacturedCase& mc, MeshFamily family, int n, double final_time,
                                           double dt, const FixedStressConfig& config, double theta) {
  const StaggeredMesh mesh(make_unit_square_mesh(family, n, theta));
  const SpaceSet sp(mesh, 1);
  const double h = mesh.h();
  const BiotSolver solver(mc.problem(sp, final_time, step_count(final_time, dt > 0.0 ? dt : h * h)));
  FixedStressComparison out;
  const MaterialField& mat = solver.problem().material;
  out.beta = config.beta < 0.0 ? fixed_stress_threshold(mat) : config.beta;
  if (config.clamp) out.beta = std::max(out.beta, fixed_stress_threshold(mat));
  out.bound = fixed_stress_bound(mat, out.beta);

  auto opt = options_for(Scheme::fixed_stress, config);
  opt.record_contraction = true;
  opt.save_every = 0;
  const auto fs = run_transient(solver, opt);
  out.warnings = fs.warnings;
  for (const auto& rec : fs.records) {
    for (int i = 1; i <= rec.iterations; ++i) {
      ContractionRow row;
      row.step = rec.step;
      row.iter = i;
      row.res = rec.increments[i - 1];
      const double prev = rec.errors[i - 1];
      row.ratio = prev > 0.0 ? rec.errors[i] * rec.errors[i] / (prev * prev) : 0.0;
      row.bound = out.bound;
      out.rows.push_back(row);
    }
  }
  RunOptions mono;
  mono.save_every = 0;
  const auto ref = run_transient(solver, mono);
  out.final_pressure_gap = solver.pressure_norm(fs.states.back().p - ref.states.back().p);
  return out;
}

// --- CSV --------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

struct NormColumn {
  const char* name;
  const FieldErrors ErrorReport::*member;
};
constexpr NormColumn norm_columns[] = {
    {"final", &ErrorReport::final_time}, {"l2_time", &ErrorReport::l2_time}, {"linf_time", &ErrorReport::linf_time}};

}  // namespace

void write_errors_csv(std::ostream& out, const LadderResult& ladder) {
  out << errors_csv_header << '\n';
  for (std::size_t l = 0; l < ladder.levels.size(); ++l) {
    const auto& r = ladder.levels[l].report;
    auto row = [&](const char* field, const char* norm, double e, double prev_e, double prev_h) {
      out << l << ',' << fmt(r.h) << ',' << fmt(r.dt) << ',' << r.dofs << ',' << field << ',' << norm << ','
          << fmt(e) << ',';
      if (l > 0 && e > 0.0 && prev_e > 0.0) out << fmt(std::log(prev_e / e) / std::log(prev_h / r.h));
      out << '\n';
    };
    const ErrorReport* prev = l > 0 ? &ladder.levels[l - 1].report : nullptr;
    for (const auto& nc : norm_columns)
      for (int f = 0; f < 5; ++f)
        row(field_names[f], nc.name, (r.*nc.member)[f], prev ? (prev->*nc.member)[f] : 0.0, prev ? prev->h : 0.0);
    row("z", "energy", r.z_norm, prev ? prev->z_norm : 0.0, prev ? prev->h : 0.0);
  }
}

void write_rates_csv(std::ostream& out, const LadderResult& ladder) {
  out << rates_csv_header << '\n';
  std::vector<double> hs;
  for (const auto& l : ladder.levels) hs.push_back(l.report.h);
  struct Series {
    const char* field;
    const char* norm;
    std::vector<double> e;
  };
  std::vector<Series> all;
  for (const auto& nc : norm_columns)
    for (int f = 0; f < 5; ++f) {
      Series s{field_names[f], nc.name, {}};
      for (const auto& l : ladder.levels) s.e.push_back((l.report.*nc.member)[f]);
      all.push_back(std::move(s));
    }
  {
    Series s{"z", "energy", {}};
    for (const auto& l : ladder.levels) s.e.push_back(l.report.z_norm);
    all.push_back(std::move(s));
  }
  std::vector<RateSummary> rates;
  for (const auto& s : all) rates.push_back(convergence_rates(hs, s.e));
  for (std::size_t i = 0; i + 1 < hs.size(); ++i)
    for (std::size_t k = 0; k < all.size(); ++k)
      out << ladder.levels[i].n << ',' << ladder.levels[i + 1].n << ',' << all[k].field << ',' << all[k].norm << ','
          << fmt(rates[k].pairwise[i]) << ',' << fmt(rates[k].least_squares) << '\n';
}

void write_profile_csv(std::ostream& out, double t, const LineProfile& p) {
  for (std::size_t i = 0; i < p.x.size(); ++i)
    out << fmt(t) << ',' << fmt(p.y) << ',' << fmt(p.x[i]) << ',' << fmt(p.p[i]) << '\n';
}

void write_history_csv(std::ostream& out, const FixedStressComparison& c) {
  out << history_csv_header << '\n';
  for (const auto& r : c.rows)
    out << r.step << ',' << r.iter << ',' << fmt(r.res) << ',' << fmt(r.ratio) << ',' << fmt(r.bound) << '\n';
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

bool is_hex(const std::string& s) {
  if (s.size() != 16) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; });
}

}  // namespace

std::vector<std::string> validate_csv(std::istream& in) {
  std::vector<std::string> problems;
  std::string header;
  if (!std::getline(in, header)) return {"empty file"};
  if (!header.empty() && header.back() == '\r') header.pop_back();

  // per-column kinds: i integer, n number, o optional number, s name, h hex hash
  std::string kinds;
  if (header == errors_csv_header)
    kinds = "innissno";
  else if (header == rates_csv_header)
    kinds = "iissnn";
  else if (header == profile_csv_header)
    kinds = "nnnn";
  else if (header == history_csv_header)
    kinds = "iinnn";
  else if (header == hashes_csv_header)
    kinds = "inh";
  else
    return {"unknown header: " + header};

  std::string line;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != kinds.size()) {
      problems.push_back("row " + std::to_string(row) + ": expected " + std::to_string(kinds.size()) +
                         " columns, found " + std::to_string(cells.size()));
      continue;
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& v = cells[c];
      bool good = true;
      switch (kinds[c]) {
        case 'i': good = is_integer(v); break;
        case 'n': good = is_number(v); break;
        case 'o': good = v.empty() || is_number(v); break;
        case 's': good = !v.empty(); break;
        case 'h': good = is_hex(v); break;
      }
      if (!good) problems.push_back("row " + std::to_string(row) + ", column " + std::to_string(c + 1) + ": bad value '" + v + "'");
    }
  }
  if (row == 1) problems.push_back("no data rows");
  return problems;
}

}  // namespace sdg
