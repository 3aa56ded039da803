#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sdg/experiments.hpp"

namespace sdg {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"experiment", {"name", "output", "plots"}},
      {"mesh", {"family", "levels", "order", "theta", "cells", "compare_level"}},
      {"material", {"mu", "lambda", "poisson", "young", "alpha", "c0", "permeability"}},
      {"time", {"final_time", "dt", "steps", "profile_times"}},
      {"scheme", {"type", "beta", "tolerance", "max_iterations", "clamp", "local_elimination"}},
      {"load", {"traction", "lines"}},
      {"aquifer", {"c0", "permeability", "young", "poisson", "alpha"}},
      {"confining", {"c0", "permeability", "young", "poisson", "alpha"}},
      {"basin", {"columns", "rows", "head_rate"}},
      {"boundary", {"A", "B", "C", "D", "E"}},
  };
  return keys;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  [[nodiscard]] std::optional<std::string> raw(const std::string& path) const {
    if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return trim(*v);
    return std::nullopt;
  }

  [[nodiscard]] std::vector<double> numbers(const std::string& path, const std::string& text) const {
    std::vector<double> out;
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(to_number(path, tok));
    if (out.empty()) throw ConfigError(path + ": expected at least one number");
    return out;
  }

  void number(const std::string& path, double& into) const {
    if (auto v = raw(path)) into = to_number(path, *v);
  }

  void integer(const std::string& path, int& into) const {
    if (auto v = raw(path)) {
      const double d = to_number(path, *v);
      if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError(path + ": expected an integer, got '" + *v + "'");
      into = static_cast<int>(d);
    }
  }

  void boolean(const std::string& path, bool& into) const {
    if (auto v = raw(path)) {
      if (*v == "true" || *v == "yes" || *v == "1")
        into = true;
      else if (*v == "false" || *v == "no" || *v == "0")
        into = false;
      else
        throw ConfigError(path + ": expected true or false, got '" + *v + "'");
    }
  }

  void list(const std::string& path, std::vector<double>& into) const {
    if (auto v = raw(path)) into = numbers(path, *v);
  }

  void int_list(const std::string& path, std::vector<int>& into) const {
    if (auto v = raw(path)) {
      into.clear();
      for (double d : numbers(path, *v)) {
        if (d != std::floor(d)) throw ConfigError(path + ": expected integers");
        into.push_back(static_cast<int>(d));
      }
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
  }

  static double to_number(const std::string& path, const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || used == 0) throw ConfigError(path + ": expected a number, got '" + s + "'");
    return v;
  }

  const pt::ptree& tree_;
};

void read_layer(const Reader& r, const std::string& section, LayerParams& l) {
  r.number(section + ".c0", l.c0);
  r.number(section + ".permeability", l.permeability);
  r.number(section + ".young", l.young);
  r.number(section + ".poisson", l.poisson);
  r.number(section + ".alpha", l.alpha);
}

}  // namespace

MaterialParams ExperimentConfig::material(double c0) const {
  MaterialParams m;
  m.mu = mu;
  m.lambda = lambda;
  if (poisson) {
    const double nu = *poisson;
    if (!(nu > -1.0 && nu < 0.5))
      throw MaterialError("Poisson ratio must lie in (-1, 0.5); nu = 0.5 makes lambda infinite");
    m.lambda = 2.0 * mu * nu / (1.0 - 2.0 * nu);
  }
  m.alpha = alpha;
  m.c0 = c0;
  m.permeability = permeability;
  return m;
}

ExperimentConfig parse_config(std::istream& in) {
  // ';' and '#' start a comment at the beginning of a line or after whitespace
  std::ostringstream cleaned;
  std::string line;
  while (std::getline(in, line)) {
    for (std::size_t i = 0; i < line.size(); ++i)
      if ((line[i] == ';' || line[i] == '#') && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.erase(i);
        break;
      }
    cleaned << line << '\n';
  }
  pt::ptree tree;
  try {
    std::istringstream src(cleaned.str());
    pt::ini_parser::read_ini(src, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }

  for (const auto& [section, body] : tree) {
    auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      if (body.empty() && !body.data().empty()) throw ConfigError(section + ": key outside any [section]");
      throw ConfigError(section + ": unknown section");
    }
    for (const auto& [key, value] : body) {
      (void)value;
      if (!it->second.count(key)) throw ConfigError(section + "." + key + ": unknown key");
    }
  }

  const Reader r(tree);
  ExperimentConfig c;
  const auto name = r.raw("experiment.name");
  if (!name) throw ConfigError("experiment.name: missing");
  const auto kind = parse_experiment_name(*name);
  if (!kind) throw ConfigError("experiment.name: unknown experiment '" + *name + "'");
  c.kind = *kind;
  if (auto v = r.raw("experiment.output")) c.output = *v;
  r.boolean("experiment.plots", c.plots);

  if (c.kind == ExperimentKind::shishkin) {
    c.ladder.family = MeshFamily::shishkin;
    c.ladder.levels = {8, 16, 32};
  }
  if (auto v = r.raw("mesh.family")) {
    const auto f = parse_mesh_family(*v);
    if (!f) throw ConfigError("mesh.family: unknown mesh family '" + *v + "'");
    c.ladder.family = *f;
  }
  r.int_list("mesh.levels", c.ladder.levels);
  r.integer("mesh.order", c.ladder.order);
  r.number("mesh.theta", c.ladder.theta);
  r.integer("mesh.cells", c.cantilever.cells);
  r.integer("mesh.compare_level", c.compare_level);

  if (c.kind == ExperimentKind::cantilever) {
    r.number("material.young", c.cantilever.young);
    r.number("material.poisson", c.cantilever.poisson);
    r.number("material.alpha", c.cantilever.alpha);
    r.number("material.c0", c.cantilever.c0);
    r.number("material.permeability", c.cantilever.permeability);
    for (const char* k : {"material.mu", "material.lambda"})
      if (r.raw(k)) throw ConfigError(std::string(k) + ": the cantilever takes young and poisson");
  } else {
    r.number("material.mu", c.mu);
    r.number("material.lambda", c.lambda);
    if (auto v = r.raw("material.poisson")) {
      double nu = 0.0;
      r.number("material.poisson", nu);
      c.poisson = nu;
    }
    if (r.raw("material.young")) throw ConfigError("material.young: use mu with poisson, or mu and lambda");
    r.number("material.alpha", c.alpha);
    r.list("material.c0", c.c0_values);
    if (auto v = r.raw("material.permeability")) {
      const auto k = r.numbers("material.permeability", *v);
      if (k.size() == 1)
        c.permeability = k[0] * Mat2::Identity();
      else if (k.size() == 3)
        c.permeability << k[0], k[1], k[1], k[2];
      else
        throw ConfigError("material.permeability: give k, or kxx kxy kyy");
    }
  }

  r.number("time.final_time", c.ladder.final_time);
  r.number("time.final_time", c.cantilever.final_time);
  if (auto v = r.raw("time.dt"); v && *v != "h2") {
    double dt = 0.0;
    r.number("time.dt", dt);
    c.ladder.dt = dt;
    c.cantilever.dt = dt;
    c.compaction.dt = dt;
  }
  r.integer("time.steps", c.compaction.steps);
  r.list("time.profile_times", c.cantilever.profile_times);

  if (auto v = r.raw("scheme.type")) {
    if (*v == "monolithic")
      c.ladder.scheme = Scheme::monolithic;
    else if (*v == "fixed-stress")
      c.ladder.scheme = Scheme::fixed_stress;
    else
      throw ConfigError("scheme.type: expected monolithic or fixed-stress, got '" + *v + "'");
  }
  auto& fs = c.ladder.fixed_stress;
  r.number("scheme.beta", fs.beta);
  r.number("scheme.tolerance", fs.tolerance);
  r.integer("scheme.max_iterations", fs.max_iterations);
  r.boolean("scheme.clamp", fs.clamp);
  r.boolean("scheme.local_elimination", fs.local_elimination);
  c.cantilever.scheme = c.compaction.scheme = c.ladder.scheme;
  c.cantilever.fixed_stress = c.compaction.fixed_stress = fs;

  r.number("load.traction", c.cantilever.traction);
  r.list("load.lines", c.cantilever.lines);

  read_layer(r, "aquifer", c.compaction.aquifer);
  read_layer(r, "confining", c.compaction.confining);
  r.integer("basin.columns", c.compaction.basin.columns);
  r.integer("basin.rows", c.compaction.basin.rows);
  r.number("basin.head_rate", c.compaction.head_rate);

  // a [boundary] section replaces the default segment table as a whole
  if (tree.get_child_optional("boundary")) {
    c.compaction.segments.clear();
    for (const auto& [key, value] : tree.get_child("boundary")) {
      const auto seg = SegmentCondition::parse(value.data());
      if (!seg)
        throw ConfigError("boundary." + key + ": expected '<no-flow|drained|head> <clamped|roller|free>', got '" +
                          value.data() + "'");
      c.compaction.segments[key[0]] = *seg;
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  return parse_config(in);
}

namespace {

void check_beta(const ExperimentConfig& c, const MaterialField& mat, ValidationReport& rep) {
  const auto& fs = c.ladder.fixed_stress;
  const bool uses_fs = c.ladder.scheme == Scheme::fixed_stress || c.kind == ExperimentKind::fixed_stress_compare;
  if (!uses_fs || fs.beta < 0.0) return;
  const double thr = fixed_stress_threshold(mat);
  if (fs.beta < thr) {
    std::ostringstream msg;
    msg << "scheme.beta: fixed-stress beta = " << fs.beta << " is below the threshold alpha^2/(2(mu+lambda)) = " << thr;
    msg << (fs.clamp ? "; it will be clamped to the threshold" : "; contraction is not guaranteed");
    rep.warnings.push_back(msg.str());
  }
}

}  // namespace

ValidationReport validate_config(const ExperimentConfig& c) {
  ValidationReport rep;
  auto err = [&](std::string s) { rep.errors.push_back(std::move(s)); };
  const auto& fs = c.ladder.fixed_stress;
  if (!(fs.tolerance > 0.0)) err("scheme.tolerance: must be positive");
  if (fs.max_iterations < 1) err("scheme.max_iterations: must be at least 1");

  switch (c.kind) {
    case ExperimentKind::convergence:
    case ExperimentKind::shishkin:
    case ExperimentKind::fixed_stress_compare: {
      const auto& lad = c.ladder;
      if (lad.order < 1) err("mesh.order: must be at least 1");
      if (c.kind == ExperimentKind::fixed_stress_compare) {
        if (c.compare_level < 2) err("mesh.compare_level: must be at least 2");
      } else {
        if (lad.levels.size() < 2) err("mesh.levels: need at least two levels");
        for (std::size_t i = 0; i < lad.levels.size(); ++i) {
          if (lad.levels[i] < 1) err("mesh.levels: cell counts must be positive");
          if (i > 0 && lad.levels[i] <= lad.levels[i - 1]) err("mesh.levels: must be strictly increasing");
        }
      }
      const bool needs_even = lad.family != MeshFamily::square || c.kind == ExperimentKind::shishkin;
      if (needs_even)
        for (int n : lad.levels)
          if (n % 2) err("mesh.levels: " + std::string(mesh_family_name(lad.family)) + " meshes need even N");
      if (!(lad.theta > 0.0 && lad.theta < 1.0)) err("mesh.theta: must lie in (0, 1)");
      if (!(lad.final_time > 0.0)) err("time.final_time: must be positive");
      if (c.c0_values.empty()) err("material.c0: give at least one value");
      for (double c0 : c.c0_values) {
        try {
          const MaterialParams m = c.material(c0);
          m.validate();
          check_beta(c, MaterialField(m), rep);
        } catch (const MaterialError& e) {
          err(std::string("material: ") + e.what());
          break;
        }
      }
      break;
    }
    case ExperimentKind::cantilever: {
      const auto& s = c.cantilever;
      if (s.cells < 1) err("mesh.cells: must be positive");
      if (!(s.dt > 0.0)) err("time.dt: must be positive");
      if (!(s.final_time > 0.0)) err("time.final_time: must be positive");
      for (double y : s.lines)
        if (!(y > 0.0 && y < 1.0)) err("load.lines: lines must lie strictly inside (0, 1)");
      for (double t : s.profile_times)
        if (!(t > 0.0 && t <= s.final_time * (1 + 1e-12))) err("time.profile_times: times must lie in (0, final_time]");
      try {
        const auto m = MaterialParams::from_young(s.young, s.poisson, s.alpha, s.c0, s.permeability * Mat2::Identity());
        m.validate();
        check_beta(c, MaterialField(m), rep);
      } catch (const MaterialError& e) {
        err(std::string("material: ") + e.what());
      }
      break;
    }
    case ExperimentKind::compaction: {
      const auto& s = c.compaction;
      if (s.basin.columns < 1 || s.basin.rows < 1) err("basin: columns and rows must be positive");
      if (s.steps < 1) err("time.steps: must be at least 1");
      if (!(s.dt > 0.0)) err("time.dt: must be positive");
      std::string missing;
      for (char m : basin_markers)
        if (!s.segments.count(m)) missing += std::string(missing.empty() ? "" : ", ") + m;
      if (!missing.empty())
        err("boundary: markers A, B, C, D, E must all be assigned; missing " + missing);
      std::vector<MaterialParams> layers(2);
      bool ok = true;
      for (const auto& [name, l] : {std::pair{"aquifer", s.aquifer}, std::pair{"confining", s.confining}}) {
        try {
          const auto m =
              MaterialParams::from_young(l.young, l.poisson, l.alpha, l.c0, l.permeability * Mat2::Identity());
          m.validate();
          layers[name[0] == 'a' ? basin_tag::aquifer : basin_tag::confining] = m;
        } catch (const MaterialError& e) {
          err(std::string(name) + ": " + e.what());
          ok = false;
        }
      }
      if (ok) check_beta(c, MaterialField(layers), rep);
      break;
    }
  }
  return rep;
}

ValidationReport validate_config_file(const std::filesystem::path& path) {
  try {
    return validate_config(load_config(path));
  } catch (const ConfigError& e) {
    ValidationReport rep;
    rep.errors.emplace_back(e.what());
    return rep;
  }
}

std::string experiment_catalog() {
  const CantileverSetup cant;
  const CompactionSetup comp;
  const LadderSetup lad;
  std::ostringstream o;
  o << "convergence\n"
    << "  Manufactured smooth solution on the unit square; error tables and observed rates.\n"
    << "  defaults: mesh = square, levels = 4 8 16 32, k = 1, T = " << lad.final_time
    << ", dt = h^2, mu = lambda = alpha = 1, c0 = 1, K = I\n"
    << "  alternatives: mesh = trapezoid, K = 0.02 0 1, c0 = 1 0.001 0\n";
  o << "cantilever\n"
    << "  Clamped poroelastic bracket under a top load; pressure profiles along horizontal lines.\n"
    << "  defaults: E = " << cant.young << ", nu = " << cant.poisson << ", alpha = " << cant.alpha
    << ", c0 = " << cant.c0 << ", K = " << cant.permeability << ", dt = " << cant.dt << ", T = " << cant.final_time
    << ", " << cant.cells << "x" << cant.cells << " cells, lines y = 0.25 0.5 0.75\n";
  o << "shishkin\n"
    << "  Boundary-layer solution exp(-x/theta) on uniform and layer-adapted meshes.\n"
    << "  defaults: theta = 1e-2, levels = 8 16 32, T = " << lad.final_time << ", dt = h^2\n";
  o << "compaction\n"
    << "  Layered sedimentary basin over a stepped bedrock with a prescribed head in the lower aquifer.\n"
    << "  defaults: aquifer layers: K = " << comp.aquifer.permeability << " m/day, E = " << comp.aquifer.young
    << " Pa, c0 = " << comp.aquifer.c0 << " 1/m\n"
    << "            confining layer: K = " << comp.confining.permeability << " m/day, E = " << comp.confining.young
    << " Pa, c0 = " << comp.confining.c0 << " 1/m\n"
    << "            nu = " << comp.aquifer.poisson << ", alpha = " << comp.aquifer.alpha
    << " in all layers; H(t) = 6 m/year * t; dt = " << comp.dt << " days, " << comp.steps << " steps\n"
    << "            boundary:";
  const char* sep = " ";
  for (const auto& [m, s] : CompactionSetup::default_segments()) {
    o << sep << m << " = " << s.str();
    sep = "; ";
  }
  o << '\n';
  o << "fixed-stress-compare\n"
    << "  Fixed-stress iteration against the monolithic step: per-iteration contraction ratios and the bound.\n"
    << "  defaults: N = 8, beta = alpha^2/(2(mu+lambda)), tolerance = 1e-8, c0 = 1\n";
  return o.str();
}

}  // namespace sdg
