#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sdg/experiments.hpp"

using namespace sdg;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

LadderSetup tiny_ladder() {
  LadderSetup s;
  s.levels = {2, 4};
  s.final_time = 0.01;
  return s;
}

std::string csv_of(const LadderResult& lad, bool rates) {
  std::ostringstream out;
  rates ? write_rates_csv(out, lad) : write_errors_csv(out, lad);
  return out.str();
}

std::vector<std::string> problems_of(const std::string& csv) {
  std::istringstream in(csv);
  return validate_csv(in);
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("defaults and values") {
    const auto c = parse(
        "[experiment]\nname = convergence\n[mesh]\nfamily = trapezoid\nlevels = 4 8\n"
        "[material]\nc0 = 1 0.001 0\npermeability = 0.02 0 1\n");
    CHECK(c.kind == ExperimentKind::convergence);
    CHECK(c.ladder.family == MeshFamily::trapezoid);
    CHECK(c.ladder.levels == std::vector<int>{4, 8});
    CHECK(c.c0_values == std::vector<double>{1.0, 0.001, 0.0});
    CHECK(c.permeability(0, 0) == doctest::Approx(0.02));
    CHECK(c.permeability(1, 1) == doctest::Approx(1.0));
    CHECK(c.ladder.dt <= 0.0);
  }
  SUBCASE("hash comments are accepted") {
    CHECK_NOTHROW(parse("# comment\n[experiment]\n# another\nname = shishkin\n"));
    const auto c = parse("[experiment]\nname = shishkin   ; trailing\n[mesh]\nlevels = 8 16 # 32\n");
    CHECK(c.kind == ExperimentKind::shishkin);
    CHECK(c.ladder.levels == std::vector<int>{8, 16});
  }
  SUBCASE("unknown keys and sections name the key path") {
    CHECK(config_error("[experiment]\nname = convergence\n[mesh]\nlevls = 4 8\n") == "mesh.levls: unknown key");
    CHECK(config_error("[experiment]\nname = convergence\n[solver]\nx = 1\n") == "solver: unknown section");
    CHECK(config_error("[experiment]\nname = convergence\n[mesh]\nlevels = 4 eight\n").rfind("mesh.levels:", 0) == 0);
    CHECK(config_error("[experiment]\nname = nonsense\n").rfind("experiment.name:", 0) == 0);
    CHECK(config_error("[mesh]\nlevels = 4 8\n") == "experiment.name: missing");
  }
  SUBCASE("boundary values") {
    CHECK(config_error("[experiment]\nname = compaction\n[boundary]\nA = soggy clamped\n").rfind("boundary.A:", 0) == 0);
  }
}

TEST_CASE("config validation") {
  SUBCASE("shipped configs are valid") {
    for (const char* name : {"convergence_square", "cantilever", "compaction", "fixed_stress", "shishkin"}) {
      const auto rep = validate_config_file(std::filesystem::path(SDG_SOURCE_DIR) / "configs" / (std::string(name) + ".ini"));
      CAPTURE(name);
      CHECK(rep.ok());
    }
  }
  SUBCASE("beta below the threshold warns and names it") {
    const auto c = parse(
        "[experiment]\nname = fixed-stress-compare\n[material]\nmu = 1\nlambda = 1\nalpha = 1\n"
        "[scheme]\nbeta = 0.01\n");
    const auto rep = validate_config(c);
    CHECK(rep.ok());
    REQUIRE(rep.warnings.size() == 1);
    CHECK(rep.warnings[0].rfind("scheme.beta:", 0) == 0);
    CHECK(rep.warnings[0].find("alpha^2/(2(mu+lambda)) = 0.25") != std::string::npos);
  }
  SUBCASE("beta at the threshold is silent") {
    const auto c = parse("[experiment]\nname = fixed-stress-compare\n[scheme]\nbeta = 0.25\n");
    CHECK(validate_config(c).warnings.empty());
  }
  SUBCASE("nu = 0.5 is rejected") {
    const auto c = parse("[experiment]\nname = convergence\n[material]\npoisson = 0.5\n");
    const auto rep = validate_config(c);
    CHECK_FALSE(rep.ok());
    CHECK(any_contains(rep.errors, "nu = 0.5"));
    CHECK_THROWS_AS((void)c.material(1.0), MaterialError);
  }
  SUBCASE("nu = 0.499 gives lambda = 499 mu") {
    const auto c = parse("[experiment]\nname = convergence\n[material]\nmu = 1\npoisson = 0.499\n");
    CHECK(validate_config(c).ok());
    CHECK(c.material(0.0).lambda == doctest::Approx(499.0));
  }
  SUBCASE("unassigned basin markers are listed") {
    const auto c = parse("[experiment]\nname = compaction\n[boundary]\nA = no-flow clamped\nC = drained roller\n");
    const auto rep = validate_config(c);
    CHECK_FALSE(rep.ok());
    CHECK(any_contains(rep.errors, "markers A, B, C, D, E must all be assigned; missing B, D, E"));
  }
  SUBCASE("ladders must increase") {
    const auto c = parse("[experiment]\nname = convergence\n[mesh]\nlevels = 8 4\n");
    CHECK(any_contains(validate_config(c).errors, "mesh.levels"));
  }
  SUBCASE("missing file") {
    const auto rep = validate_config_file("/nonexistent/config.ini");
    CHECK_FALSE(rep.ok());
  }
}

TEST_CASE("experiment catalog") {
  const auto text = experiment_catalog();
  for (const char* name : {"convergence\n", "cantilever\n", "shishkin\n", "compaction\n", "fixed-stress-compare\n"})
    CHECK(text.find(name) != std::string::npos);
  CHECK(text.find("theta = 1e-2") != std::string::npos);
  CHECK(text.find("K = 25 m/day") != std::string::npos);
  CHECK(text.find("K = 0.01 m/day") != std::string::npos);
  CHECK(text.find("E = 8e+08 Pa") != std::string::npos);
  CHECK(text.find("E = 8e+07 Pa") != std::string::npos);
  CHECK(text.find("dt = 360 days, 10 steps") != std::string::npos);
}

TEST_CASE("experiment names and helpers") {
  for (auto k : {ExperimentKind::convergence, ExperimentKind::cantilever, ExperimentKind::shishkin,
                 ExperimentKind::compaction, ExperimentKind::fixed_stress_compare})
    CHECK(parse_experiment_name(experiment_name(k)) == k);
  CHECK_FALSE(parse_experiment_name("convergance"));
  for (auto f : {MeshFamily::square, MeshFamily::trapezoid, MeshFamily::shishkin})
    CHECK(parse_mesh_family(mesh_family_name(f)) == f);

  CHECK(step_count(0.01, 1.0 / 16) == 1);
  CHECK(step_count(0.01, 1.0 / 64) == 1);
  CHECK(step_count(0.01, 1.0 / 256) == 3);
  CHECK(step_count(0.01, 1.0 / 1024) == 11);
  CHECK(step_count(0.005, 0.001) == 5);  // 0.005/0.001 is not exactly 5 in binary
  CHECK(step_count(3600.0, 360.0) == 10);
  CHECK_THROWS(step_count(0.0, 0.1));
}

TEST_CASE("segment conditions") {
  const auto a = SegmentCondition::parse("head roller");
  REQUIRE(a);
  CHECK(a->flow == SegmentCondition::Flow::head);
  CHECK(a->mechanics == SegmentCondition::Mechanics::roller);
  CHECK(a->str() == "head roller");
  for (const auto& [m, s] : CompactionSetup::default_segments()) {
    const auto back = SegmentCondition::parse(s.str());
    REQUIRE(back);
    CHECK(back->str() == s.str());
  }
  CHECK_FALSE(SegmentCondition::parse("head"));
  CHECK_FALSE(SegmentCondition::parse("roller head"));
  CHECK_FALSE(SegmentCondition::parse("drained free extra"));
  CHECK(CompactionSetup::default_segments().size() == 5);
}

TEST_CASE("ladder outputs") {
  MaterialParams m;
  const auto mc = ManufacturedCase::smooth(m);
  const auto lad = run_ladder(mc, tiny_ladder());
  REQUIRE(lad.levels.size() == 2);
  CHECK(lad.levels[0].steps == step_count(0.01, 0.25));
  CHECK(lad.levels[1].steps == step_count(0.01, 1.0 / 16));

  const auto errors = csv_of(lad, false), rates = csv_of(lad, true);
  CHECK(errors.rfind(std::string(errors_csv_header) + "\n", 0) == 0);
  CHECK(rates.rfind(std::string(rates_csv_header) + "\n", 0) == 0);
  CHECK(problems_of(errors).empty());
  CHECK(problems_of(rates).empty());

  SUBCASE("runs are deterministic") {
    const auto again = run_ladder(mc, tiny_ladder());
    CHECK(csv_of(again, false) == errors);
    CHECK(csv_of(again, true) == rates);
  }
  SUBCASE("corrupted files are reported") {
    CHECK_FALSE(problems_of("level,h,dt\n1,2,3\n").empty());
    std::string bad = errors;
    bad.replace(bad.find("sigma"), 5, "sigmx");
    CHECK(problems_of(bad).empty());  // field names are free text
    bad = errors;
    const auto pos = bad.find('\n') + 1;
    bad.replace(pos, 1, "x");
    CHECK_FALSE(problems_of(bad).empty());
    CHECK_FALSE(problems_of("").empty());
  }
}

TEST_CASE("profile, history and hash csv") {
  LineProfile prof;
  prof.y = 0.5;
  prof.x = {0.25, 0.75};
  prof.p = {1.0, 2.0};
  std::ostringstream out;
  out << profile_csv_header << '\n';
  write_profile_csv(out, 0.005, prof);
  CHECK(problems_of(out.str()).empty());

  FixedStressComparison cmp;
  cmp.rows = {{1, 1, 0.1, 0.5, 0.2}, {1, 2, 0.01, 0.1, 0.2}};
  std::ostringstream hist;
  write_history_csv(hist, cmp);
  CHECK(hist.str().rfind(std::string(history_csv_header) + "\n", 0) == 0);
  CHECK(problems_of(hist.str()).empty());

  CHECK(problems_of("step,t,hash\n0,0.0,45a3174baa3ecfa1\n").empty());
  CHECK_FALSE(problems_of("step,t,hash\n0,0.0,45a3174baa3ecfa\n").empty());
}

TEST_CASE("cantilever run writes profiles") {
  auto c = parse(
      "[experiment]\nname = cantilever\nplots = false\n[mesh]\ncells = 4\n"
      "[time]\nfinal_time = 0.002\nprofile_times = 0.002\n");
  const auto dir = std::filesystem::temp_directory_path() / "sdg_test_cantilever";
  std::filesystem::remove_all(dir);
  c.output = dir;
  REQUIRE(validate_config(c).ok());
  const auto sum = run_experiment(c);
  CHECK(sum.files.size() == 3);
  for (const auto& f : sum.files) {
    std::ifstream in(f);
    CAPTURE(f.string());
    CHECK(validate_csv(in).empty());
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("compaction problem needs every marker") {
  CompactionSetup setup;
  CHECK(setup.segments.size() == 5);
  const StaggeredMesh mesh(generate_basin(setup.basin));
  const SpaceSet sp(mesh, 1);
  CHECK_NOTHROW((void)compaction_problem(sp, setup));
  setup.segments.erase('D');
  try {
    (void)compaction_problem(sp, setup);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    CHECK(what.find("A, B, C, D, E") != std::string::npos);
    CHECK(what.find("missing: D") != std::string::npos);
  }
}
