// Published reference behaviour of the method, checked end to end through the
// experiment pipeline. Slower than the unit tests; kept apart so a failure here
// is visible on its own line in ctest.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sdg/experiments.hpp"

using namespace sdg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sdg_reference_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

MaterialParams unit_material(double c0) {
  MaterialParams m;
  m.c0 = c0;
  return m;
}

}  // namespace

TEST_CASE("one refinement from N = 4 to N = 8 divides every error by about four") {
  LadderSetup s;
  s.levels = {4, 8};
  const auto lad = run_ladder(ManufacturedCase::smooth(unit_material(1.0)), s);
  for (int f = 0; f < 5; ++f) {
    const double ratio = lad.levels[0].report.final_time[f] / lad.levels[1].report.final_time[f];
    const std::string field = field_names[f];
    CAPTURE(field);
    CAPTURE(ratio);
    CHECK(ratio >= 3.4);
    CHECK(ratio <= 4.6);
  }
}

TEST_CASE("convergence run with c0 = 0 reports rates of at least 1.9 on the finest pair") {
  auto c = parse("[experiment]\nname = convergence\nplots = false\n[material]\nc0 = 0\n");
  c.output = scratch("c0_zero");
  run_experiment(c);
  int checked = 0;
  for (const auto& row : read_csv(c.output / "rates.csv")) {
    if (row[0] != "16" || row[1] != "32" || row[3] != "final") continue;
    CAPTURE(row[2]);
    CHECK(std::stod(row[4]) >= 1.9);
    ++checked;
  }
  CHECK(checked == 5);
  fs::remove_all(c.output);
}

TEST_CASE("fixed-stress history ratios stay below the bound column") {
  auto c = parse("[experiment]\nname = fixed-stress-compare\nplots = false\n[material]\nc0 = 1 0\n");
  c.output = scratch("history");
  run_experiment(c);
  for (const char* dir : {"c0_1", "c0_0"}) {
    const auto rows = read_csv(c.output / dir / "history.csv");
    REQUIRE_FALSE(rows.empty());
    int above = 0;
    for (const auto& row : rows) above += std::stod(row[3]) > std::stod(row[4]) + 1e-8;
    CAPTURE(dir);
    CAPTURE(rows.size());
    CHECK(above == 0);
  }
  fs::remove_all(c.output);
}

TEST_CASE("cantilever config runs to T = 0.005 and emits three line profiles") {
  auto c = parse("[experiment]\nname = cantilever\nplots = false\n");
  c.output = scratch("cantilever");
  const auto sum = run_experiment(c);
  CHECK(sum.files.size() == 3);
  for (const char* y : {"0.25", "0.5", "0.75"}) {
    const auto rows = read_csv(c.output / (std::string("profile_y") + y + ".csv"));
    REQUIRE_FALSE(rows.empty());
    CHECK(std::stod(rows.back()[0]) == doctest::Approx(0.005));
  }
  fs::remove_all(c.output);
}

TEST_CASE("compaction produces ten yearly states following the prescribed head") {
  const CompactionSetup setup;
  const auto res = run_compaction(setup);
  REQUIRE(res.states.size() == 11);
  const StaggeredMesh mesh(generate_basin(setup.basin));
  const SpaceSet sp(mesh, 1);
  double previous = -1.0;
  for (std::size_t n = 0; n < res.states.size(); ++n) {
    CHECK(res.states[n].t == doctest::Approx(360.0 * static_cast<double>(n)));
    // first sample next to the head boundary in the lower aquifer
    const double p = oscillation_profile(sp, res.states[n].p, 200.0).p.front();
    CHECK(p >= previous);
    previous = p;
  }
  const double head = setup.head_rate * res.states.back().t;
  CHECK(head == doctest::Approx(60.0));
  CHECK(previous == doctest::Approx(head).epsilon(0.05));
}

TEST_CASE("nearly incompressible errors stay within ten times the nu = 0.25 run") {
  MaterialParams stiff = unit_material(1.0);
  stiff.lambda = 2.0 * stiff.mu * 0.499 / (1.0 - 2.0 * 0.499);
  const auto a = run_ladder(ManufacturedCase::smooth(unit_material(1.0)), LadderSetup{});
  const auto b = run_ladder(ManufacturedCase::smooth(stiff), LadderSetup{});
  for (std::size_t i = 0; i < a.levels.size(); ++i)
    for (int f = 0; f < 5; ++f) {
      const double factor = b.levels[i].report.final_time[f] / a.levels[i].report.final_time[f];
      CAPTURE(a.levels[i].n);
      const std::string field = field_names[f];
      CAPTURE(field);
      CAPTURE(factor);
      CHECK(factor <= 10.0);
    }
}
