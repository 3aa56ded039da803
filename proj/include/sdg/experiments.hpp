#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdg/verification.hpp"

namespace sdg {

enum class ExperimentKind { convergence, cantilever, shishkin, compaction, fixed_stress_compare };

std::string_view experiment_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_name(std::string_view name);

enum class MeshFamily { square, trapezoid, shishkin };

std::string_view mesh_family_name(MeshFamily family);
std::optional<MeshFamily> parse_mesh_family(std::string_view name);
/// Unit-square mesh of the family with n cells per side; theta is used by shishkin only.
PrimalMesh make_unit_square_mesh(MeshFamily family, int n, double theta = 1e-2);

/// Number of backward-Euler steps covering [0, T] with steps no longer than dt.
int step_count(double final_time, double dt);

// --- convergence ladders ----------------------------------------------------------

struct LadderSetup {
  MeshFamily family = MeshFamily::square;
  std::vector<int> levels{4, 8, 16, 32};
  int order = 1;
  double theta = 1e-2;  // shishkin grading parameter
  double final_time = 0.01;
  /// Time step; zero or negative selects dt = h^2 per level.
  double dt = 0.0;
  Scheme scheme = Scheme::monolithic;
  FixedStressConfig fixed_stress;
};

struct LadderLevel {
  int n = 0;
  int steps = 0;
  ErrorReport report;
  FieldState final_state;
};

struct LadderResult {
  std::vector<LadderLevel> levels;
  /// Rates of the final-time L2 errors, one summary per field.
  std::array<RateSummary, 5> rates;
  std::vector<std::string> warnings;
};

/// Runs the manufactured case on every level of the ladder.
LadderResult run_ladder(const ManufacturedCase& mc, const LadderSetup& setup);

// --- cantilever -------------------------------------------------------------------

struct CantileverSetup {
  double young = 1e4;
  double poisson = 0.4;
  double alpha = 0.93;
  double c0 = 0.0;
  double permeability = 1e-6;
  double traction = 1.0;  // downward load on the top side, t > 0
  int cells = 32;
  double dt = 0.001;
  double final_time = 0.005;
  std::vector<double> lines{0.25, 0.5, 0.75};
  std::vector<double> profile_times{0.001, 0.005};
  Scheme scheme = Scheme::monolithic;
  FixedStressConfig fixed_stress;
};

struct CantileverResult {
  /// One entry per (profile time, line), time-major.
  std::vector<std::pair<double, LineProfile>> profiles;
  FieldState final_state;
  double conservation = 0.0;  // worst residual over all time levels
  std::vector<std::string> warnings;
};

TransientProblem cantilever_problem(const SpaceSet& spaces, const CantileverSetup& setup);
CantileverResult run_cantilever(const CantileverSetup& setup);

// --- compaction -------------------------------------------------------------------

/// Conditions of one basin boundary segment, built from two words:
/// flow in {no-flow, drained, head} and mechanics in {clamped, roller, free}.
struct SegmentCondition {
  enum class Flow { no_flow, drained, head } flow = Flow::no_flow;
  enum class Mechanics { clamped, roller, free } mechanics = Mechanics::free;

  static std::optional<SegmentCondition> parse(std::string_view text);
  [[nodiscard]] std::string str() const;
};

struct LayerParams {
  double c0 = 0.0;
  double permeability = 1.0;
  double young = 1.0;
  double poisson = 0.25;
  double alpha = 1.0;
};

inline constexpr std::array<char, 5> basin_markers{'A', 'B', 'C', 'D', 'E'};

struct CompactionSetup {
  BasinSpec basin;
  LayerParams aquifer{1e-6, 25.0, 8e8, 0.25, 1.0};
  LayerParams confining{1e-5, 0.01, 8e7, 0.25, 1.0};
  std::map<char, SegmentCondition> segments = default_segments();
  double head_rate = 6.0 / 360.0;  // H(t) = head_rate * t on "head" segments
  double dt = 360.0;
  int steps = 10;
  Scheme scheme = Scheme::monolithic;
  FixedStressConfig fixed_stress;

  /// The five default segment conditions A-E.
  static std::map<char, SegmentCondition> default_segments();
};

struct CompactionResult {
  std::vector<FieldState> states;  // t = 0, dt, ..., steps dt
  std::vector<std::uint64_t> hashes;
  std::vector<std::string> warnings;
};

/// Throws std::invalid_argument listing all of A-E when a segment is unassigned.
TransientProblem compaction_problem(const SpaceSet& spaces, const CompactionSetup& setup);
CompactionResult run_compaction(const CompactionSetup& setup);

// --- fixed stress against monolithic ------------------------------------------------

struct ContractionRow {
  int step = 0;
  int iter = 0;
  double res = 0.0;    // ||p^{n,i} - p^{n,i-1}||_0
  double ratio = 0.0;  // ||p^n - p^{n,i}||^2 / ||p^n - p^{n,i-1}||^2
  double bound = 0.0;
};

struct FixedStressComparison {
  std::vector<ContractionRow> rows;
  double beta = 0.0;
  double bound = 0.0;
  /// ||p_fs - p_mono||_0 at the final time of independent runs.
  double final_pressure_gap = 0.0;
  std::vector<std::string> warnings;
};

/// Iteration histories on one mesh with the monolithic step as reference.
FixedStressComparison compare_fixed_stress(const ManufacturedCase& mc, MeshFamily family, int n,
                                           double final_time, double dt, const FixedStressConfig& config,
                                           double theta = 1e-2);

// --- configuration ----------------------------------------------------------------

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::convergence;
  std::filesystem::path output = "results";
  bool plots = true;

  // manufactured-solution runs
  LadderSetup ladder;
  double mu = 1.0;
  double lambda = 1.0;
  std::optional<double> poisson;  // overrides lambda with mu kept
  double alpha = 1.0;
  std::vector<double> c0_values{1.0};
  Mat2 permeability = Mat2::Identity();
  /// Fixed-stress comparison mesh level.
  int compare_level = 8;

  CantileverSetup cantilever;
  CompactionSetup compaction;

  /// Uniform material for the manufactured cases at storativity c0.
  [[nodiscard]] MaterialParams material(double c0) const;
};

/// Parses an INI-style config. Unknown sections or keys and malformed values
/// throw ConfigError naming the key path ("section.key").
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  [[nodiscard]] bool ok() const { return errors.empty(); }
};

/// Dry-run checks of a parsed config without solving.
ValidationReport validate_config(const ExperimentConfig& config);

/// Parse, then validate; parse failures become errors of the report.
ValidationReport validate_config_file(const std::filesystem::path& path);

std::string experiment_catalog();

// --- outputs ----------------------------------------------------------------------

/// Known CSV schemas by header line.
inline constexpr std::string_view errors_csv_header = "level,h,dt,dofs,field,norm,error,rate";
inline constexpr std::string_view rates_csv_header = "from,to,field,norm,rate,slope";
inline constexpr std::string_view profile_csv_header = "t,y,x,p";
inline constexpr std::string_view history_csv_header = "step,iter,res,ratio,bound";
inline constexpr std::string_view hashes_csv_header = "step,t,hash";

void write_errors_csv(std::ostream& out, const LadderResult& ladder);
void write_rates_csv(std::ostream& out, const LadderResult& ladder);
void write_profile_csv(std::ostream& out, double t, const LineProfile& profile);
void write_history_csv(std::ostream& out, const FixedStressComparison& comparison);

/// Checks that a CSV file matches one of the schemas above; returns a list of problems.
std::vector<std::string> validate_csv(std::istream& in);

struct RunSummary {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
  std::string text;  // one-screen summary
};

/// Runs the configured pipeline and writes its artifacts under config.output.
RunSummary run_experiment(const ExperimentConfig& config);

}  // namespace sdg
