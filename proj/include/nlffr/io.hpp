#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlffr/funcdata.hpp"
#include "nlffr/regression.hpp"
#include "nlffr/sim.hpp"

namespace nlffr::io {

inline constexpr const char* kModelFormat = "nlffr-model";
inline constexpr int kModelVersion = 1;

// Curves read from a long CSV (subject_id,variable,t,value), in order of
// first appearance. Rows are sorted by t within each curve.
struct CurveData {
  std::vector<ObservedCurve> x;
  std::vector<ObservedCurve> y;
};

// Throws ValidationError with the 1-based line number of the first bad row,
// IoError when the file cannot be read.
CurveData read_long_csv(std::istream& in);
CurveData read_long_csv_file(const std::string& path);

// Reorders y to match x by subject id. Throws ValidationError listing every
// unpaired subject.
void pair_by_subject(CurveData& data);

struct BandSettings {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
};

struct RunConfig {
  FitConfig fit;
  int grid_size = 101;
  double alpha = 0.05;
  BandSettings band;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig read_run_config_file(const std::string& path);

std::vector<sim::ScenarioConfig> parse_scenarios(const std::string& json_text);
std::vector<sim::ScenarioConfig> read_scenarios_file(const std::string& path);

std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text);
void save_model(const FittedModel& model, const std::string& path);
FittedModel load_model(const std::string& path);

std::string fit_report_json(const FittedModel& model);

// %.17g
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

// Scenario summary table, one row per scenario.
std::string scenario_summary_csv(const std::vector<sim::ScenarioResult>& results);
// Per-replication rows for every scenario.
std::string scenario_reps_csv(const std::vector<sim::ScenarioResult>& results);

}  // namespace nlffr::io
