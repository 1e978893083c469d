#pragma once
// Command-line front end.  Every command computes all of its outputs in
// memory first and only then touches the filesystem.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "amspline/baselines.hpp"
#include "amspline/data.hpp"
#include "amspline/inference.hpp"
#include "amspline/prior.hpp"
#include "amspline/sampler.hpp"

namespace amspline::cli {

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kSamplerError = 4,
};

inline constexpr std::size_t kMinGridSize = 50;
inline constexpr std::uint64_t kDefaultSeed = 20240601;
inline constexpr const char* kSeedEnv = "AMSPLINE_SEED";

struct RunConfig {
  std::string data;
  std::vector<double> knots;
  double bandwidth = 1.0;
  PriorSpec prior;
  ChainConfig chain;
  std::vector<double> gammas{50.0, 75.0, 90.0};
  EdConvention ed_convention = EdConvention::reduction;
  std::size_t grid_size = 101;
  std::string out = "amspline_out";
  bool normalize = true;  // percent-to-control before fitting
  std::vector<Family> families{Family::logistic, Family::gompertz, Family::gaussian,
                               Family::exponential};

  SplineConfig spline() const { return {knots, bandwidth}; }
  // Fills derived fields (stick count) and throws ConfigError on bad input.
  void resolve();
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

// Output file name -> contents.
using FileSet = std::map<std::string, std::string>;

// Writes every file under dir (created if missing).  Throws ConfigError when
// the directory cannot be written.
void write_files(const std::filesystem::path& dir, const FileSet& files);

struct FitResult {
  Dataset data;  // after optional normalization
  PosteriorSamples samples;
  PredictiveBand band;
  std::vector<EDResult> eds;
  FileSet files;
};

// Loads data (unless `data` is given), fits, and renders summary.csv,
// band.csv, ed.csv, ed_samples_<gamma>.csv, trace.csv and run.json.
FitResult fit(const RunConfig& config, std::optional<Dataset> data = std::nullopt);

struct CompareRow {
  std::string model;
  std::optional<double> ed50;
  std::string status;  // ok | not-determinable | not-attained | fit-failed | shape-only
  std::optional<bool> converged;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  FileSet files;  // compare_curves.csv, compare_ed.csv
};

CompareResult compare(const RunConfig& config, std::optional<Dataset> data = std::nullopt);

std::string summary_csv(const PosteriorSamples& samples, std::size_t num_knots);
std::string band_csv(const PredictiveBand& band);
std::string ed_csv(const std::vector<EDResult>& eds);
std::string ed_samples_csv(const EDResult& ed);
std::string trace_csv(const PosteriorSamples& samples);
std::string ed_samples_file_name(double gamma);

// Entry point used by the amspline executable.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace amspline::cli
