#pragma once
// Dose-response datasets: CSV ingestion, percent-to-control scaling and the
// two synthetic generators used throughout the tests.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace amspline {

struct Observation {
  double dose = 0.0;
  double response = 0.0;
};

struct Dataset {
  std::vector<Observation> observations;
  std::string units;
  bool normalized = false;

  std::size_t size() const noexcept { return observations.size(); }
  bool empty() const noexcept { return observations.empty(); }
  double max_dose() const;
  std::size_t distinct_doses() const;
};

// Expects a `dose,response` header.  Blank lines are skipped; errors carry the
// 1-based line number.
Dataset parse_csv(std::istream& in);
Dataset load_csv(const std::filesystem::path& path);

void write_csv(const Dataset& data, std::ostream& out);
std::string to_csv(const Dataset& data);

// Divides every response by the mean control (dose 0) response.
Dataset percent_to_control(const Dataset& data);

enum class SimKind { sim1, sim2 };

std::optional<SimKind> parse_sim_kind(std::string_view name);
std::string_view sim_kind_name(SimKind kind);

// Noise-free generator curve on [0, 10] (clamped outside).
double sim_truth(SimKind kind, double dose);

inline constexpr double kSimMaxDose = 10.0;
inline constexpr double kSimResponseFloor = 0.001;

// n uniform doses on [0, 10] plus ceil(n/10) controls, Gaussian noise,
// responses clipped below at 0.001.  Rows sorted by dose.
Dataset generate_sim(SimKind kind, std::size_t n, double noise_sd, std::uint64_t seed);

}  // namespace amspline
