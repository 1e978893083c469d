#include "amspline/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "amspline/csv.hpp"
#include "amspline/error.hpp"

namespace amspline {

double Dataset::max_dose() const {
  if (observations.empty()) throw EmptyDataset("dataset has no observations");
  double m = observations.front().dose;
  for (const auto& o : observations) m = std::max(m, o.dose);
  return m;
}

std::size_t Dataset::distinct_doses() const {
  std::set<double> doses;
  for (const auto& o : observations) doses.insert(o.dose);
  return doses.size();
}

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return std::string(s);
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

Dataset parse_csv(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto fields = csv::split_record(line);
    if (!fields) throw ParseError(line_no, "unterminated quoted field");
    if (!have_header) {
      if (fields->size() != 2 || trim((*fields)[0]) != "dose" || trim((*fields)[1]) != "response")
        throw ParseError(line_no, "expected header 'dose,response'");
      have_header = true;
      continue;
    }
    if (fields->size() != 2)
      throw ParseError(line_no, "expected 2 columns, found " + std::to_string(fields->size()));
    const auto dose = csv::parse_double((*fields)[0]);
    const auto response = csv::parse_double((*fields)[1]);
    if (!dose) throw ParseError(line_no, "dose is not a number");
    if (!response) throw ParseError(line_no, "response is not a number");
    if (*dose < 0.0) throw ParseError(line_no, "negative dose");
    data.observations.push_back({*dose, *response});
  }
  if (!have_header) throw EmptyDataset("file has no header");
  if (data.empty()) throw EmptyDataset("file has a header but no observations");
  return data;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in);
}

void write_csv(const Dataset& data, std::ostream& out) { out << to_csv(data); }

std::string to_csv(const Dataset& data) {
  std::string s = "dose,response\n";
  for (const auto& o : data.observations)
    s += csv::format_double(o.dose) + "," + csv::format_double(o.response) + "\n";
  return s;
}

Dataset percent_to_control(const Dataset& data) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& o : data.observations) {
    if (o.dose == 0.0) {
      sum += o.response;
      ++count;
    }
  }
  if (count == 0) throw MissingControl("no observations at dose 0");
  const double control = sum / static_cast<double>(count);
  if (!(control != 0.0) || !std::isfinite(control))
    throw MissingControl("control mean is zero");
  Dataset out = data;
  if (control == 1.0) {
    out.normalized = true;
    return out;
  }
  for (auto& o : out.observations) o.response /= control;
  out.normalized = true;
  return out;
}

std::optional<SimKind> parse_sim_kind(std::string_view name) {
  if (name == "sim1") return SimKind::sim1;
  if (name == "sim2") return SimKind::sim2;
  return std::nullopt;
}

std::string_view sim_kind_name(SimKind kind) {
  return kind == SimKind::sim1 ? "sim1" : "sim2";
}

namespace {

// Sim 2: the negative slope g = -mu' is built from half-cosine segments
// between the nodes below, so g' vanishes at each node and g is monotone in
// between.  The curvature of mu therefore flips sign at 3, 5 and 7 only:
// a shoulder at 3, the steepest drop at 5 and a flat bottom from 7 on.
constexpr std::array<double, 5> kSim2Nodes{0.0, 3.0, 5.0, 7.0, 10.0};
constexpr double kSim2End = 0.02;  // mu(10)
constexpr std::array<double, 5> kSim2SlopesTail{0.0, 0.02, 0.36, 0.002, 0.015};

// Integral of one half-cosine segment from its left end over length t.
double segment_integral(double g_left, double g_right, double h, double t) {
  return g_right * t +
         0.5 * (g_left - g_right) * (t + h / std::numbers::pi * std::sin(std::numbers::pi * t / h));
}

std::array<double, 5> sim2_slopes() {
  auto g = kSim2SlopesTail;
  // Choose g(0) so the total drop over [0, 10] is 1 - mu(10).
  double rest = 0.0;
  for (std::size_t i = 1; i + 1 < kSim2Nodes.size(); ++i)
    rest += 0.5 * (g[i] + g[i + 1]) * (kSim2Nodes[i + 1] - kSim2Nodes[i]);
  const double first_len = kSim2Nodes[1] - kSim2Nodes[0];
  g[0] = 2.0 * ((1.0 - kSim2End) - rest) / first_len - g[1];
  return g;
}

double sim2_truth(double x) {
  static const auto g = sim2_slopes();
  x = std::clamp(x, 0.0, kSimMaxDose);
  double drop = 0.0;
  for (std::size_t i = 0; i + 1 < kSim2Nodes.size(); ++i) {
    const double a = kSim2Nodes[i];
    const double b = kSim2Nodes[i + 1];
    const double h = b - a;
    if (x >= b) {
      drop += 0.5 * (g[i] + g[i + 1]) * h;
    } else {
      drop += segment_integral(g[i], g[i + 1], h, x - a);
      break;
    }
  }
  return 1.0 - drop;
}

double sim1_truth(double x) {
  x = std::clamp(x, 0.0, kSimMaxDose);
  return x < 3.0 ? 1.0 - 0.8 * x / 3.0 : 0.2;
}

}  // namespace

double sim_truth(SimKind kind, double dose) {
  return kind == SimKind::sim1 ? sim1_truth(dose) : sim2_truth(dose);
}

Dataset generate_sim(SimKind kind, std::size_t n, double noise_sd, std::uint64_t seed) {
  if (n < 10) throw InvalidArgument("simulation needs n >= 10");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
    throw InvalidArgument("noise sd must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dose_dist(0.0, kSimMaxDose);
  std::normal_distribution<double> noise(0.0, 1.0);

  const std::size_t controls = (n + 9) / 10;
  Dataset data;
  data.units = "dose";
  data.observations.reserve(n + controls);
  auto add = [&](double dose) {
    double y = sim_truth(kind, dose);
    if (noise_sd > 0.0) y = std::max(kSimResponseFloor, y + noise_sd * noise(rng));
    data.observations.push_back({dose, y});
  };
  for (std::size_t i = 0; i < controls; ++i) add(0.0);
  for (std::size_t i = 0; i < n; ++i) add(dose_dist(rng));
  std::stable_sort(data.observations.begin(), data.observations.end(),
                   [](const Observation& a, const Observation& b) { return a.dose < b.dose; });
  return data;
}

}  // namespace amspline
