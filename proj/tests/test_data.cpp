#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "amspline/data.hpp"
#include "amspline/error.hpp"
#include "doctest.h"

using namespace amspline;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

double control_mean(const Dataset& d) {
  double s = 0.0;
  int n = 0;
  for (const auto& o : d.observations)
    if (o.dose == 0.0) {
      s += o.response;
      ++n;
    }
  return s / n;
}

}  // namespace

TEST_CASE("parse a small file") {
  const auto d = parse("dose,response\n0,1.0\n1,0.5");
  REQUIRE(d.size() == 2);
  CHECK(d.observations[0].dose == 0.0);
  CHECK(d.observations[0].response == 1.0);
  CHECK(d.observations[1].dose == 1.0);
  CHECK(d.observations[1].response == 0.5);
  CHECK_FALSE(d.normalized);
}

TEST_CASE("parse keeps row order and skips blank lines") {
  const auto d = parse("dose,response\r\n\n2,0.3\r\n  \n0,1\n\"1\",0.6\n");
  REQUIRE(d.size() == 3);
  CHECK(d.observations[0].dose == 2.0);
  CHECK(d.observations[1].dose == 0.0);
  CHECK(d.observations[2].dose == 1.0);
  CHECK(d.distinct_doses() == 3);
  CHECK(d.max_dose() == 2.0);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK(parse_error_line("dose,response\n-1,0.5") == 2);
  CHECK(parse_error_line("dose,response\n0,1\n\n1,abc") == 4);
  CHECK(parse_error_line("dose,response\n0,1,2") == 2);
  CHECK(parse_error_line("dose,response\n0") == 2);
  CHECK(parse_error_line("x,y\n0,1") == 1);
  CHECK(parse_error_line("dose,response\n\"0,1") == 2);
  CHECK(parse_error_line("dose,response\nnan,1") == 2);
}

TEST_CASE("header-only and empty files") {
  CHECK_THROWS_AS(parse("dose,response\n"), EmptyDataset);
  CHECK_THROWS_AS(parse(""), EmptyDataset);
  CHECK_THROWS_AS(load_csv("/nonexistent/data.csv"), DataError);
}

TEST_CASE("csv round trip through a file") {
  const auto d = generate_sim(SimKind::sim2, 20, 0.05, 3);
  const auto path = std::filesystem::temp_directory_path() / "amspline_test_data.csv";
  {
    std::ofstream out(path);
    write_csv(d, out);
  }
  const auto back = load_csv(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.observations[i].dose == d.observations[i].dose);
    CHECK(back.observations[i].response == d.observations[i].response);
  }
  CHECK(to_csv(d).rfind("dose,response\n", 0) == 0);
}

TEST_CASE("percent_to_control examples") {
  Dataset d;
  d.observations = {{0.0, 2.0}, {0.0, 2.0}, {1.0, 1.0}};
  auto n = percent_to_control(d);
  CHECK(n.observations[2].response == 0.5);
  CHECK(n.normalized);

  d.observations = {{0.0, 1.0}, {0.0, 3.0}, {1.0, 1.0}};
  n = percent_to_control(d);
  CHECK(n.observations[2].response == 0.5);
  CHECK(control_mean(n) == doctest::Approx(1.0).epsilon(1e-12));

  d.observations = {{1.0, 1.0}};
  CHECK_THROWS_AS(percent_to_control(d), MissingControl);
}

TEST_CASE("normalization is idempotent and keeps doses") {
  Dataset d;
  d.observations = {{0.0, 0.7}, {0.0, 1.1}, {0.0, 0.95}, {2.5, 0.4}, {7.0, 0.1}};
  const auto once = percent_to_control(d);
  const auto twice = percent_to_control(once);
  CHECK(std::abs(control_mean(once) - 1.0) <= 1e-12);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(once.observations[i].dose == d.observations[i].dose);
    CHECK(twice.observations[i].response ==
          doctest::Approx(once.observations[i].response).epsilon(1e-12));
  }
  Dataset unit;
  unit.observations = {{0.0, 1.0}, {3.0, 0.25}};
  const auto fixed = percent_to_control(unit);
  CHECK(fixed.observations[1].response == 0.25);
}

TEST_CASE("sim1 truth") {
  CHECK(sim_truth(SimKind::sim1, 0.0) == 1.0);
  CHECK(sim_truth(SimKind::sim1, 3.0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(sim_truth(SimKind::sim1, 7.0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(sim_truth(SimKind::sim1, 1.5) == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("sim truths are monotone and sim2 is near zero late") {
  for (SimKind k : {SimKind::sim1, SimKind::sim2})
    for (double x = 0.0; x < 10.0; x += 0.01)
      CHECK(sim_truth(k, x + 0.01) <= sim_truth(k, x) + 1e-15);
  CHECK(sim_truth(SimKind::sim2, 0.0) == 1.0);
  for (double x = 7.0; x <= 10.0; x += 0.1) CHECK(sim_truth(SimKind::sim2, x) <= 0.05);
  CHECK(sim_truth(SimKind::sim2, 9.0) <= 0.05);
}

TEST_CASE("sim2 curvature changes sign at 3, 5 and 7 only") {
  const double h = 1e-3;
  auto curvature = [h](double x) {
    return sim_truth(SimKind::sim2, x - h) - 2.0 * sim_truth(SimKind::sim2, x) +
           sim_truth(SimKind::sim2, x + h);
  };
  int flips = 0;
  double prev = curvature(0.05);
  for (double x = 0.1; x < 9.95; x += 0.05) {
    const double c = curvature(x);
    if ((c > 0.0) != (prev > 0.0)) {
      ++flips;
      const bool near_node =
          std::abs(x - 3.0) < 0.1 || std::abs(x - 5.0) < 0.1 || std::abs(x - 7.0) < 0.1;
      CHECK(near_node);
    }
    prev = c;
  }
  CHECK(flips == 3);
}

TEST_CASE("generate_sim layout") {
  const auto d = generate_sim(SimKind::sim1, 140, 0.05, 1);
  CHECK(d.size() == 154);
  std::size_t controls = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& o = d.observations[i];
    CHECK(o.dose >= 0.0);
    CHECK(o.dose <= 10.0);
    CHECK(o.response >= kSimResponseFloor);
    if (i > 0) CHECK(d.observations[i - 1].dose <= o.dose);
    controls += o.dose == 0.0;
  }
  CHECK(controls == 14);
}

TEST_CASE("generate_sim is deterministic and noise-free generation is the truth") {
  const auto a = generate_sim(SimKind::sim2, 50, 0.05, 9);
  const auto b = generate_sim(SimKind::sim2, 50, 0.05, 9);
  const auto c = generate_sim(SimKind::sim2, 50, 0.05, 10);
  CHECK(to_csv(a) == to_csv(b));
  CHECK(to_csv(a) != to_csv(c));
  const auto clean = generate_sim(SimKind::sim2, 50, 0.0, 9);
  for (const auto& o : clean.observations) CHECK(o.response == sim_truth(SimKind::sim2, o.dose));
  CHECK_THROWS_AS(generate_sim(SimKind::sim1, 9, 0.05, 1), InvalidArgument);
  CHECK_THROWS_AS(generate_sim(SimKind::sim1, 20, -1.0, 1), InvalidArgument);
}

TEST_CASE("sim kind names") {
  CHECK(parse_sim_kind("sim1") == SimKind::sim1);
  CHECK(parse_sim_kind(sim_kind_name(SimKind::sim2)) == SimKind::sim2);
  CHECK_FALSE(parse_sim_kind("sim3").has_value());
}
