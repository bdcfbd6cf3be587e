#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kcfgrl/bench.hpp"
#include "kcfgrl/error.hpp"
#include "kcfgrl/rng.hpp"

using namespace kcfgrl;

TEST_CASE("unixbench_score reduces to the ratio formula for a single test") {
  CHECK(unixbench_score({{"dhrystone", 1000.0, 1000.0}}) == 100.0);
  CHECK(unixbench_score({{"dhrystone", 2000.0, 1000.0}}) == 200.0);
  CHECK(unixbench_score({{"whetstone", 3.0, 1.0}}) == 300.0);
}

TEST_CASE("unixbench_score aggregates multiple tests by geometric mean") {
  // indices 1 and 4: geometric mean 2 -> 200
  const double s = unixbench_score({{"a", 10.0, 10.0}, {"b", 40.0, 10.0}});
  CHECK(s == doctest::Approx(200.0).epsilon(1e-12));

  // three indices 2, 0.5, 3 -> cbrt(3) * 100
  const double t =
      unixbench_score({{"a", 2000.0, 1000.0}, {"b", 500.0, 1000.0}, {"c", 3000.0, 1000.0}});
  CHECK(t == doctest::Approx(std::cbrt(3.0) * 100.0).epsilon(1e-12));
}

TEST_CASE("unixbench_score rejects nonpositive scores and empty input") {
  CHECK_THROWS_AS(unixbench_score({}), Error);
  CHECK_THROWS_AS(unixbench_score({{"a", 0.0, 1.0}}), Error);
  CHECK_THROWS_AS(unixbench_score({{"a", 1.0, -2.0}}), Error);
}

TEST_CASE("unixbench_score is scale-covariant") {
  SplitMix64 rng(2718);
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<BenchEntry> entries;
    const std::size_t n = 1 + rng.next_below(6);
    for (std::size_t i = 0; i < n; ++i)
      entries.push_back(BenchEntry{"t" + std::to_string(i), 1.0 + rng.next_double() * 99.0,
                                   1.0 + rng.next_double() * 99.0});
    const double base = unixbench_score(entries);
    const double k = 0.5 + rng.next_double() * 4.0;
    for (auto& e : entries) e.measured *= k;
    const double scaled = unixbench_score(entries);
    CHECK(scaled == doctest::Approx(base * k).epsilon(1e-9));
  }
}

TEST_CASE("metrics CSV ingestion") {
  SUBCASE("happy path") {
    std::istringstream in("test,measured,reference\ndhry,2000,1000\nwhet,500,1000\n");
    const auto entries = read_metrics_csv(in);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].test == "dhry");
    CHECK(entries[0].measured == 2000.0);
    CHECK(entries[1].reference == 1000.0);
  }
  SUBCASE("bad header") {
    std::istringstream in("name,value\nx,1\n");
    CHECK_THROWS_WITH_AS(read_metrics_csv(in), doctest::Contains("header"), Error);
  }
  SUBCASE("non-numeric score") {
    std::istringstream in("test,measured,reference\ndhry,fast,1000\n");
    CHECK_THROWS_WITH_AS(read_metrics_csv(in), doctest::Contains("line 2"), Error);
  }
  SUBCASE("missing fields") {
    std::istringstream in("test,measured,reference\ndhry,1\n");
    CHECK_THROWS_AS(read_metrics_csv(in), Error);
  }
  SUBCASE("empty document") {
    std::istringstream a(""), b("test,measured,reference\n");
    CHECK_THROWS_AS(read_metrics_csv(a), Error);
    CHECK_THROWS_AS(read_metrics_csv(b), Error);
  }
}

TEST_CASE("bench report JSON carries per-test indices and the aggregate") {
  const BenchReport report = make_bench_report({{"dhry", 2000.0, 1000.0}});
  const auto j = report.to_json();
  CHECK(j["aggregate"] == 200.0);
  CHECK(j["tests"][0]["index"] == 2.0);
}

TEST_CASE("analysis_ratios computes the six ratios verbatim") {
  AnalysisInputs in;
  in.performance_improvement = 35.0;
  in.resource_utilization_used = 1.0;
  in.time_to_target = 120.0;
  in.iterations = 60.0;
  in.perf_larger_workload = 900.0;
  in.perf_smaller_workload = 300.0;
  in.valid_configurations = 781.0;
  in.total_configurations = 1000.0;
  in.performance_gain = 35.0;
  in.training_data_usage = 3000.0;
  in.resources_used = 3.0;
  in.resources_available = 4.0;

  const AnalysisRatios r = analysis_ratios(in);
  CHECK(r.performance_efficiency == 35.0);
  CHECK(r.adaptation_speed == 2.0);
  CHECK(r.scaling_factor == 3.0);
  CHECK(r.configuration_accuracy == 781.0 / 1000.0);
  CHECK(r.configuration_accuracy == doctest::Approx(0.781).epsilon(1e-12));
  CHECK(r.learning_efficiency == 35.0 / 3000.0);
  CHECK(r.resource_utilization == 0.75);

  SUBCASE("equal numerator and denominator give ratio one") {
    AnalysisInputs eq = in;
    eq.time_to_target = eq.iterations = 17.0;
    CHECK(analysis_ratios(eq).adaptation_speed == 1.0);
  }
  SUBCASE("zero denominators are rejected") {
    AnalysisInputs bad = in;
    bad.total_configurations = 0.0;
    CHECK_THROWS_WITH_AS(analysis_ratios(bad), doctest::Contains("configuration accuracy"),
                         Error);
  }
  SUBCASE("ratios are homogeneous of degree zero") {
    SplitMix64 rng(99);
    for (int iter = 0; iter < 50; ++iter) {
      const double k = 0.25 + rng.next_double() * 8.0;
      AnalysisInputs scaled = in;
      scaled.valid_configurations *= k;
      scaled.total_configurations *= k;
      scaled.performance_gain *= k;
      scaled.training_data_usage *= k;
      const AnalysisRatios rs = analysis_ratios(scaled);
      CHECK(rs.configuration_accuracy ==
            doctest::Approx(r.configuration_accuracy).epsilon(1e-12));
      CHECK(rs.learning_efficiency == doctest::Approx(r.learning_efficiency).epsilon(1e-12));
    }
  }
}
