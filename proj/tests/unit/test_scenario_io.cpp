#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "qadapt/errors.hpp"
#include "qadapt/scenario_io.hpp"

using namespace qadapt;

TEST_CASE("every built-in scenario round trips through JSON") {
  for (const auto& name : builtin_scenario_names()) {
    ScenarioConfig a = builtin_scenario(name);
    const std::string text = scenario_to_json(a);
    ScenarioConfig b = scenario_from_json(text);
    CHECK(scenario_to_json(b) == text);
    CHECK(b.name == name);
  }
  CHECK_THROWS_AS(builtin_scenario("case9"), ConfigError);
}

TEST_CASE("partial documents keep defaults") {
  ScenarioConfig c = scenario_from_json(R"({"kind": "case1", "case1": {"mode": "deterministic"}})");
  CHECK(c.kind == ScenarioConfig::Kind::kCase1);
  CHECK(c.case1.mode == Case1Mode::kDeterministic);
  CHECK(c.case1.dt == 0.1);

  ScenarioConfig d = scenario_from_json(
      R"({"kind": "case2", "case2": {"gravity": {"j3": 0.02}, "chief": {"i_deg": 90}}})");
  CHECK(d.case2.gravity.j3 == 0.02);
  CHECK(d.case2.chief.i == doctest::Approx(M_PI / 2));
  CHECK(d.case2.gravity.j2 == Case2Config{}.gravity.j2);
}

TEST_CASE("invalid documents are rejected") {
  CHECK_THROWS_AS(scenario_from_json("{"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"kind": "case3"})"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"kind": "case1", "case1": {"dtt": 1}})"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"kind": "case1", "case1": {"dt": -1}})"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"kind": "case1", "case1": {"dt": "fast"}})"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"kind": "case1", "case1": {"weighting": "x"}})"),
                  ConfigError);
  CHECK_THROWS_AS(
      scenario_from_json(R"({"kind": "case2", "case2": {"maneuver": {"mode": "sideways"}}})"),
      ConfigError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ConfigError);
}

TEST_CASE("files and names resolve") {
  auto p = std::filesystem::temp_directory_path() / "qadapt_scenario_test.json";
  std::ofstream(p) << scenario_to_json(builtin_scenario("case2-imperfect-maneuver"));
  ScenarioConfig c = resolve_scenario(p.string());
  CHECK(c.case2.maneuver == ManeuverMode::kImperfect);
  CHECK(resolve_scenario("case1-deterministic").case1.mode == Case1Mode::kDeterministic);
}
