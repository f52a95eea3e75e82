// Command line front end for Monte-Carlo campaigns.
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qadapt/errors.hpp"
#include "qadapt/harness.hpp"
#include "qadapt/scenario_io.hpp"

namespace {

using namespace qadapt;

struct Common {
  int runs = 0;
  std::uint64_t seed = 1;
  int threads = 1;
  int series_runs = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, int default_runs) {
  c.runs = default_runs;
  cmd->add_option("--runs", c.runs, "Monte-Carlo runs per technique")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "Campaign seed");
  cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--series-runs", c.series_runs, "Runs whose time series are written");
  cmd->add_option("--out", c.out, "Output directory");
}

CampaignOptions options(const Common& c, const std::string& label = "") {
  CampaignOptions o;
  o.runs = c.runs;
  o.seed = c.seed;
  o.threads = c.threads;
  o.series_runs = c.series_runs;
  o.label = label;
  return o;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_row(const CampaignResult& c, const std::vector<std::string>& metrics) {
  std::printf("%-12s", c.technique.c_str());
  for (const auto& m : metrics) std::printf(" %12.4g", c.value(m));
  std::printf(" %8d\n", c.diverged());
}

void print_header(const std::vector<std::string>& metrics) {
  std::printf("%-12s", "technique");
  for (const auto& m : metrics) std::printf(" %12s", m.c_str());
  std::printf(" %8s\n", "diverged");
}

int cmd_run(const std::string& scenario, const std::string& techniques, const Common& c) {
  const ScenarioConfig cfg = resolve_scenario(scenario);
  std::vector<Technique> list;
  for (const auto& t : split(techniques)) list.push_back(parse_technique(t));
  if (list.empty()) throw ConfigError("no technique given");

  std::shared_ptr<const Case2Truth> truth;
  if (cfg.kind == ScenarioConfig::Kind::kCase2) {
    truth = std::make_shared<const Case2Truth>(case2_truth(cfg.case2));
  }
  std::vector<CampaignResult> results;
  for (Technique t : list) results.push_back(run_campaign(cfg, t, options(c), truth));
  if (!c.out.empty()) emit_results(results, c.out);
  for (const auto& r : results) {
    for (const auto& run : r.runs) {
      if (run.diverged) {
        std::fprintf(stderr, "%s run %llu diverged: %s\n", r.technique.c_str(),
                     static_cast<unsigned long long>(run.run), run.failure.c_str());
      }
    }
    for (const auto& a : r.aggregates) {
      std::printf("%s,%s,%.10g,%.3g\n", a.technique.c_str(), a.metric.c_str(), a.value,
                  a.std_error);
    }
  }
  return 0;
}

int cmd_table2(const Common& c) {
  const ScenarioConfig cfg = builtin_scenario("case1-stochastic");
  std::vector<CampaignResult> results;
  results.push_back(run_campaign(cfg, Technique::kIdeal, options(c)));
  results.push_back(run_campaign(cfg, Technique::kCm, options(c)));
  results.push_back(run_campaign(cfg, Technique::kImm, options(c, "imm_wide")));
  ScenarioConfig narrow = cfg;
  narrow.case1.imm_q_low = 1e-2;
  narrow.case1.imm_q_high = 1.0;
  results.push_back(run_campaign(narrow, Technique::kImm, options(c, "imm_narrow")));
  results.push_back(run_campaign(cfg, Technique::kAsnc, options(c)));
  results.push_back(run_campaign(cfg, Technique::kAdmc, options(c)));

  const std::vector<std::string> metrics = {"mae_x", "mae_v", "mae_q11", "mae_q22"};
  print_header(metrics);
  const double base = results.front().mean_seconds_per_call();
  for (const auto& r : results) {
    print_row(r, metrics);
  }
  std::printf("\nruntime per filter call relative to the ideal filter (%%):\n");
  for (const auto& r : results) {
    std::printf("%-12s %8.0f\n", r.technique.c_str(),
                base > 0 ? 100.0 * r.mean_seconds_per_call() / base : 0.0);
  }
  if (!c.out.empty()) emit_results(results, c.out);
  return 0;
}

int cmd_table3(const Common& c, const std::string& base_name) {
  const std::vector<Technique> techniques = {Technique::kCm, Technique::kImm, Technique::kAsnc,
                                             Technique::kAdmc};
  const ScenarioConfig base = resolve_scenario(base_name);
  if (base.kind != ScenarioConfig::Kind::kCase2) {
    throw ConfigError("table3-properties needs a formation-flight scenario");
  }
  const std::vector<std::string> metrics = {"pos3d", "vel3d", "containment_pos",
                                            "containment_vel"};
  std::vector<CampaignResult> all;
  std::map<std::string, std::map<std::string, CampaignResult>> by;
  for (const char* name : {"case2-no-maneuver", "case2-imperfect-maneuver"}) {
    ScenarioConfig cfg = base;
    cfg.name = name;
    cfg.case2.maneuver =
        std::string(name) == "case2-no-maneuver" ? ManeuverMode::kNone : ManeuverMode::kImperfect;
    auto truth = std::make_shared<const Case2Truth>(case2_truth(cfg.case2));
    std::printf("%s\n", name);
    print_header(metrics);
    for (Technique t : techniques) {
      const std::string label = std::string(name) + ":" + technique_name(t);
      CampaignResult r = run_campaign(cfg, t, options(c, label), truth);
      r.technique = technique_name(t);
      print_row(r, metrics);
      r.technique = label;
      for (auto& a : r.aggregates) a.technique = label;
      by[name][technique_name(t)] = r;
      all.push_back(r);
    }
    std::printf("\n");
  }
  auto& nm = by["case2-no-maneuver"];
  auto& im = by["case2-imperfect-maneuver"];
  auto check = [](const char* what, bool ok) {
    std::printf("%-58s %s\n", what, ok ? "yes" : "no");
  };
  check("ASNC position 3-sigma containment >= 95%",
        nm["asnc"].value("containment_pos") >= 0.95);
  check("ADMC position 3-sigma containment >= 95%",
        nm["admc"].value("containment_pos") >= 0.95);
  check("CM containment below ASNC and ADMC",
        nm["cm"].value("containment_pos") <
            std::min(nm["asnc"].value("containment_pos"), nm["admc"].value("containment_pos")));
  check("ASNC 3D position error below CM", nm["asnc"].value("pos3d") < nm["cm"].value("pos3d"));
  check("ADMC 3D position error at most ASNC",
        nm["admc"].value("pos3d") <= nm["asnc"].value("pos3d"));
  for (const char* t : {"cm", "asnc", "admc"}) {
    std::printf("%-5s velocity error ratio imperfect/no maneuver: %.3f\n", t,
                im[t].value("vel3d") / nm[t].value("vel3d"));
  }
  if (!c.out.empty()) emit_results(all, c.out);
  return 0;
}

int cmd_sweep(const Common& c, double lo, double hi, int points) {
  if (points < 2 || !(lo > 0) || !(hi > lo)) throw ConfigError("sweep grid needs 0 < min < max and points >= 2");
  const std::vector<Technique> techniques = {Technique::kSnc, Technique::kDmc, Technique::kAsnc,
                                             Technique::kAdmc};
  std::vector<CampaignResult> all;
  std::printf("%-12s %-6s %12s %12s %12s\n", "qtilde0", "tech", "mae_x", "mae_v", "accel_mae");
  for (int i = 0; i < points; ++i) {
    const double q0 = std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * i /
                                         (points - 1));
    ScenarioConfig cfg = builtin_scenario("case1-deterministic");
    cfg.case1.qtilde0 = q0;
    for (Technique t : techniques) {
      char label[64];
      std::snprintf(label, sizeof label, "%s@%.3g", technique_name(t).c_str(), q0);
      CampaignResult r = run_campaign(cfg, t, options(c, label));
      std::printf("%-12.3g %-6s %12.5g %12.5g %12.5g\n", q0, technique_name(t).c_str(),
                  r.value("mae_x"), r.value("mae_v"), r.value("accel_mae"));
      all.push_back(std::move(r));
    }
  }
  if (!c.out.empty()) emit_results(all, c.out);
  return 0;
}

void print_error(const char* kind, const std::string& message) {
  nlohmann::json j = {{"error", kind}, {"message", message}};
  std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive process-noise estimation campaigns"};
  app.require_subcommand(1);

  Common run_c, t2_c, t3_c, sw_c;
  std::string scenario = "case1-stochastic";
  std::string techniques = "asnc";
  auto* run = app.add_subcommand("run", "Run one scenario for one or more techniques");
  run->add_option("--scenario", scenario, "Built-in scenario name or JSON file");
  run->add_option("--technique", techniques,
                  "none, ideal, snc, dmc, cm, imm, asnc, admc (comma separated)");
  add_common(run, run_c, 100);

  auto* t2 = app.add_subcommand("table2", "1D stochastic acceleration comparison");
  add_common(t2, t2_c, 1000);

  auto* t3 = app.add_subcommand("table3-properties", "Formation flight comparison");
  add_common(t3, t3_c, 200);
  std::string t3_base = "case2-no-maneuver";
  t3->add_option("--scenario", t3_base, "Formation-flight scenario used as the base");

  double lo = 1e-12, hi = 1e8;
  int points = 11;
  auto* sw = app.add_subcommand("sweep-q0", "Initial intensity sweep, deterministic 1D case");
  add_common(sw, sw_c, 100);
  sw->add_option("--min", lo, "Smallest initial intensity");
  sw->add_option("--max", hi, "Largest initial intensity");
  sw->add_option("--points", points, "Log-spaced grid points");

  auto* list = app.add_subcommand("scenarios", "Print built-in scenario names or one resolved");
  std::string show;
  list->add_option("name", show, "Scenario to print as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*run) return cmd_run(scenario, techniques, run_c);
    if (*t2) return cmd_table2(t2_c);
    if (*t3) return cmd_table3(t3_c, t3_base);
    if (*sw) return cmd_sweep(sw_c, lo, hi, points);
    if (*list) {
      if (show.empty()) {
        for (const auto& n : builtin_scenario_names()) std::printf("%s\n", n.c_str());
      } else {
        std::printf("%s\n", scenario_to_json(resolve_scenario(show)).c_str());
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    print_error("config", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
    return 1;
  }
  return 0;
}
