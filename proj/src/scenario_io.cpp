#include "qadapt/scenario_io.hpp"

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qadapt/errors.hpp"

namespace qadapt {

namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

// Reads optional keys of one JSON object into fields and rejects unknown keys.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  template <class T>
  void field(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }

  void angle(const char* key, double& radians) {
    double deg = radians / kDeg;
    field(key, deg);
    radians = deg * kDeg;
  }

  template <int N>
  void vector(const char* key, Eigen::Matrix<double, N, 1>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    std::vector<double> v;
    try {
      v = j_.at(key).get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
    if (static_cast<int>(v.size()) != N) {
      throw ConfigError(name_ + "." + key + ": expected " + std::to_string(N) + " numbers");
    }
    for (int i = 0; i < N; ++i) out(i) = v[i];
  }

  void optional_number(const char* key, std::optional<double>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    double v = 0.0;
    field(key, v);
    out = v;
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& sub(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(name_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

WeightingMode parse_weighting(const std::string& s) {
  if (s == "steady_state") return WeightingMode::kSteadyState;
  if (s == "windowed") return WeightingMode::kWindowed;
  throw ConfigError("weighting must be 'steady_state' or 'windowed', got '" + s + "'");
}

std::string weighting_name(WeightingMode w) {
  return w == WeightingMode::kSteadyState ? "steady_state" : "windowed";
}

void read_case1(const json& j, Case1Config& c) {
  Section s(j, "case1");
  std::string mode = c.mode == Case1Mode::kStochastic ? "stochastic" : "deterministic";
  s.field("mode", mode);
  if (mode == "stochastic") {
    c.mode = Case1Mode::kStochastic;
  } else if (mode == "deterministic") {
    c.mode = Case1Mode::kDeterministic;
  } else {
    throw ConfigError("case1.mode must be 'stochastic' or 'deterministic'");
  }
  s.field("dt", c.dt);
  s.field("duration", c.duration);
  s.field("sigma_range", c.sigma_range);
  s.field("sigma_range_rate", c.sigma_range_rate);
  s.field("true_qtilde", c.true_qtilde);
  s.field("accel_amplitude", c.accel_amplitude);
  s.field("accel_omega", c.accel_omega);
  s.field("p0_sigma_pos", c.p0_sigma_pos);
  s.field("p0_sigma_vel", c.p0_sigma_vel);
  s.field("p0_sigma_acc", c.p0_sigma_acc);
  s.field("qtilde0", c.qtilde0);
  s.field("window", c.window);
  s.field("adaptation_delay", c.adaptation_delay);
  s.field("beta", c.beta);
  s.field("admc_alpha", c.admc_alpha);
  s.field("lower_bound", c.lower_bound);
  s.optional_number("upper_bound", c.upper_bound);
  std::string w = weighting_name(c.weighting);
  s.field("weighting", w);
  c.weighting = parse_weighting(w);
  s.field("imm_q_low", c.imm_q_low);
  s.field("imm_q_high", c.imm_q_high);
  s.field("imm_stay", c.imm_stay);
  s.field("metric_window", c.metric_window);
  s.field("outage_factor", c.outage_factor);
  s.field("divergence_factor", c.divergence_factor);
  s.field("divergence_steps", c.divergence_steps);
  s.field("gap_start", c.gap_start);
  s.field("gap_intervals", c.gap_intervals);
  s.finish();
}

json write_case1(const Case1Config& c) {
  json j;
  j["mode"] = c.mode == Case1Mode::kStochastic ? "stochastic" : "deterministic";
  j["dt"] = c.dt;
  j["duration"] = c.duration;
  j["sigma_range"] = c.sigma_range;
  j["sigma_range_rate"] = c.sigma_range_rate;
  j["true_qtilde"] = c.true_qtilde;
  j["accel_amplitude"] = c.accel_amplitude;
  j["accel_omega"] = c.accel_omega;
  j["p0_sigma_pos"] = c.p0_sigma_pos;
  j["p0_sigma_vel"] = c.p0_sigma_vel;
  j["p0_sigma_acc"] = c.p0_sigma_acc;
  j["qtilde0"] = c.qtilde0;
  j["window"] = c.window;
  j["adaptation_delay"] = c.adaptation_delay;
  j["beta"] = c.beta;
  j["admc_alpha"] = c.admc_alpha;
  j["lower_bound"] = c.lower_bound;
  j["upper_bound"] = c.upper_bound ? json(*c.upper_bound) : json(nullptr);
  j["weighting"] = weighting_name(c.weighting);
  j["imm_q_low"] = c.imm_q_low;
  j["imm_q_high"] = c.imm_q_high;
  j["imm_stay"] = c.imm_stay;
  j["metric_window"] = c.metric_window;
  j["outage_factor"] = c.outage_factor;
  j["divergence_factor"] = c.divergence_factor;
  j["divergence_steps"] = c.divergence_steps;
  j["gap_start"] = c.gap_start;
  j["gap_intervals"] = c.gap_intervals;
  return j;
}

std::string maneuver_name(ManeuverMode m) {
  switch (m) {
    case ManeuverMode::kNone: return "none";
    case ManeuverMode::kPerfect: return "perfect";
    case ManeuverMode::kImperfect: return "imperfect";
  }
  return "none";
}

void read_case2(const json& j, Case2Config& c) {
  Section s(j, "case2");
  if (s.has("gravity")) {
    Section g(s.sub("gravity"), "case2.gravity");
    g.field("mu", c.gravity.mu);
    g.field("r_ref", c.gravity.r_ref);
    g.field("j2", c.gravity.j2);
    g.field("j3", c.gravity.j3);
    g.field("c22", c.gravity.c22);
    g.field("rotation_rate", c.gravity.rotation_rate);
    g.finish();
  }
  s.vector("semi_axes", c.semi_axes);
  s.field("landmark_count", c.landmark_count);
  s.vector("sun_direction", c.sun_direction);
  s.field("sun_distance_au", c.sun_distance_au);
  s.field("srp_cr", c.srp_cr);
  s.field("area_to_mass", c.area_to_mass);
  s.field("third_body", c.third_body);
  if (s.has("chief")) {
    Section k(s.sub("chief"), "case2.chief");
    k.field("a", c.chief.a);
    k.field("e", c.chief.e);
    k.angle("i_deg", c.chief.i);
    k.angle("raan_deg", c.chief.raan);
    k.angle("argp_deg", c.chief.argp);
    k.angle("mean_anomaly_deg", c.chief.mean_anomaly);
    k.finish();
  }
  s.vector("roe_scaled", c.roe_scaled);
  s.field("interval", c.interval);
  s.field("orbits", c.orbits);
  s.field("sigma_range", c.sigma_range);
  s.field("sigma_range_rate", c.sigma_range_rate);
  s.field("sigma_pixel", c.sigma_pixel);
  if (s.has("camera")) {
    Section k(s.sub("camera"), "case2.camera");
    k.field("fx", c.camera.fx);
    k.field("fy", c.camera.fy);
    k.field("cx", c.camera.cx);
    k.field("cy", c.camera.cy);
    k.field("width", c.camera.width);
    k.field("height", c.camera.height);
    k.finish();
  }
  s.field("max_landmarks_per_camera", c.max_landmarks_per_camera);
  s.field("p0_sigma_pos", c.p0_sigma_pos);
  s.field("p0_sigma_vel", c.p0_sigma_vel);
  s.field("p0_sigma_acc", c.p0_sigma_acc);
  s.field("filter_step", c.filter_step);
  s.field("truth_tolerance", c.truth_tolerance);
  s.field("qtilde0", c.qtilde0);
  s.field("qtilde0_gm", c.qtilde0_gm);
  s.field("window", c.window);
  s.field("adaptation_delay", c.adaptation_delay);
  s.field("beta", c.beta);
  s.field("admc_alpha", c.admc_alpha);
  s.field("lower_bound", c.lower_bound);
  s.optional_number("upper_bound", c.upper_bound);
  std::string w = weighting_name(c.weighting);
  s.field("weighting", w);
  c.weighting = parse_weighting(w);
  s.field("imm_q_low", c.imm_q_low);
  s.field("imm_q_high", c.imm_q_high);
  s.field("imm_stay", c.imm_stay);
  if (s.has("maneuver")) {
    Section m(s.sub("maneuver"), "case2.maneuver");
    std::string mode = maneuver_name(c.maneuver);
    m.field("mode", mode);
    if (mode == "none") {
      c.maneuver = ManeuverMode::kNone;
    } else if (mode == "perfect") {
      c.maneuver = ManeuverMode::kPerfect;
    } else if (mode == "imperfect") {
      c.maneuver = ManeuverMode::kImperfect;
    } else {
      throw ConfigError("case2.maneuver.mode must be none, perfect or imperfect");
    }
    m.field("accel", c.maneuver_accel);
    m.field("duration", c.maneuver_duration);
    m.field("after_periods", c.maneuver_after_periods);
    m.angle("latitude_deg", c.maneuver_latitude);
    m.field("magnitude_sigma", c.maneuver_magnitude_sigma);
    m.angle("angle_sigma_deg", c.maneuver_angle_sigma);
    m.finish();
  }
  s.field("metric_orbits", c.metric_orbits);
  s.field("outage_factor", c.outage_factor);
  s.field("divergence_factor", c.divergence_factor);
  s.field("divergence_steps", c.divergence_steps);
  s.finish();
}

json write_case2(const Case2Config& c) {
  json j;
  j["gravity"] = {{"mu", c.gravity.mu},   {"r_ref", c.gravity.r_ref}, {"j2", c.gravity.j2},
                  {"j3", c.gravity.j3},   {"c22", c.gravity.c22},
                  {"rotation_rate", c.gravity.rotation_rate}};
  j["semi_axes"] = {c.semi_axes.x(), c.semi_axes.y(), c.semi_axes.z()};
  j["landmark_count"] = c.landmark_count;
  j["sun_direction"] = {c.sun_direction.x(), c.sun_direction.y(), c.sun_direction.z()};
  j["sun_distance_au"] = c.sun_distance_au;
  j["srp_cr"] = c.srp_cr;
  j["area_to_mass"] = c.area_to_mass;
  j["third_body"] = c.third_body;
  j["chief"] = {{"a", c.chief.a},
                {"e", c.chief.e},
                {"i_deg", c.chief.i / kDeg},
                {"raan_deg", c.chief.raan / kDeg},
                {"argp_deg", c.chief.argp / kDeg},
                {"mean_anomaly_deg", c.chief.mean_anomaly / kDeg}};
  j["roe_scaled"] = std::vector<double>(c.roe_scaled.data(), c.roe_scaled.data() + 6);
  j["interval"] = c.interval;
  j["orbits"] = c.orbits;
  j["sigma_range"] = c.sigma_range;
  j["sigma_range_rate"] = c.sigma_range_rate;
  j["sigma_pixel"] = c.sigma_pixel;
  j["camera"] = {{"fx", c.camera.fx}, {"fy", c.camera.fy},       {"cx", c.camera.cx},
                 {"cy", c.camera.cy}, {"width", c.camera.width}, {"height", c.camera.height}};
  j["max_landmarks_per_camera"] = c.max_landmarks_per_camera;
  j["p0_sigma_pos"] = c.p0_sigma_pos;
  j["p0_sigma_vel"] = c.p0_sigma_vel;
  j["p0_sigma_acc"] = c.p0_sigma_acc;
  j["filter_step"] = c.filter_step;
  j["truth_tolerance"] = c.truth_tolerance;
  j["qtilde0"] = c.qtilde0;
  j["qtilde0_gm"] = c.qtilde0_gm;
  j["window"] = c.window;
  j["adaptation_delay"] = c.adaptation_delay;
  j["beta"] = c.beta;
  j["admc_alpha"] = c.admc_alpha;
  j["lower_bound"] = c.lower_bound;
  j["upper_bound"] = c.upper_bound ? json(*c.upper_bound) : json(nullptr);
  j["weighting"] = weighting_name(c.weighting);
  j["imm_q_low"] = c.imm_q_low;
  j["imm_q_high"] = c.imm_q_high;
  j["imm_stay"] = c.imm_stay;
  j["maneuver"] = {{"mode", maneuver_name(c.maneuver)},
                   {"accel", c.maneuver_accel},
                   {"duration", c.maneuver_duration},
                   {"after_periods", c.maneuver_after_periods},
                   {"latitude_deg", c.maneuver_latitude / kDeg},
                   {"magnitude_sigma", c.maneuver_magnitude_sigma},
                   {"angle_sigma_deg", c.maneuver_angle_sigma / kDeg}};
  j["metric_orbits"] = c.metric_orbits;
  j["outage_factor"] = c.outage_factor;
  j["divergence_factor"] = c.divergence_factor;
  j["divergence_steps"] = c.divergence_steps;
  return j;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
  return {"case1-stochastic", "case1-deterministic", "case2-no-maneuver",
          "case2-perfect-maneuver", "case2-imperfect-maneuver"};
}

ScenarioConfig builtin_scenario(const std::string& name) {
  ScenarioConfig s;
  s.name = name;
  if (name == "case1-stochastic") {
    s.kind = ScenarioConfig::Kind::kCase1;
    s.case1.mode = Case1Mode::kStochastic;
  } else if (name == "case1-deterministic") {
    s.kind = ScenarioConfig::Kind::kCase1;
    s.case1.mode = Case1Mode::kDeterministic;
  } else if (name == "case2-no-maneuver") {
    s.kind = ScenarioConfig::Kind::kCase2;
  } else if (name == "case2-perfect-maneuver") {
    s.kind = ScenarioConfig::Kind::kCase2;
    s.case2.maneuver = ManeuverMode::kPerfect;
  } else if (name == "case2-imperfect-maneuver") {
    s.kind = ScenarioConfig::Kind::kCase2;
    s.case2.maneuver = ManeuverMode::kImperfect;
  } else {
    throw ConfigError("unknown built-in scenario '" + name + "'");
  }
  return s;
}

ScenarioConfig scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  Section top(j, "scenario");
  std::string kind = "case1";
  top.field("kind", kind);
  ScenarioConfig s;
  if (kind == "case1") {
    s.kind = ScenarioConfig::Kind::kCase1;
  } else if (kind == "case2") {
    s.kind = ScenarioConfig::Kind::kCase2;
  } else {
    throw ConfigError("scenario.kind must be 'case1' or 'case2'");
  }
  s.name = kind;
  top.field("name", s.name);
  if (top.has("case1")) read_case1(top.sub("case1"), s.case1);
  if (top.has("case2")) read_case2(top.sub("case2"), s.case2);
  top.finish();
  s.validate();
  return s;
}

ScenarioConfig load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open scenario file '" + file.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

std::string scenario_to_json(const ScenarioConfig& config, int indent) {
  json j;
  j["name"] = config.name;
  j["kind"] = config.kind == ScenarioConfig::Kind::kCase1 ? "case1" : "case2";
  if (config.kind == ScenarioConfig::Kind::kCase1) {
    j["case1"] = write_case1(config.case1);
  } else {
    j["case2"] = write_case2(config.case2);
  }
  return j.dump(indent);
}

ScenarioConfig resolve_scenario(const std::string& name_or_path) {
  for (const auto& n : builtin_scenario_names()) {
    if (n == name_or_path) return builtin_scenario(n);
  }
  return load_scenario(name_or_path);
}

}  // namespace qadapt
