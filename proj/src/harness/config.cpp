#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "plk/error.hpp"
#include "plk/harness.hpp"

namespace plk::harness {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path, what); }

/// Object view that records which keys were read so leftovers can be
/// reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "/" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(at(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(at(key), "expected a finite number");
    return x;
  }
  long integer(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(at(key), "expected an integer");
    return v.get<long>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(at(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::size_t n) {
    const json& v = raw(key);
    if (!v.is_array() || v.size() != n) fail(at(key), "expected an array of " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        fail(at(key) + "/" + std::to_string(i), "expected a finite number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) fail(at(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) fail(path, what);
}

Vec4 vec4(const std::vector<double>& v) { return {v[0], v[1], v[2], v[3]}; }

EstimationConfig parse_estimation(const json& j, const std::string& path) {
  Section s(j, path);
  EstimationConfig c;
  c.rows = static_cast<int>(s.integer("rows", c.rows));
  require(c.rows >= 1 && c.rows <= 64, s.at("rows"), "must be in [1, 64]");
  c.cols = static_cast<int>(s.integer("cols", c.cols));
  require(c.cols >= 1 && c.cols <= 64, s.at("cols"), "must be in [1, 64]");
  const int n = c.rows * c.cols;
  c.rank = static_cast<int>(s.integer("rank", c.rank));
  require(c.rank >= 1 && c.rank <= n, s.at("rank"), "must be in [1, rows * cols]");
  c.p_eps = s.number("p_eps", c.p_eps);
  require(c.p_eps >= 0.0, s.at("p_eps"), "must be non-negative");
  c.p_xi = s.number("p_xi", c.p_xi);
  require(c.p_xi >= 0.0, s.at("p_xi"), "must be non-negative");
  c.p_zeta = s.number("p_zeta", c.p_zeta);
  require(c.p_zeta >= 0.0, s.at("p_zeta"), "must be non-negative");
  c.p0 = s.number("p0", c.p0);
  require(c.p0 >= 0.0, s.at("p0"), "must be non-negative");
  c.steps = s.integer("steps", c.steps);
  require(c.steps >= 1 && c.steps <= 1000000, s.at("steps"), "must be in [1, 1e6]");
  c.c_ice = s.number("c_ice", c.c_ice);
  c.c_dry = s.number("c_dry", c.c_dry);
  require(c.c_ice > 0.0, s.at("c_ice"), "must be positive");
  require(c.c_dry >= c.c_ice, s.at("c_dry"), "must be at least c_ice");
  if (s.has("fixed_mu")) {
    const json& fm = s.raw("fixed_mu");
    require(fm.is_object(), s.at("fixed_mu"), "expected an object of area -> stiffness");
    for (const auto& [key, val] : fm.items()) {
      const std::string p = s.at("fixed_mu") + "/" + key;
      int area = 0;
      try {
        std::size_t used = 0;
        area = std::stoi(key, &used);
        if (used != key.size()) area = 0;
      } catch (const std::exception&) {
        area = 0;
      }
      require(area >= 1 && area <= n, p, "area does not exist on the grid");
      require(val.is_number() && val.get<double>() > 0.0, p, "stiffness must be a positive number");
      c.fixed_mu[area] = val.get<double>();
    }
  }
  c.interarrival_mean = s.number("interarrival_mean", c.interarrival_mean);
  require(c.interarrival_mean > 0.0, s.at("interarrival_mean"), "must be positive");
  if (s.has("full_areas")) {
    const json& fa = s.raw("full_areas");
    require(fa.is_array(), s.at("full_areas"), "expected an array of areas");
    c.full_areas.clear();
    for (std::size_t i = 0; i < fa.size(); ++i) {
      const std::string p = s.at("full_areas") + "/" + std::to_string(i);
      require(fa[i].is_number_integer(), p, "expected an area index");
      const int a = fa[i].get<int>();
      require(a >= 1 && a <= n, p, "area does not exist on the grid");
      c.full_areas.push_back(a);
    }
  }
  c.d_amplitude = s.number("d_amplitude", c.d_amplitude);
  c.d_half_period = s.number("d_half_period", c.d_half_period);
  require(c.d_half_period > 0.0, s.at("d_half_period"), "must be positive");
  c.design_step = s.integer("design_step", c.design_step);
  require(c.design_step >= 1 && c.design_step <= c.steps, s.at("design_step"), "must be in [1, steps]");
  c.trace_burn_in = s.integer("trace_burn_in", c.trace_burn_in);
  require(c.trace_burn_in >= 0 && c.trace_burn_in < c.steps, s.at("trace_burn_in"), "must be in [0, steps)");
  s.finish();
  return c;
}

vehicle::VehicleParams parse_vehicle(const json& j, const std::string& path) {
  Section s(j, path);
  vehicle::VehicleParams v;
  v.mass = s.number("mass", v.mass);
  require(v.mass > 0.0, s.at("mass"), "must be positive");
  v.yaw_inertia = s.number("yaw_inertia", v.yaw_inertia);
  require(v.yaw_inertia > 0.0, s.at("yaw_inertia"), "must be positive");
  v.l_front = s.number("l_front", v.l_front);
  require(v.l_front > 0.0, s.at("l_front"), "must be positive");
  v.l_rear = s.number("l_rear", v.l_rear);
  require(v.l_rear > 0.0, s.at("l_rear"), "must be positive");
  s.finish();
  require(v.l_rear >= v.l_front, s.at("l_rear"), "design precondition violated: l_rear must be at least l_front");
  require(v.yaw_inertia * v.l_rear / v.l_front >= v.mass, s.at("yaw_inertia"),
          "design precondition violated: I_z l_r / l_f must be at least the mass");
  return v;
}

vehicle::RoadProfile parse_road(const json& j, const std::string& path) {
  Section s(j, path);
  const std::string type = s.string("type", "sinusoidal");
  vehicle::RoadProfile out;
  if (type == "sinusoidal") {
    vehicle::SinusoidalRoad r;
    r.amplitude = s.number("amplitude", r.amplitude);
    r.period = s.number("period", r.period);
    require(r.period > 0.0, s.at("period"), "must be positive");
    r.offset = s.number("offset", r.offset);
    require(r.offset - std::abs(r.amplitude) > 0.0, s.at("offset"), "radius must stay positive: offset > |amplitude|");
    out = vehicle::RoadProfile(r);
  } else if (type == "constant") {
    vehicle::ConstantRoad r;
    r.radius = s.number("radius", 100.0);
    require(r.radius > 0.0, s.at("radius"), "must be positive");
    out = vehicle::RoadProfile(r);
  } else if (type == "straight") {
    out = vehicle::RoadProfile(vehicle::ConstantRoad{});
  } else {
    fail(s.at("type"), "expected sinusoidal, constant or straight");
  }
  s.finish();
  return out;
}

codesign::DesignConfig parse_design(const json& j, const std::string& path) {
  Section s(j, path);
  codesign::DesignConfig d;
  d.lambda_gp = s.number("lambda_gp", d.lambda_gp);
  require(d.lambda_gp > 0.0, s.at("lambda_gp"), "must be positive");
  d.k_bar = s.number("k_bar", d.k_bar);
  require(d.k_bar > 0.0, s.at("k_bar"), "must be positive");
  d.v_min = s.number("v_min", d.v_min);
  require(d.v_min > 0.0, s.at("v_min"), "must be positive");
  d.v_max = s.number("v_max", d.v_max);
  require(d.v_max > d.v_min, s.at("v_max"), "must exceed v_min");
  d.v_resolution = s.number("v_resolution", d.v_resolution);
  require(d.v_resolution > 0.0, s.at("v_resolution"), "must be positive");
  d.omega_grid = static_cast<int>(s.integer("omega_grid", d.omega_grid));
  require(d.omega_grid >= 2 && d.omega_grid <= 100, s.at("omega_grid"), "must be in [2, 100]");
  d.ag_grid = static_cast<int>(s.integer("ag_grid", d.ag_grid));
  require(d.ag_grid >= 2 && d.ag_grid <= 20, s.at("ag_grid"), "must be in [2, 20]");
  d.k_candidates = static_cast<int>(s.integer("k_candidates", d.k_candidates));
  require(d.k_candidates >= 1 && d.k_candidates <= 1000, s.at("k_candidates"), "must be in [1, 1000]");
  d.norm.dt = s.number("norm_dt", d.norm.dt);
  require(d.norm.dt > 0.0, s.at("norm_dt"), "must be positive");
  d.norm.horizon_factor = s.number("norm_horizon_factor", d.norm.horizon_factor);
  require(d.norm.horizon_factor > 0.0, s.at("norm_horizon_factor"), "must be positive");
  s.finish();
  return d;
}

codesign::GainDesignOptions parse_gains(const json& j, const std::string& path) {
  Section s(j, path);
  codesign::GainDesignOptions g;
  if (s.has("poles")) {
    const auto p = s.numbers("poles", 4);
    for (std::size_t i = 0; i < 4; ++i) {
      require(p[i] < 0.0, s.at("poles") + "/" + std::to_string(i), "pole must be negative");
      g.poles[i] = p[i];
    }
  }
  g.max_rounds = static_cast<int>(s.integer("max_rounds", g.max_rounds));
  require(g.max_rounds >= 1, s.at("max_rounds"), "must be at least 1");
  s.finish();
  return g;
}

Mat4 parse_matrix(Section& s, const std::string& key) {
  const auto v = s.numbers(key, 16);
  Mat4 p;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) p(r, c) = v[static_cast<std::size_t>(4 * r + c)];
  }
  require((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, p.cwiseAbs().maxCoeff()), s.at(key),
          "matrix must be symmetric");
  require(linalg::min_eigenvalue_sym(p) > 0.0, s.at(key), "matrix must be positive definite");
  return p;
}

PriorDistribution parse_prior(const json& j, const std::string& path) {
  Section s(j, path);
  require(s.has("mean"), s.at("mean"), "required");
  require(s.has("variance"), s.at("variance"), "required");
  PriorDistribution p{s.number("mean", 0.0), s.number("variance", 0.0)};
  require(p.variance >= 0.0, s.at("variance"), "must be non-negative");
  require(p.lower() > 0.0, s.at("mean"), "95% interval must stay positive");
  s.finish();
  return p;
}

AreaRunConfig parse_run(const json& j, const std::string& path, int n_areas) {
  static const std::regex kName("[A-Za-z0-9_-]{1,64}");
  Section s(j, path);
  AreaRunConfig r;
  require(s.has("name"), s.at("name"), "required");
  r.name = s.string("name", "");
  require(std::regex_match(r.name, kName), s.at("name"), "use 1-64 letters, digits, '_' or '-'");
  r.area = static_cast<int>(s.integer("area", r.area));
  require(r.area >= 1 && r.area <= n_areas, s.at("area"), "area does not exist on the grid");
  require(s.has("c_true"), s.at("c_true"), "required");
  r.c_true = s.number("c_true", 0.0);
  require(r.c_true > 0.0, s.at("c_true"), "must be positive");
  r.proactive = s.boolean("proactive", r.proactive);
  if (s.has("prior")) r.prior = parse_prior(s.raw("prior"), s.at("prior"));
  require(r.proactive || r.prior.has_value(), s.at("prior"), "a non-proactive run needs an explicit design prior");
  r.optimize = s.boolean("optimize", r.optimize);
  r.speed = s.number("speed", r.speed);
  r.k = s.number("k", r.k);
  if (!r.optimize) {
    require(r.speed > 0.0, s.at("speed"), "must be positive when optimize is false");
    require(r.k > 0.0, s.at("k"), "must be positive");
  }
  if (s.has("p")) r.p = parse_matrix(s, "p");
  r.measurement_variance = s.number("measurement_variance", r.measurement_variance);
  require(r.measurement_variance > 0.0, s.at("measurement_variance"), "must be positive");
  r.fusion = s.boolean("fusion", r.fusion);
  s.finish();
  return r;
}

ClosedLoopConfig parse_closed_loop(const json& j, const std::string& path, int n_areas) {
  Section s(j, path);
  ClosedLoopConfig c;
  c.duration = s.number("duration", c.duration);
  require(c.duration > 0.0 && c.duration <= 3600.0, s.at("duration"), "must be in (0, 3600]");
  c.dt = s.number("dt", c.dt);
  require(c.dt > 0.0 && c.dt <= c.duration, s.at("dt"), "must be in (0, duration]");
  require(c.duration / c.dt <= 1e8, s.at("dt"), "too many integration steps");
  if (s.has("x0")) c.x0 = vec4(s.numbers("x0", 4));
  c.gamma = s.number("gamma", c.gamma);
  require(c.gamma > 0.0, s.at("gamma"), "must be positive");
  c.proj_eps = s.number("proj_eps", c.proj_eps);
  require(c.proj_eps > 0.0, s.at("proj_eps"), "must be positive");
  c.record_interval = s.number("record_interval", c.record_interval);
  require(c.record_interval >= c.dt, s.at("record_interval"), "must be at least dt");
  c.fusion_period = s.number("fusion_period", c.fusion_period);
  require(c.fusion_period >= 0.0, s.at("fusion_period"), "must be non-negative");
  if (s.has("runs")) {
    const json& runs = s.raw("runs");
    require(runs.is_array(), s.at("runs"), "expected an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const std::string p = s.at("runs") + "/" + std::to_string(i);
      auto run = parse_run(runs[i], p, n_areas);
      require(names.insert(run.name).second, p + "/name", "duplicate run name");
      c.runs.push_back(std::move(run));
    }
  }
  s.finish();
  return c;
}

SweepConfig parse_sweep(const json& j, const std::string& path) {
  Section s(j, path);
  SweepConfig c;
  c.c_min = s.number("c_min", c.c_min);
  require(c.c_min > 0.0, s.at("c_min"), "must be positive");
  c.c_max = s.number("c_max", c.c_max);
  require(c.c_max >= c.c_min, s.at("c_max"), "must be at least c_min");
  c.n_points = static_cast<int>(s.integer("n_points", c.n_points));
  require(c.n_points >= 1 && c.n_points <= 1000, s.at("n_points"), "must be in [1, 1000]");
  require(c.n_points == 1 || c.c_max > c.c_min, s.at("n_points"), "several points need c_max > c_min");
  c.prior_variance = s.number("prior_variance", c.prior_variance);
  require(c.prior_variance >= 0.0, s.at("prior_variance"), "must be non-negative");
  require(c.c_min - 1.96 * std::sqrt(c.prior_variance) > 0.0, s.at("prior_variance"),
          "95% interval at c_min must stay positive");
  s.finish();
  return c;
}

// A supplied P must certify the run's nominal closed loop at its speed.
void check_run_lyapunov(const ScenarioConfig& cfg, const AreaRunConfig& run, const std::string& path) {
  if (!run.p || !cfg.k_m || run.optimize || !run.prior) return;
  const auto m = vehicle::error_matrices(run.speed, run.prior->mean, run.prior->mean, cfg.vehicle);
  const Mat4 a_m = m.a - m.b * cfg.k_m->transpose();
  const double worst = linalg::max_eigenvalue_sym(a_m.transpose() * *run.p + *run.p * a_m);
  if (!(worst < 0.0)) {
    std::ostringstream os;
    os << "A_m^T P + P A_m is not negative definite at speed " << run.speed << " (largest eigenvalue " << worst
       << ")";
    fail(path + "/p", os.str());
  }
}

}  // namespace

ScenarioConfig parse_config(const json& doc) {
  Section s(doc, "");
  ScenarioConfig c;
  if (s.has("estimation")) c.estimation = parse_estimation(s.raw("estimation"), "/estimation");
  if (s.has("vehicle")) c.vehicle = parse_vehicle(s.raw("vehicle"), "/vehicle");
  if (s.has("road")) c.road = parse_road(s.raw("road"), "/road");
  if (s.has("design")) c.design = parse_design(s.raw("design"), "/design");
  if (s.has("gains")) c.gains = parse_gains(s.raw("gains"), "/gains");
  if (s.has("k_m")) c.k_m = vec4(s.numbers("k_m", 4));
  const int n_areas = c.estimation.rows * c.estimation.cols;
  if (s.has("closed_loop")) c.closed_loop = parse_closed_loop(s.raw("closed_loop"), "/closed_loop", n_areas);
  if (s.has("sweep")) c.sweep = parse_sweep(s.raw("sweep"), "/sweep");
  s.finish();
  for (std::size_t i = 0; i < c.closed_loop.runs.size(); ++i) {
    const auto& run = c.closed_loop.runs[i];
    const std::string p = "/closed_loop/runs/" + std::to_string(i);
    if (!run.optimize) {
      require(run.speed >= c.design.v_min && run.speed <= c.design.v_max, p + "/speed",
              "must lie in [design.v_min, design.v_max]");
    }
    check_run_lyapunov(c, run, p);
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace plk::harness
