#pragma once

// Scenario engine: prior estimation over the grid, per-area controller
// design and closed-loop runs with posterior fusion, and the velocity curve.
// Every random draw comes from a stream derived from the master seed and a
// task name, so results do not depend on execution order.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "plk/codesign.hpp"
#include "plk/frrf.hpp"
#include "plk/fusion.hpp"
#include "plk/l1ac.hpp"
#include "plk/vehicle.hpp"

namespace plk::harness {

enum class ArrivalMode { kPoisson, kFull };

struct EstimationConfig {
  int rows = 5;
  int cols = 5;
  int rank = 1;
  double p_eps = 10.0;
  double p_xi = 100.0;
  double p_zeta = 100.0;
  double p0 = 1000.0;
  long steps = 100;
  double c_ice = 19000.0;
  double c_dry = 84000.0;
  std::map<int, double> fixed_mu;   // areas with a time-invariant forecast
  double interarrival_mean = 20.0;  // steps between readings of one area
  std::vector<int> full_areas{1, 2};  // measured every step in full mode; empty means all
  double d_amplitude = 100.0;       // d_k = amplitude * sin(k * pi / half_period) * 1
  double d_half_period = 25.0;
  long design_step = 50;            // step whose estimates feed controller design
  long trace_burn_in = 0;           // steps excluded from the average trace
};

struct AreaRunConfig {
  std::string name;
  int area = 1;
  double c_true = 0.0;
  bool proactive = true;
  /// Design prior; when absent the estimation result at design_step is used.
  std::optional<PriorDistribution> prior;
  bool optimize = false;  // run the speed / filter-gain program
  double speed = 0.0;     // used when !optimize
  double k = 10.0;        // used when !optimize
  std::optional<Mat4> p;  // common Lyapunov matrix; searched when absent
  double measurement_variance = 1413.0;
  bool fusion = true;
};

struct ClosedLoopConfig {
  double duration = 30.0;
  double dt = 1e-4;
  Vec4 x0{0.5, 0.0, 0.05, 0.0};
  double gamma = 1e5;
  double proj_eps = 0.1;
  double record_interval = 0.01;
  double fusion_period = 0.5;
  std::vector<AreaRunConfig> runs;
};

struct SweepConfig {
  double c_min = 20000.0;
  double c_max = 80000.0;
  int n_points = 13;
  double prior_variance = 1413.0;
};

struct ScenarioConfig {
  EstimationConfig estimation;
  vehicle::VehicleParams vehicle;
  vehicle::RoadProfile road{vehicle::SinusoidalRoad{}};
  codesign::DesignConfig design;
  codesign::GainDesignOptions gains;
  std::optional<Vec4> k_m;  // shared state-feedback gain; pole placement when absent
  ClosedLoopConfig closed_loop;
  SweepConfig sweep;
};

/// Parses and validates a scenario document. Throws ConfigError with the
/// JSON pointer of the first offending value.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------- estimation

struct EstimateRow {
  long k = 0;
  int area = 0;
  double q_hat = 0.0;
  double p_q = 0.0;
  double truth = 0.0;
};

struct EstimationRun {
  ArrivalMode mode = ArrivalMode::kPoisson;
  std::vector<EstimateRow> rows;
  std::vector<double> trace_pq;     // per step, sum over areas of P^q
  std::vector<double> error_norm;   // per step, |q_hat - q| over the grid
  double average_trace = 0.0;
  double mean_error_norm = 0.0;
  long uncompensated_steps = 0;
  std::map<int, PriorDistribution> design_priors;  // per area at design_step
  std::map<int, double> design_truth;
};

/// Simulates the truth field and runs the filter under one arrival mode.
/// Truth, noise and arrivals come from separate streams so both modes see
/// the same field and readings.
EstimationRun run_estimation(const EstimationConfig& cfg, ArrivalMode mode, std::uint64_t seed);

struct PriorEstimation {
  EstimationRun sparse;
  EstimationRun full;
  double trace_ratio = 0.0;  // full / sparse average trace
};

PriorEstimation run_prior_estimation(const EstimationConfig& cfg, std::uint64_t seed);

// -------------------------------------------------------------- closed loop

struct AreaDesign {
  std::string name;
  PriorDistribution prior;
  codesign::DesignResult design;
  bool optimized = false;
  std::optional<codesign::DesignResult> optimizer;  // diagnostic run, when feasible
  std::string optimizer_message;
};

/// Gain, Lyapunov matrix, speed and filter gain for one run.
AreaDesign design_area(const ScenarioConfig& cfg, const AreaRunConfig& run, const PriorDistribution& prior,
                       bool run_optimizer);

struct PosteriorRow {
  double t = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double k = 0.0;
};

struct AreaRunResult {
  AreaDesign design;
  bool diverged = false;
  std::string divergence_message;
  bool unrecoverable_update = false;
  l1ac::ClosedLoopResult loop;
  std::vector<PosteriorRow> posterior;
  double max_abs_x1_after_start = 0.0;
};

AreaRunResult run_area(const ScenarioConfig& cfg, const AreaRunConfig& run, const PriorDistribution& prior,
                       std::uint64_t seed);

// -------------------------------------------------------------- velocity curve

struct CurvePoint {
  double c_hat = 0.0;
  bool feasible = false;
  double v_star = 0.0;
  double k_star = 0.0;
  double g_norm = 0.0;
  std::string message;
};

std::vector<CurvePoint> run_velocity_curve(const ScenarioConfig& cfg);

// -------------------------------------------------------------- CLI plumbing

enum class Verb { kEstimate, kDesign, kSimulate, kSweep, kAll };

/// Runs a verb and writes CSV files plus summary.json into `out`. Returns
/// the process exit code (0 ok, 3 infeasible design, 4 divergence).
int run_verb(Verb verb, const ScenarioConfig& cfg, std::uint64_t seed, const std::filesystem::path& out);

}  // namespace plk::harness
