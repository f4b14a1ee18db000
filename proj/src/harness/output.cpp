#include <fstream>
#include <future>

#include <fmt/format.h>
#include <fmt/os.h>

#include "plk/error.hpp"
#include "plk/harness.hpp"

namespace plk::harness {

namespace {

using ojson = nlohmann::ordered_json;

std::string num(double x) { return fmt::format("{:.10g}", x); }

ojson vec_json(const Vec4& v) { return ojson::array({v(0), v(1), v(2), v(3)}); }

ojson mat_json(const Mat4& m) {
  ojson a = ojson::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) a.push_back(m(r, c));
  }
  return a;
}

ojson interval_json(const Interval& i) { return ojson::array({i.lo, i.hi}); }

void write_estimates(const std::filesystem::path& file, const EstimationRun& run) {
  auto out = fmt::output_file(file.string());
  out.print("k,area,q_hat,p_q,truth,error\n");
  for (const auto& r : run.rows) {
    out.print("{},{},{},{},{},{}\n", r.k, r.area, num(r.q_hat), num(r.p_q), num(r.truth), num(r.q_hat - r.truth));
  }
}

void write_estimation_trace(const std::filesystem::path& file, const PriorEstimation& pe) {
  auto out = fmt::output_file(file.string());
  out.print("k,trace_sparse,trace_full,error_norm_sparse,error_norm_full\n");
  for (std::size_t i = 0; i < pe.sparse.trace_pq.size(); ++i) {
    out.print("{},{},{},{},{}\n", i + 1, num(pe.sparse.trace_pq[i]), num(pe.full.trace_pq[i]),
              num(pe.sparse.error_norm[i]), num(pe.full.error_norm[i]));
  }
}

void write_trace(const std::filesystem::path& file, const l1ac::ClosedLoopResult& loop) {
  auto out = fmt::output_file(file.string());
  out.print("t,x1,x1dot,x2,x2dot,u_m,u_ad,w_hat,sigma_hat,theta_hat_1,theta_hat_2,theta_hat_3,theta_hat_4,radius,k\n");
  for (const auto& r : loop.trace) {
    out.print("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", num(r.t), num(r.x(0)), num(r.x(1)), num(r.x(2)),
              num(r.x(3)), num(r.u_m), num(r.u_ad), num(r.w_hat), num(r.sigma_hat), num(r.theta_hat(0)),
              num(r.theta_hat(1)), num(r.theta_hat(2)), num(r.theta_hat(3)), num(r.radius), num(r.k));
  }
}

void write_trajectory(const std::filesystem::path& file, const l1ac::ClosedLoopResult& loop) {
  auto out = fmt::output_file(file.string());
  out.print("t,x1,x1dot,x2,x2dot,u,R\n");
  for (const auto& r : loop.trace) {
    out.print("{},{},{},{},{},{},{}\n", num(r.t), num(r.x(0)), num(r.x(1)), num(r.x(2)), num(r.x(3)),
              num(r.u_m + r.u_ad), num(r.radius));
  }
}

void write_posterior(const std::filesystem::path& file, const std::vector<PosteriorRow>& rows) {
  auto out = fmt::output_file(file.string());
  out.print("t,C_post_mean,C_post_var,k_current\n");
  for (const auto& r : rows) out.print("{},{},{},{}\n", num(r.t), num(r.mean), num(r.variance), num(r.k));
}

void write_curve(const std::filesystem::path& file, const std::vector<CurvePoint>& pts) {
  auto out = fmt::output_file(file.string());
  out.print("C_hat,V_star,k_star,g_norm,feasible\n");
  for (const auto& p : pts) {
    if (p.feasible) {
      out.print("{},{},{},{},1\n", num(p.c_hat), num(p.v_star), num(p.k_star), num(p.g_norm));
    } else {
      out.print("{},,,,0\n", num(p.c_hat));
    }
  }
}

ojson estimation_json(const PriorEstimation& pe) {
  const auto side = [](const EstimationRun& r) {
    ojson j;
    j["average_trace"] = r.average_trace;
    j["mean_error_norm"] = r.mean_error_norm;
    j["uncompensated_steps"] = r.uncompensated_steps;
    return j;
  };
  ojson j;
  j["sparse"] = side(pe.sparse);
  j["full"] = side(pe.full);
  j["trace_ratio"] = pe.trace_ratio;
  ojson priors = ojson::object();
  for (const auto& [area, p] : pe.sparse.design_priors) {
    priors[std::to_string(area)] = {{"mean", p.mean}, {"variance", p.variance},
                                    {"truth", pe.sparse.design_truth.at(area)}};
  }
  j["design_priors"] = priors;
  return j;
}

ojson design_json(const AreaDesign& a) {
  const auto& d = a.design;
  ojson j;
  j["prior"] = {{"mean", a.prior.mean}, {"variance", a.prior.variance}};
  j["c_hat"] = d.c_hat_f;
  j["k_m"] = vec_json(d.k_m);
  j["p"] = mat_json(d.p);
  j["speed"] = d.speed;
  j["k"] = d.k;
  j["g_norm"] = d.g_norm;
  j["common_lyapunov"] = {{"ok", d.lyapunov.ok},
                          {"residual_at_min", d.lyapunov.residual_at_min},
                          {"residual_at_max", d.lyapunov.residual_at_max}};
  j["ag"] = {{"ok", d.ag.ok}, {"worst_abscissa", d.ag.worst_abscissa}, {"evaluated", d.ag.evaluated}};
  ojson theta = ojson::array();
  for (const auto& t : d.bounds.theta) theta.push_back(interval_json(t));
  j["bounds"] = {{"omega", interval_json(d.bounds.omega)}, {"theta", theta}, {"delta", d.bounds.delta},
                 {"d_sigma", d.bounds.d_sigma}, {"l_norm", d.bounds.l_norm}};
  j["optimized"] = a.optimized;
  if (a.optimizer) {
    j["optimizer"] = {{"feasible", true}, {"speed", a.optimizer->speed}, {"k", a.optimizer->k},
                      {"g_norm", a.optimizer->g_norm}};
  } else {
    j["optimizer"] = {{"feasible", false}};
  }
  if (!a.optimizer_message.empty()) j["note"] = a.optimizer_message;
  return j;
}

ojson run_json(const AreaRunConfig& cfg, const AreaRunResult& r) {
  ojson j;
  j["area"] = cfg.area;
  j["proactive"] = cfg.proactive;
  j["c_true"] = cfg.c_true;
  j["design"] = design_json(r.design);
  j["diverged"] = r.diverged;
  if (r.diverged) j["divergence"] = r.divergence_message;
  const auto& m = r.loop.metrics;
  j["metrics"] = {{"max_abs_x1", m.max_abs_x1},
                  {"max_abs_x1_after_start", m.max_abs_x1_after_start},
                  {"rms_x1", m.rms_x1},
                  {"max_abs_x2", m.max_abs_x2},
                  {"rms_x2", m.rms_x2},
                  {"max_abs_u", m.max_abs_u},
                  {"steps", m.steps},
                  {"projection_violations", m.projection_violations}};
  j["unrecoverable_update"] = r.unrecoverable_update;
  if (!r.posterior.empty()) {
    const auto& last = r.posterior.back();
    j["posterior"] = {{"mean", last.mean}, {"variance", last.variance}, {"k", last.k}};
  }
  return j;
}

struct Context {
  const ScenarioConfig& cfg;
  std::uint64_t seed;
  std::filesystem::path out;
  std::optional<PriorEstimation> estimation;

  const PriorEstimation& prior_estimation() {
    if (!estimation) estimation = run_prior_estimation(cfg.estimation, seed);
    return *estimation;
  }
  PriorDistribution prior_for(const AreaRunConfig& run) {
    if (run.prior) return *run.prior;
    return prior_estimation().sparse.design_priors.at(run.area);
  }
};

}  // namespace

int run_verb(Verb verb, const ScenarioConfig& cfg, std::uint64_t seed, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  Context ctx{cfg, seed, out, std::nullopt};
  ojson summary;
  summary["seed"] = seed;
  int code = 0;
  const auto raise = [&code](int c) { code = std::max(code, c); };

  const bool all = verb == Verb::kAll;
  if (all || verb == Verb::kEstimate) {
    const auto& pe = ctx.prior_estimation();
    write_estimates(out / "prior_estimation.csv", pe.sparse);
    write_estimates(out / "prior_estimation_full.csv", pe.full);
    write_estimation_trace(out / "estimation_trace.csv", pe);
    summary["estimation"] = estimation_json(pe);
  }

  const auto& runs = cfg.closed_loop.runs;
  if (verb == Verb::kDesign) {
    ojson designs = ojson::object();
    for (const auto& run : runs) {
      try {
        designs[run.name] = design_json(design_area(cfg, run, ctx.prior_for(run), true));
      } catch (const Infeasible& e) {
        designs[run.name] = {{"infeasible", e.what()}};
        raise(3);
      }
    }
    summary["designs"] = designs;
  }

  if (all || verb == Verb::kSimulate) {
    std::vector<PriorDistribution> priors;
    for (const auto& run : runs) priors.push_back(ctx.prior_for(run));
    std::vector<std::future<AreaRunResult>> jobs;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      jobs.push_back(std::async(std::launch::async, [&, i] { return run_area(cfg, runs[i], priors[i], seed); }));
    }
    ojson results = ojson::object();
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& run = runs[i];
      try {
        const auto r = jobs[i].get();
        if (!r.diverged) {
          write_trace(out / ("closed_loop_" + run.name + ".csv"), r.loop);
          write_trajectory(out / ("trajectory_" + run.name + ".csv"), r.loop);
        }
        write_posterior(out / ("posterior_" + run.name + ".csv"), r.posterior);
        results[run.name] = run_json(run, r);
        if (r.diverged && run.proactive) raise(4);
      } catch (const Infeasible& e) {
        results[run.name] = {{"infeasible", e.what()}};
        raise(3);
      }
    }
    summary["closed_loop"] = results;
  }

  if (all || verb == Verb::kSweep) {
    const auto curve = run_velocity_curve(cfg);
    write_curve(out / "velocity_curve.csv", curve);
    ojson pts = ojson::array();
    for (const auto& p : curve) {
      ojson j{{"c_hat", p.c_hat}, {"feasible", p.feasible}};
      if (p.feasible) {
        j["v_star"] = p.v_star;
        j["k_star"] = p.k_star;
        j["g_norm"] = p.g_norm;
      } else {
        j["message"] = p.message;
      }
      pts.push_back(j);
    }
    summary["velocity_curve"] = pts;
  }

  summary["exit_code"] = code;
  std::ofstream(out / "summary.json") << summary.dump(2) << '\n';
  return code;
}

}  // namespace plk::harness
