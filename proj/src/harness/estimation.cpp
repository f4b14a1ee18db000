#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "plk/error.hpp"
#include "plk/harness.hpp"
#include "plk/rng.hpp"

namespace plk::harness {

namespace {

struct Truth {
  MatrixXd q;    // n_areas x (steps + 1), column k
  MatrixXd mu;   // same shape
};

std::shared_ptr<frrf::SpatioTemporalModel> build_model(const EstimationConfig& cfg, const MatrixXd& mu) {
  const frrf::GridSpec grid(cfg.rows, cfg.cols);
  auto model = std::make_shared<frrf::SpatioTemporalModel>();
  model->basis = std::make_shared<frrf::StaticBasis>(frrf::build_w_wavelet_basis(grid, cfg.rank));
  model->h = MatrixXd::Identity(cfg.rank, cfg.rank);
  model->g = MatrixXd::Identity(cfg.rank, cfg.rank);
  model->p_eps = VectorXd::Constant(grid.n_areas(), cfg.p_eps);
  model->p_xi = VectorXd::Constant(grid.n_areas(), cfg.p_xi);
  model->p_zeta = cfg.p_zeta * MatrixXd::Identity(cfg.rank, cfg.rank);
  model->mu = frrf::WeatherTable(0, mu);
  model->validate();
  return model;
}

MatrixXd forecast(const EstimationConfig& cfg, std::uint64_t seed) {
  const int n = cfg.rows * cfg.cols;
  Rng rng = make_rng(seed, "forecast");
  std::uniform_real_distribution<double> unif(cfg.c_ice, cfg.c_dry);
  MatrixXd mu(n, cfg.steps + 1);
  for (long k = 0; k <= cfg.steps; ++k) {
    for (int s = 0; s < n; ++s) mu(s, k) = unif(rng);
  }
  for (const auto& [area, value] : cfg.fixed_mu) mu.row(area - 1).setConstant(value);
  return mu;
}

double unknown_input(const EstimationConfig& cfg, long k) {
  return cfg.d_amplitude * std::sin(static_cast<double>(k) * std::numbers::pi / cfg.d_half_period);
}

Truth simulate_truth(const EstimationConfig& cfg, const MatrixXd& s, const MatrixXd& mu, std::uint64_t seed) {
  const auto n = s.rows();
  const auto r = s.cols();
  Rng rng = make_rng(seed, "truth");
  std::normal_distribution<double> std_normal(0.0, 1.0);
  VectorXd eta(r);
  for (Eigen::Index i = 0; i < r; ++i) eta(i) = std::sqrt(cfg.p0) * std_normal(rng);
  Truth t{MatrixXd(n, cfg.steps + 1), mu};
  for (long k = 0; k <= cfg.steps; ++k) {
    if (k > 0) {
      const double d = unknown_input(cfg, k - 1);
      for (Eigen::Index i = 0; i < r; ++i) eta(i) += d + std::sqrt(cfg.p_zeta) * std_normal(rng);
    }
    const VectorXd field = s * eta;
    for (Eigen::Index a = 0; a < n; ++a) {
      t.q(a, k) = mu(a, k) + field(a) + std::sqrt(cfg.p_xi) * std_normal(rng);
    }
  }
  return t;
}

}  // namespace

EstimationRun run_estimation(const EstimationConfig& cfg, ArrivalMode mode, std::uint64_t seed) {
  const MatrixXd mu = forecast(cfg, seed);
  auto model = build_model(cfg, mu);
  const MatrixXd& s = model->basis->basis(0);
  const Truth truth = simulate_truth(cfg, s, mu, seed);
  const int n = model->n_areas();

  std::vector<int> all_areas(static_cast<std::size_t>(n));
  for (int a = 1; a <= n; ++a) all_areas[static_cast<std::size_t>(a - 1)] = a;
  std::vector<bool> always(static_cast<std::size_t>(n), cfg.full_areas.empty());
  for (int a : cfg.full_areas) always[static_cast<std::size_t>(a - 1)] = true;

  frrf::FilterState init{0, VectorXd::Zero(cfg.rank), cfg.p0 * MatrixXd::Identity(cfg.rank, cfg.rank)};
  frrf::FixedRankResilientFilter filter(model, init);
  Rng arrivals = make_rng(seed, "arrival");
  std::poisson_distribution<int> poisson(1.0 / cfg.interarrival_mean);
  std::normal_distribution<double> std_normal(0.0, 1.0);

  EstimationRun run;
  run.mode = mode;
  run.rows.reserve(static_cast<std::size_t>(cfg.steps * n));
  for (long k = 1; k <= cfg.steps; ++k) {
    // One primary noise per area, shared by both modes; extra readings draw after.
    Rng noise = make_rng(seed, "noise", static_cast<std::uint64_t>(k));
    VectorXd primary(n);
    for (int a = 0; a < n; ++a) primary(a) = std_normal(noise);

    frrf::MeasurementBatch batch;
    batch.k = k;
    for (int a = 1; a <= n; ++a) {
      int count = poisson(arrivals);
      if (mode == ArrivalMode::kFull && always[static_cast<std::size_t>(a - 1)]) count = std::max(count, 1);
      for (int j = 0; j < count; ++j) {
        const double e = j == 0 ? primary(a - 1) : std_normal(noise);
        batch.entries.push_back({a, truth.q(a - 1, k) + std::sqrt(cfg.p_eps) * e, std::nullopt});
      }
    }
    std::vector<frrf::QueryEstimate> est;
    try {
      est = filter.step(batch, all_areas);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "estimation step " << k << ": " << e.what();
      throw Divergence(os.str());
    }
    if (!filter.last_prediction().rank_ok) ++run.uncompensated_steps;

    double trace = 0.0;
    double err2 = 0.0;
    for (const auto& q : est) {
      const double tr = truth.q(q.area - 1, k);
      run.rows.push_back({k, q.area, q.q_hat, q.p_q, tr});
      trace += q.p_q;
      err2 += (q.q_hat - tr) * (q.q_hat - tr);
      if (k == cfg.design_step) {
        run.design_priors[q.area] = {q.q_hat, q.p_q};
        run.design_truth[q.area] = tr;
      }
    }
    run.trace_pq.push_back(trace);
    run.error_norm.push_back(std::sqrt(err2));
  }
  double tr_sum = 0.0;
  long tr_n = 0;
  for (long k = cfg.trace_burn_in; k < cfg.steps; ++k) {
    tr_sum += run.trace_pq[static_cast<std::size_t>(k)];
    ++tr_n;
  }
  run.average_trace = tr_n > 0 ? tr_sum / static_cast<double>(tr_n) : 0.0;
  double e_sum = 0.0;
  for (double e : run.error_norm) e_sum += e;
  run.mean_error_norm = run.error_norm.empty() ? 0.0 : e_sum / static_cast<double>(run.error_norm.size());
  return run;
}

PriorEstimation run_prior_estimation(const EstimationConfig& cfg, std::uint64_t seed) {
  PriorEstimation out;
  out.sparse = run_estimation(cfg, ArrivalMode::kPoisson, seed);
  out.full = run_estimation(cfg, ArrivalMode::kFull, seed);
  out.trace_ratio = out.sparse.average_trace > 0.0 ? out.full.average_trace / out.sparse.average_trace : 0.0;
  return out;
}

}  // namespace plk::harness
