#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>

#include "plk/error.hpp"
#include "plk/frrf.hpp"

namespace plk::frrf {

namespace {

constexpr double kMaxInnovationCondition = 1e12;

MatrixXd identity(Eigen::Index n) { return MatrixXd::Identity(n, n); }

}  // namespace

// ---------------------------------------------------------------------------
// Weather table

WeatherTable::WeatherTable(long first_k, MatrixXd values)
    : first_k_(first_k), values_(std::move(values)) {
  if (!values_.allFinite()) throw InvalidArgument("weather table has non-finite entries");
}

WeatherTable WeatherTable::constant(int n_areas, double value, long first_k, long last_k) {
  if (last_k < first_k) throw InvalidArgument("empty weather horizon");
  return WeatherTable(first_k, MatrixXd::Constant(n_areas, last_k - first_k + 1, value));
}

double WeatherTable::at(int area, long k) const {
  if (area < 1 || area > n_areas() || k < first_k_ || k > last_k()) {
    throw InvalidArgument("missing forecast for area " + std::to_string(area) + " at k=" +
                          std::to_string(k));
  }
  return values_(area - 1, k - first_k_);
}

double weather_prior(const WeatherTable& table, int area, long k) { return table.at(area, k); }

// ---------------------------------------------------------------------------
// Model and batches

void SpatioTemporalModel::validate() const {
  if (!basis) throw InvalidArgument("model has no basis");
  const int ne = n_eta();
  const int nd = n_areas();
  if (h.rows() != ne || h.cols() != ne) throw InvalidArgument("H must be n_eta x n_eta");
  if (g.rows() != ne) throw InvalidArgument("G must have n_eta rows");
  if (p_eps.size() != nd || p_xi.size() != nd) {
    throw InvalidArgument("per-area variances must have one entry per area");
  }
  if ((p_eps.array() < 0.0).any() || (p_xi.array() < 0.0).any()) {
    throw InvalidArgument("variances must be non-negative");
  }
  if (p_zeta.rows() != ne || p_zeta.cols() != ne) throw InvalidArgument("P_zeta must be n_eta x n_eta");
  if ((p_zeta - p_zeta.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, p_zeta.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("P_zeta must be symmetric");
  }
  if (ne > 0 && linalg::min_eigenvalue_sym(p_zeta) < -1e-9 * std::max(1.0, p_zeta.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("P_zeta must be positive semidefinite");
  }
  if (mu.n_areas() != nd) throw InvalidArgument("weather table must cover every area");
}

std::vector<int> MeasurementBatch::areas() const {
  std::vector<int> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.area);
  return out;
}

MatrixXd MeasurementBatch::selector(int n_areas) const {
  MatrixXd e = MatrixXd::Zero(static_cast<Eigen::Index>(entries.size()), n_areas);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].area < 1 || entries[i].area > n_areas) throw InvalidArgument("invalid area");
    e(static_cast<Eigen::Index>(i), entries[i].area - 1) = 1.0;
  }
  return e;
}

bool MeasurementBatch::has_duplicates() const {
  std::set<int> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.area).second) return true;
  }
  return false;
}

MeasurementBatch merge_duplicates(const MeasurementBatch& batch, const SpatioTemporalModel& model) {
  struct Acc {
    double precision = 0.0;
    double weighted = 0.0;
    int count = 0;
    Measurement first;
  };
  std::vector<int> order;
  std::unordered_map<int, Acc> acc;
  for (const auto& m : batch.entries) {
    if (m.area < 1 || m.area > model.n_areas()) {
      throw InvalidArgument("invalid area " + std::to_string(m.area));
    }
    if (m.variance && !(*m.variance > 0.0)) {
      throw InvalidArgument("invalid variance for area " + std::to_string(m.area));
    }
    auto [it, inserted] = acc.try_emplace(m.area);
    if (inserted) {
      order.push_back(m.area);
      it->second.first = m;
    }
    const double var = m.variance.value_or(model.p_eps(m.area - 1));
    Acc& a = it->second;
    ++a.count;
    if (var > 0.0) {
      a.precision += 1.0 / var;
      a.weighted += m.value / var;
    } else {
      a.precision = -1.0;  // marks a zero-variance reading
    }
  }
  MeasurementBatch out;
  out.k = batch.k;
  for (int area : order) {
    const Acc& a = acc.at(area);
    if (a.count == 1) {
      out.entries.push_back(a.first);
      continue;
    }
    if (!(a.precision > 0.0)) {
      throw InvalidArgument("invalid variance for repeated readings of area " + std::to_string(area));
    }
    out.entries.push_back({area, a.weighted / a.precision, 1.0 / a.precision});
  }
  return out;
}

BatchTerms batch_terms(const SpatioTemporalModel& model, const MeasurementBatch& batch) {
  const auto n = static_cast<Eigen::Index>(batch.entries.size());
  const MatrixXd& s = model.basis->basis(batch.k);
  BatchTerms t;
  t.s_k.resize(n, model.n_eta());
  t.resid.resize(n);
  t.eps_var.resize(n);
  t.noise = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Measurement& m = batch.entries[static_cast<std::size_t>(i)];
    if (!(m.area >= 1 && m.area <= model.n_areas())) {
      throw InvalidArgument("invalid area " + std::to_string(m.area));
    }
    t.s_k.row(i) = s.row(m.area - 1);
    t.resid(i) = m.value - model.mu.at(m.area, batch.k);
    t.eps_var(i) = m.variance.value_or(model.p_eps(m.area - 1));
    t.noise(i, i) = t.eps_var(i) + model.p_xi(m.area - 1);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Recursions

PredictedState predict(const FilterState& state, const SpatioTemporalModel& model,
                       const MeasurementBatch& batch) {
  if (batch.k != state.k + 1) {
    throw InvalidArgument("batch step " + std::to_string(batch.k) + " does not follow state step " +
                          std::to_string(state.k));
  }
  if (batch.has_duplicates()) throw InvalidArgument("batch has repeated areas; merge first");

  const int ne = model.n_eta();
  const int nd = model.n_d();
  const BatchTerms t = batch_terms(model, batch);
  const Eigen::Index nk = t.s_k.rows();
  const MatrixXd& h = model.h;
  const MatrixXd& g = model.g;

  PredictedState p;
  p.k = batch.k;
  p.eta_prev = state.eta_hat;
  p.p_prev = state.p_eta;
  p.m_gain = MatrixXd::Zero(nd, nk);
  p.d_hat = VectorXd::Zero(nd);

  const MatrixXd hph = h * state.p_eta * h.transpose();
  const VectorXd h_eta = h * state.eta_hat;

  if (nk > 0) {
    const MatrixXd r = t.s_k * (hph + model.p_zeta) * t.s_k.transpose() + t.noise;
    if (linalg::condition_number(r) > kMaxInnovationCondition) {
      throw IllConditioned("prediction innovation covariance R_k is singular at k=" +
                           std::to_string(batch.k));
    }
    const MatrixXd sg = t.s_k * g;
    p.rank_ok = nd > 0 && linalg::numerical_rank(sg) == nd;
    if (p.rank_ok) {
      const Eigen::LDLT<MatrixXd> r_ldlt(r);
      const MatrixXd rinv_sg = r_ldlt.solve(sg);                 // R^-1 S G
      const MatrixXd info = sg.transpose() * rinv_sg;             // G^T S^T R^-1 S G
      p.m_gain = linalg::pinv(info).pinv * rinv_sg.transpose();   // (.)^+ G^T S^T R^-1
      p.d_hat = p.m_gain * (t.resid - t.s_k * h_eta);
    }
  } else {
    p.rank_ok = nd == 0;
  }

  p.eta_pred = h_eta + g * p.d_hat;
  const MatrixXd gm = g * p.m_gain;  // n_eta x n_k
  const MatrixXd tr = identity(ne) - gm * t.s_k;
  p.p_pred = tr * hph * tr.transpose() + gm * t.noise * gm.transpose() +
             tr * model.p_zeta * tr.transpose();
  linalg::symmetrize(p.p_pred);
  linalg::require_psd(p.p_pred, "predicted covariance");
  return p;
}

Correction update(const PredictedState& pred, const SpatioTemporalModel& model,
                  const MeasurementBatch& batch) {
  if (batch.k != pred.k) throw InvalidArgument("batch does not belong to this prediction");
  const int ne = model.n_eta();
  const BatchTerms t = batch_terms(model, batch);
  const Eigen::Index nk = t.s_k.rows();

  Correction c;
  c.state.k = pred.k;
  c.k_gain = MatrixXd::Zero(ne, nk);
  if (nk == 0) {
    c.state.eta_hat = pred.eta_pred;
    c.state.p_eta = pred.p_pred;
    return c;
  }
  if (pred.m_gain.cols() != nk) throw InvalidArgument("prediction was computed for another batch");

  const MatrixXd& s = t.s_k;
  const MatrixXd cross = model.g * pred.m_gain * t.noise;  // -E[eta_pred_err v^T]
  MatrixXd r_tilde = s * pred.p_pred * s.transpose() + t.noise - s * cross -
                     cross.transpose() * s.transpose();
  linalg::symmetrize(r_tilde);

  const auto expected_rank = nk - (pred.rank_ok ? model.n_d() : 0);
  const auto rp = linalg::pinv(r_tilde);
  if (!pred.rank_ok && linalg::condition_number(r_tilde) > kMaxInnovationCondition) {
    throw IllConditioned("innovation covariance is singular at k=" + std::to_string(pred.k));
  }
  if (rp.rank < expected_rank) {
    throw IllConditioned("innovation covariance lost rank at k=" + std::to_string(pred.k));
  }

  c.k_gain = (pred.p_pred * s.transpose() - cross) * rp.pinv;
  const VectorXd innovation = t.resid - s * pred.eta_pred;
  c.state.eta_hat = pred.eta_pred + c.k_gain * innovation;

  const MatrixXd j = identity(ne) - c.k_gain * s;
  const MatrixXd jck = j * cross * c.k_gain.transpose();
  c.state.p_eta = j * pred.p_pred * j.transpose() + c.k_gain * t.noise * c.k_gain.transpose() +
                  jck + jck.transpose();
  linalg::symmetrize(c.state.p_eta);
  linalg::require_psd(c.state.p_eta, "filtered covariance");
  return c;
}

QueryEstimate query(const PredictedState& pred, const Correction& corr,
                    const SpatioTemporalModel& model, const MeasurementBatch& batch, int area) {
  if (area < 1 || area > model.n_areas()) {
    throw InvalidArgument("invalid area " + std::to_string(area));
  }
  const long k = corr.state.k;
  const MatrixXd& basis = model.basis->basis(k);
  const Eigen::RowVectorXd s_star = basis.row(area - 1);
  const double mu_star = model.mu.at(area, k);

  QueryEstimate q;
  q.area = area;

  std::vector<Eigen::Index> hits;
  for (std::size_t i = 0; i < batch.entries.size(); ++i) {
    if (batch.entries[i].area == area) hits.push_back(static_cast<Eigen::Index>(i));
  }
  if (hits.empty()) {
    q.q_hat = mu_star + s_star.dot(corr.state.eta_hat);
    q.p_q = s_star.dot(corr.state.p_eta * s_star.transpose()) + model.p_xi(area - 1);
    return q;
  }
  if (hits.size() > 1) throw InvalidArgument("batch has repeated areas; merge first");

  const BatchTerms t = batch_terms(model, batch);
  const Eigen::Index nk = t.s_k.rows();
  const Eigen::Index j = hits.front();
  const double eps_star = t.eps_var(j);

  // P^{s,s*,eps}: column of the (diagonal) measurement noise selecting s*.
  VectorXd cross_eps = VectorXd::Zero(nk);
  cross_eps(j) = eps_star;

  // R-bar for the readings of s* and the unbiased combination L 1 = 1.
  const Eigen::RowVectorXd sgm = s_star * model.g * pred.m_gain;  // 1 x n_k
  const double sps = s_star.dot(pred.p_pred * s_star.transpose());
  const double r_bar = eps_star + sps - 2.0 * sgm.dot(cross_eps);
  VectorXd ones = VectorXd::Ones(1);
  VectorXd l_gain(1);
  if (r_bar > 0.0) {
    const double w = 1.0 / r_bar;
    l_gain(0) = w / (ones.dot(ones) * w);
  } else {
    l_gain(0) = 1.0;
  }
  const double l = l_gain(0);

  const double xi_hat = l * (t.resid(j) - s_star.dot(pred.eta_pred));
  q.measured = true;
  q.l_gain = l_gain;
  q.xi_hat = xi_hat;
  q.q_hat = mu_star + s_star.dot(corr.state.eta_hat) + xi_hat;

  // q~ = -a eta~_{k|k-1} - s* K v - L eps*, a = s* K S_k.
  const Eigen::RowVectorXd sk = s_star * corr.k_gain;    // 1 x n_k
  const Eigen::RowVectorXd a = sk * t.s_k;               // 1 x n_eta
  const Eigen::RowVectorXd agm = a * model.g * pred.m_gain;  // 1 x n_k
  double p_q = a.dot(pred.p_pred * a.transpose()) + eps_star * l * l +
               sk.dot(t.noise * sk.transpose()) + 2.0 * l * sk.dot(cross_eps);
  p_q -= 2.0 * (agm.dot(t.noise * sk.transpose()) + l * agm.dot(cross_eps));
  q.p_q = std::max(p_q, 0.0);
  if (p_q < -1e-9 * std::max(1.0, eps_star)) {
    throw IllConditioned("query variance is negative for area " + std::to_string(area));
  }
  return q;
}

// ---------------------------------------------------------------------------

FixedRankResilientFilter::FixedRankResilientFilter(std::shared_ptr<const SpatioTemporalModel> model,
                                                   FilterState initial)
    : model_(std::move(model)), state_(std::move(initial)) {
  if (!model_) throw InvalidArgument("filter needs a model");
  model_->validate();
  if (state_.eta_hat.size() != model_->n_eta() || state_.p_eta.rows() != model_->n_eta() ||
      state_.p_eta.cols() != model_->n_eta()) {
    throw InvalidArgument("initial state does not match the basis rank");
  }
  linalg::require_psd(state_.p_eta, "initial covariance");
}

std::vector<QueryEstimate> FixedRankResilientFilter::step(const MeasurementBatch& batch,
                                                          const std::vector<int>& query_areas) {
  for (int a : query_areas) {
    if (!(a >= 1 && a <= model_->n_areas())) {
      throw InvalidArgument("invalid query area " + std::to_string(a));
    }
  }
  MeasurementBatch merged = merge_duplicates(batch, *model_);
  PredictedState pred = predict(state_, *model_, merged);
  Correction corr = update(pred, *model_, merged);

  std::vector<QueryEstimate> out;
  out.reserve(query_areas.size());
  for (int a : query_areas) out.push_back(query(pred, corr, *model_, merged, a));

  state_ = corr.state;
  pred_ = std::move(pred);
  corr_ = std::move(corr);
  batch_ = std::move(merged);
  return out;
}

}  // namespace plk::frrf
