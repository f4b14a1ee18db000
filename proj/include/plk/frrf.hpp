#pragma once

// Fixed rank resilient filter: spatio-temporal estimation of a scalar field
// q_{s,k} = mu_{s,k} + S_s eta_k + xi_{s,k} over a gridded domain, where the
// hidden state follows eta_{k+1} = H eta_k + G d_k + zeta_k with an unknown
// input d_k. Sparse per-area measurements z_{s,k} = q_{s,k} + eps_{s,k}.

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "plk/linalg.hpp"

namespace plk::frrf {

/// Rectangular grid of areas. Areas are numbered 1..n_areas row-major from
/// the bottom-left cell, so area 1 is the bottom-left corner and area 2 its
/// right neighbour.
class GridSpec {
 public:
  GridSpec(int rows, int cols);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int n_areas() const noexcept { return rows_ * cols_; }
  bool contains(int area) const noexcept { return area >= 1 && area <= n_areas(); }

  int area(int row, int col) const;
  std::pair<int, int> cell(int area) const;  // (row, col), zero based

 private:
  int rows_;
  int cols_;
};

/// Source of the basis matrix S_k (n_areas x rank). Row s-1 is S_{s,k}.
class BasisProvider {
 public:
  virtual ~BasisProvider() = default;
  virtual const MatrixXd& basis(long k) const = 0;
  virtual int rank() const = 0;
  virtual int n_areas() const = 0;
};

/// Time-invariant basis, e.g. the wavelet basis below or a user matrix.
class StaticBasis final : public BasisProvider {
 public:
  explicit StaticBasis(MatrixXd s);
  const MatrixXd& basis(long) const override { return s_; }
  int rank() const override { return static_cast<int>(s_.cols()); }
  int n_areas() const override { return static_cast<int>(s_.rows()); }

 private:
  MatrixXd s_;
};

/// Orthonormal Haar-type multiresolution basis on the grid, truncated to the
/// `rank` coarsest tensor-product functions. The first column is the
/// normalized constant. Columns are orthonormal; for rank == n_areas the
/// matrix is orthogonal. Throws InvalidArgument if rank is not in
/// [1, n_areas].
MatrixXd build_w_wavelet_basis(const GridSpec& grid, int rank);

/// Weather-driven prior mean mu_{s,k}, tabulated for steps first_k..last_k.
class WeatherTable {
 public:
  WeatherTable() = default;
  /// `values` is n_areas x n_steps; column j holds step first_k + j.
  WeatherTable(long first_k, MatrixXd values);
  static WeatherTable constant(int n_areas, double value, long first_k, long last_k);

  /// Throws InvalidArgument ("missing forecast") outside the table.
  double at(int area, long k) const;

  int n_areas() const noexcept { return static_cast<int>(values_.rows()); }
  long first_k() const noexcept { return first_k_; }
  long last_k() const noexcept { return first_k_ + static_cast<long>(values_.cols()) - 1; }
  const MatrixXd& values() const noexcept { return values_; }

 private:
  long first_k_ = 0;
  MatrixXd values_;
};

double weather_prior(const WeatherTable& table, int area, long k);

/// Known quantities of the mixed-effect model. H and G are time invariant.
struct SpatioTemporalModel {
  std::shared_ptr<const BasisProvider> basis;
  MatrixXd h;       // n_eta x n_eta
  MatrixXd g;       // n_eta x n_d
  VectorXd p_eps;   // per-area measurement noise variance
  VectorXd p_xi;    // per-area fine-scale variance
  MatrixXd p_zeta;  // n_eta x n_eta
  WeatherTable mu;

  int n_areas() const { return basis->n_areas(); }
  int n_eta() const { return basis->rank(); }
  int n_d() const { return static_cast<int>(g.cols()); }

  /// Shapes, symmetry and sign checks. Throws InvalidArgument.
  void validate() const;
};

struct Measurement {
  int area = 0;
  double value = 0.0;
  std::optional<double> variance;  // overrides p_eps of the area
};

struct MeasurementBatch {
  long k = 0;
  std::vector<Measurement> entries;

  std::vector<int> areas() const;
  /// E_k: one row per entry with a single 1 in the column of its area.
  MatrixXd selector(int n_areas) const;
  bool has_duplicates() const;
};

/// Replaces repeated readings of an area by their inverse-variance weighted
/// mean with the harmonic-combined variance. Order of first appearance is
/// kept. Throws InvalidArgument on a non-positive variance among merged or
/// overridden entries, or an unknown area.
MeasurementBatch merge_duplicates(const MeasurementBatch& batch, const SpatioTemporalModel& model);

struct FilterState {
  long k = 0;
  VectorXd eta_hat;
  MatrixXd p_eta;
};

struct PredictedState {
  long k = 0;
  VectorXd eta_pred;
  MatrixXd p_pred;
  MatrixXd m_gain;  // n_d x n_k
  VectorXd d_hat;   // estimate of d_{k-1}
  bool rank_ok = false;
  VectorXd eta_prev;  // eta_hat_{k-1}
  MatrixXd p_prev;    // P_{k-1}
};

struct Correction {
  FilterState state;
  MatrixXd k_gain;  // n_eta x n_k
};

struct QueryEstimate {
  int area = 0;
  double q_hat = 0.0;
  double p_q = 0.0;
  double xi_hat = 0.0;
  bool measured = false;
  /// L_{s*,k}, one weight per reading of the area (empty when unmeasured).
  VectorXd l_gain;
};

/// Innovation-dependent quantities of step k shared by predict/update/query.
struct BatchTerms {
  MatrixXd s_k;     // n_k x n_eta
  VectorXd resid;   // z - mu (n_k)
  VectorXd eps_var; // effective eps variance per entry
  MatrixXd noise;   // P_eps + E P_xi E^T (diagonal, n_k x n_k)
};

BatchTerms batch_terms(const SpatioTemporalModel& model, const MeasurementBatch& batch);

/// Prediction with unknown-input rejection. If S_k G loses column rank the
/// gain M is set to zero (pure dynamic prediction) and rank_ok is false.
/// Throws IllConditioned if R_k has condition number above 1e12, and
/// InvalidArgument on a step mismatch or duplicate areas.
PredictedState predict(const FilterState& state, const SpatioTemporalModel& model,
                       const MeasurementBatch& batch);

/// Measurement update. The innovation covariance is rank deficient by n_d
/// whenever the unknown input was compensated, so the gain uses its
/// pseudoinverse; a rank below that structural value raises IllConditioned.
Correction update(const PredictedState& pred, const SpatioTemporalModel& model,
                  const MeasurementBatch& batch);

/// Estimate of q at `area` after the update of step k.
QueryEstimate query(const PredictedState& pred, const Correction& corr,
                    const SpatioTemporalModel& model, const MeasurementBatch& batch, int area);

/// Stateful wrapper composing predict / update / query.
class FixedRankResilientFilter {
 public:
  FixedRankResilientFilter(std::shared_ptr<const SpatioTemporalModel> model, FilterState initial);

  /// Advances to batch.k (must be k+1). Duplicate readings are merged first.
  std::vector<QueryEstimate> step(const MeasurementBatch& batch, const std::vector<int>& query_areas);

  const FilterState& state() const noexcept { return state_; }
  const SpatioTemporalModel& model() const noexcept { return *model_; }
  /// Valid after the first step.
  const PredictedState& last_prediction() const noexcept { return pred_; }
  const Correction& last_correction() const noexcept { return corr_; }
  const MeasurementBatch& last_batch() const noexcept { return batch_; }

 private:
  std::shared_ptr<const SpatioTemporalModel> model_;
  FilterState state_;
  PredictedState pred_;
  Correction corr_;
  MeasurementBatch batch_;
};

}  // namespace plk::frrf
