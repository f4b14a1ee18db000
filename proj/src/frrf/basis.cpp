#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "plk/error.hpp"
#include "plk/frrf.hpp"

namespace plk::frrf {

GridSpec::GridSpec(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows <= 0 || cols <= 0) throw InvalidArgument("grid shape must be positive");
}

int GridSpec::area(int row, int col) const {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_) {
    throw InvalidArgument("cell outside grid");
  }
  return row * cols_ + col + 1;
}

std::pair<int, int> GridSpec::cell(int area) const {
  if (!contains(area)) throw InvalidArgument("invalid area " + std::to_string(area));
  return {(area - 1) / cols_, (area - 1) % cols_};
}

StaticBasis::StaticBasis(MatrixXd s) : s_(std::move(s)) {
  if (s_.rows() == 0 || s_.cols() == 0) throw InvalidArgument("empty basis");
  if (!s_.allFinite()) throw InvalidArgument("basis has non-finite entries");
}

namespace {

struct Wavelet1d {
  VectorXd v;
  int level;
};

void split(int begin, int end, int level, int n, std::vector<Wavelet1d>& out) {
  const int len = end - begin;
  if (len < 2) return;
  const int mid = begin + (len + 1) / 2;
  VectorXd v = VectorXd::Zero(n);
  const double nl = mid - begin;
  const double nr = end - mid;
  v.segment(begin, mid - begin).setConstant(1.0 / nl);
  v.segment(mid, end - mid).setConstant(-1.0 / nr);
  v.normalize();
  out.push_back({std::move(v), level});
  split(begin, mid, level + 1, n, out);
  split(mid, end, level + 1, n, out);
}

// Unbalanced Haar system on n points: constant plus n-1 step functions.
std::vector<Wavelet1d> haar_1d(int n) {
  std::vector<Wavelet1d> out;
  out.push_back({VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))), 0});
  split(0, n, 1, n, out);
  std::stable_sort(out.begin(), out.end(),
                   [](const Wavelet1d& a, const Wavelet1d& b) { return a.level < b.level; });
  return out;
}

}  // namespace

MatrixXd build_w_wavelet_basis(const GridSpec& grid, int rank) {
  const int n = grid.n_areas();
  if (rank < 1 || rank > n) {
    throw InvalidArgument("invalid rank " + std::to_string(rank) + " for " + std::to_string(n) +
                          " areas");
  }
  const auto rows = haar_1d(grid.rows());
  const auto cols = haar_1d(grid.cols());

  std::vector<std::tuple<int, int, int, int>> order;  // (lsum, lmax, i, j)
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    for (int j = 0; j < static_cast<int>(cols.size()); ++j) {
      const int li = rows[i].level;
      const int lj = cols[j].level;
      order.emplace_back(li + lj, std::max(li, lj), i, j);
    }
  }
  std::sort(order.begin(), order.end());

  MatrixXd s(n, rank);
  for (int c = 0; c < rank; ++c) {
    const auto [lsum, lmax, i, j] = order[c];
    for (int r = 0; r < grid.rows(); ++r) {
      for (int q = 0; q < grid.cols(); ++q) {
        s(grid.area(r, q) - 1, c) = rows[i].v(r) * cols[j].v(q);
      }
    }
  }
  return s;
}

}  // namespace plk::frrf
