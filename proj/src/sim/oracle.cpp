#include "gsp/sim/oracle.hpp"

#include <cmath>

#include "gsp/error.hpp"

namespace gsp::sim {

int state_count(const SliderGrid& grid, int dimensions) {
  long count = 1;
  for (int d = 0; d < dimensions; ++d) {
    count *= grid.size();
    if (count > 1'000'000) throw Error(Errc::size, "state space too large");
  }
  return static_cast<int>(count);
}

LatentPoint state_point(int state, const SliderGrid& grid, int dimensions) {
  LatentPoint p;
  p.indices.assign(static_cast<std::size_t>(dimensions), 0);
  for (int d = dimensions - 1; d >= 0; --d) {
    p.indices[static_cast<std::size_t>(d)] = state % grid.size();
    state /= grid.size();
  }
  return p;
}

int state_index(const LatentPoint& point, const SliderGrid& grid) {
  int s = 0;
  for (int idx : point.indices) s = s * grid.size() + idx;
  return s;
}

Eigen::MatrixXd gibbs_update_matrix(const EmotionTarget& target, const SliderGrid& grid, int dimension) {
  const int dims = static_cast<int>(target.mu.size());
  const int n = state_count(grid, dims);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    const LatentPoint from = state_point(s, grid, dims);
    const auto probs = conditional_slice_probs(target, from, dimension, grid);
    LatentPoint to = from;
    for (int j = 0; j < grid.size(); ++j) {
      to.indices[static_cast<std::size_t>(dimension)] = j;
      k(s, state_index(to, grid)) += probs[static_cast<std::size_t>(j)];
    }
  }
  return k;
}

Eigen::MatrixXd gibbs_sweep_matrix(const EmotionTarget& target, const SliderGrid& grid) {
  const int dims = static_cast<int>(target.mu.size());
  Eigen::MatrixXd sweep = gibbs_update_matrix(target, grid, 0);
  for (int d = 1; d < dims; ++d) sweep = sweep * gibbs_update_matrix(target, grid, d);
  return sweep;
}

Eigen::VectorXd gibbs_oracle_stationary(const EmotionTarget& target, const SliderGrid& grid, double tolerance) {
  if (target.mu.size() > 2 || grid.size() > 16) {
    throw Error(Errc::size, "oracle is limited to D <= 2 and 16 grid positions");
  }
  const Eigen::MatrixXd k = gibbs_sweep_matrix(target, grid);
  const auto n = k.rows();
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int iter = 0; iter < 1'000'000; ++iter) {
    Eigen::RowVectorXd next = pi * k;
    next /= next.sum();
    const double change = (next - pi).cwiseAbs().sum();
    pi = next;
    if (change < tolerance) break;
  }
  return pi.transpose();
}

Eigen::VectorXd target_on_grid(const EmotionTarget& target, const SliderGrid& grid) {
  const int dims = static_cast<int>(target.mu.size());
  const int n = state_count(grid, dims);
  Eigen::VectorXd logp(n);
  for (int s = 0; s < n; ++s) {
    const auto w = state_point(s, grid, dims).weights(grid);
    logp(s) = target.log_density(w);
  }
  const Eigen::VectorXd p = (logp.array() - logp.maxCoeff()).exp();
  return p / p.sum();
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw Error(Errc::shape, "distributions differ in support");
  return 0.5 * (p - q).cwiseAbs().sum();
}

}  // namespace gsp::sim
