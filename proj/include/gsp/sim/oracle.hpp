#pragma once

#include <Eigen/Dense>

#include "gsp/grid.hpp"
#include "gsp/sim/agents.hpp"

namespace gsp::sim {

/// States of grid^D are numbered with dimension 0 varying slowest.
int state_count(const SliderGrid& grid, int dimensions);
LatentPoint state_point(int state, const SliderGrid& grid, int dimensions);
int state_index(const LatentPoint& point, const SliderGrid& grid);

/// Kernel of one Gibbs update of `dimension`, from conditional_slice_probs.
/// Rows are current states, columns next states.
Eigen::MatrixXd gibbs_update_matrix(const EmotionTarget& target, const SliderGrid& grid, int dimension);

/// One systematic sweep: dimension 0, then 1, ... then D-1.
Eigen::MatrixXd gibbs_sweep_matrix(const EmotionTarget& target, const SliderGrid& grid);

/// Stationary distribution of the sweep kernel by power iteration until the
/// L1 change drops below `tolerance`. Limited to D <= 2 and at most 16 grid
/// positions; throws Error(size) beyond that.
Eigen::VectorXd gibbs_oracle_stationary(const EmotionTarget& target, const SliderGrid& grid, double tolerance = 1e-12);

/// The target density evaluated on every grid state, normalized.
Eigen::VectorXd target_on_grid(const EmotionTarget& target, const SliderGrid& grid);

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

}  // namespace gsp::sim
