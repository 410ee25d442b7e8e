#pragma once

#include <Eigen/Dense>

namespace gsp::analysis {

struct PcaResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // one orthonormal component per row, by descending variance
  Eigen::VectorXd explained_variance_ratio;
  Eigen::MatrixXd scores;      // centred data projected on the components, one row per sample
};

/// PCA of the rows of `data`. Each component's largest-magnitude coordinate is
/// made positive. Throws Error(degenerate_variance) when all rows coincide and
/// Error(size) for fewer than two rows.
PcaResult pca(const Eigen::MatrixXd& data);

}  // namespace gsp::analysis
