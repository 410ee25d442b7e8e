#include "gsp/analysis/pca.hpp"

#include <cmath>

#include "gsp/error.hpp"

namespace gsp::analysis {

PcaResult pca(const Eigen::MatrixXd& data) {
  const auto n = data.rows();
  const auto d = data.cols();
  if (n < 2 || d < 1) throw Error(Errc::size, "pca needs at least two samples");
  if (!data.allFinite()) throw Error(Errc::range, "pca input contains non-finite values");

  PcaResult out;
  out.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centred = data.rowwise() - out.mean.transpose();
  const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(n - 1);
  const double scale = cov.diagonal().sum();
  if (!(scale > 0.0)) throw Error(Errc::degenerate_variance, "all samples are identical");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error(Errc::degenerate_variance, "eigendecomposition failed");
  // Eigen returns ascending eigenvalues; flip to descending.
  const Eigen::VectorXd values = solver.eigenvalues().reverse().cwiseMax(0.0);
  Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();

  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::Index arg = 0;
    vectors.col(k).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, k) < 0.0) vectors.col(k) *= -1.0;
  }
  out.components = vectors.transpose();
  out.explained_variance_ratio = values / values.sum();
  out.scores = centred * vectors;
  return out;
}

}  // namespace gsp::analysis
