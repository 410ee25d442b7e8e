#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gsp::analysis {

struct Dataset {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd features;  // one row per sample
  std::vector<int> labels;
};

struct SvmOptions {
  int epochs = 200;
  std::uint64_t seed = 1;
};

struct UarOptions {
  int k = 4;
  int inner_k = 3;
  std::vector<double> c_grid{1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  SvmOptions svm;
};

/// One-vs-rest linear max-margin classifier trained by averaged stochastic
/// subgradient descent on the hinge loss with regularization 1 / (C n).
class LinearSvm {
 public:
  void fit(const Eigen::MatrixXd& x, std::span<const int> labels, double c, const SvmOptions& options = {});
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

  const std::vector<int>& classes() const noexcept { return classes_; }
  /// One row per class: weights followed by the bias.
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }

 private:
  std::vector<int> classes_;
  Eigen::MatrixXd weights_;
};

/// Column means and standard deviations of the training rows; constant
/// columns get unit scale.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

/// Recall of every class present in `truth`, in ascending label order.
std::vector<double> per_class_recall(std::span<const int> truth, std::span<const int> predicted);
/// Unweighted mean of per_class_recall.
double uar(std::span<const int> truth, std::span<const int> predicted);

/// Fold index per sample. Every class is dealt round-robin over the k folds
/// after a seeded shuffle, so class counts per fold differ by at most one.
/// Throws Error(stratification) when a class has fewer than k samples.
std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed);

/// C with the best inner k-fold UAR; ties go to the earlier grid entry.
double select_c(const Eigen::MatrixXd& x, std::span<const int> labels, const UarOptions& options);

/// Outer k-fold UAR with per-fold standardization and nested C selection.
double kfold_uar(const Dataset& data, const UarOptions& options = {});

/// Trains on all of `train` and scores UAR on `test`. Throws
/// Error(feature_schema) when the feature names differ.
double cross_predict_uar(const Dataset& train, const Dataset& test, const UarOptions& options = {});

}  // namespace gsp::analysis
