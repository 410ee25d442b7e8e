#include "gsp/analysis/classify.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "gsp/error.hpp"

namespace gsp::analysis {

namespace {

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

std::vector<int> select_labels(std::span<const int> labels, const std::vector<int>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (int r : rows) out.push_back(labels[static_cast<std::size_t>(r)]);
  return out;
}

void check(const Eigen::MatrixXd& x, std::span<const int> labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw Error(Errc::shape, "feature rows and labels differ in count");
  if (!x.allFinite()) throw Error(Errc::range, "features contain non-finite values");
}

// Standardize on the training rows, fit, predict the test rows.
std::vector<int> fit_predict(const Eigen::MatrixXd& train, std::span<const int> train_labels, const Eigen::MatrixXd& test,
                             double c, const SvmOptions& options) {
  const auto scaler = Standardizer::fit(train);
  LinearSvm svm;
  svm.fit(scaler.apply(train), train_labels, c, options);
  return svm.predict(scaler.apply(test));
}

}  // namespace

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  s.mean = x.colwise().mean();
  s.scale = Eigen::RowVectorXd::Ones(x.cols());
  if (x.rows() > 1) {
    const Eigen::MatrixXd centred = x.rowwise() - s.mean;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double sd = std::sqrt(centred.col(j).squaredNorm() / static_cast<double>(x.rows() - 1));
      if (sd > 0.0) s.scale(j) = sd;
    }
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

void LinearSvm::fit(const Eigen::MatrixXd& x, std::span<const int> labels, double c, const SvmOptions& options) {
  check(x, labels);
  if (x.rows() == 0) throw Error(Errc::size, "no training samples");
  if (!(c > 0.0)) throw Error(Errc::range, "C must be positive");
  std::set<int> distinct(labels.begin(), labels.end());
  classes_.assign(distinct.begin(), distinct.end());

  const auto n = x.rows();
  const auto d = x.cols();
  Eigen::MatrixXd augmented(n, d + 1);
  augmented.leftCols(d) = x;
  augmented.col(d).setOnes();

  const double lambda = 1.0 / (c * static_cast<double>(n));
  const long total_steps = static_cast<long>(options.epochs) * n;
  const long average_from = total_steps / 2;
  weights_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes_.size()), d + 1);

  std::vector<int> order(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    std::mt19937_64 rng(options.seed + 7919 * k);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d + 1);
    long averaged = 0;
    long t = 0;
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (int i : order) {
        ++t;
        const double y = labels[static_cast<std::size_t>(i)] == classes_[k] ? 1.0 : -1.0;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double margin = y * augmented.row(i).dot(w);
        w *= (1.0 - eta * lambda);
        if (margin < 1.0) w += (eta * y) * augmented.row(i).transpose();
        if (t > average_from) {
          sum += w;
          ++averaged;
        }
      }
    }
    weights_.row(static_cast<Eigen::Index>(k)) = (sum / static_cast<double>(std::max(1L, averaged))).transpose();
  }
}

std::vector<int> LinearSvm::predict(const Eigen::MatrixXd& x) const {
  if (classes_.empty()) throw Error(Errc::state, "classifier is not fitted");
  if (x.cols() + 1 != weights_.cols()) throw Error(Errc::feature_schema, "feature count differs from training");
  const auto d = x.cols();
  const Eigen::MatrixXd scores =
      (x * weights_.leftCols(d).transpose()).rowwise() + weights_.col(d).transpose();
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    scores.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = classes_[static_cast<std::size_t>(best)];
  }
  return out;
}

std::vector<double> per_class_recall(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw Error(Errc::shape, "truth and predictions differ in length");
  if (truth.empty()) throw Error(Errc::size, "no predictions to score");
  std::map<int, std::pair<int, int>> counts;  // label -> (hits, total)
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& c = counts[truth[i]];
    c.second += 1;
    if (predicted[i] == truth[i]) c.first += 1;
  }
  std::vector<double> recalls;
  for (const auto& [label, c] : counts) recalls.push_back(static_cast<double>(c.first) / c.second);
  return recalls;
}

double uar(std::span<const int> truth, std::span<const int> predicted) {
  const auto recalls = per_class_recall(truth, predicted);
  return std::accumulate(recalls.begin(), recalls.end(), 0.0) / static_cast<double>(recalls.size());
}

std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::range, "need at least 2 folds");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<int>(i));
  std::vector<int> fold(labels.size(), 0);
  std::mt19937_64 rng(seed);
  int offset = 0;
  for (auto& [label, rows] : by_class) {
    if (static_cast<int>(rows.size()) < k) {
      throw Error(Errc::stratification, "class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                                            " samples, fewer than " + std::to_string(k) + " folds");
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    // Continue dealing where the previous class stopped so fold sizes stay even.
    for (std::size_t j = 0; j < rows.size(); ++j) fold[static_cast<std::size_t>(rows[j])] = (offset + static_cast<int>(j)) % k;
    offset = (offset + static_cast<int>(rows.size())) % k;
  }
  return fold;
}

double select_c(const Eigen::MatrixXd& x, std::span<const int> labels, const UarOptions& options) {
  if (options.c_grid.empty()) throw Error(Errc::config, "empty C grid");
  if (options.c_grid.size() == 1) return options.c_grid.front();
  const auto folds = stratified_folds(labels, options.inner_k, options.svm.seed + 1);
  double best_c = options.c_grid.front();
  double best_uar = -1.0;
  for (double c : options.c_grid) {
    std::vector<int> truth, predicted;
    for (int f = 0; f < options.inner_k; ++f) {
      std::vector<int> train, test;
      for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test : train).push_back(static_cast<int>(i));
      const auto pred = fit_predict(select_rows(x, train), select_labels(labels, train), select_rows(x, test), c, options.svm);
      const auto t = select_labels(labels, test);
      truth.insert(truth.end(), t.begin(), t.end());
      predicted.insert(predicted.end(), pred.begin(), pred.end());
    }
    const double score = uar(truth, predicted);
    if (score > best_uar) {
      best_uar = score;
      best_c = c;
    }
  }
  return best_c;
}

double kfold_uar(const Dataset& data, const UarOptions& options) {
  check(data.features, data.labels);
  const auto folds = stratified_folds(data.labels, options.k, options.svm.seed);
  std::vector<int> truth, predicted;
  for (int f = 0; f < options.k; ++f) {
    std::vector<int> train, test;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test : train).push_back(static_cast<int>(i));
    const Eigen::MatrixXd x_train = select_rows(data.features, train);
    const auto y_train = select_labels(data.labels, train);
    const double c = select_c(x_train, y_train, options);
    const auto pred = fit_predict(x_train, y_train, select_rows(data.features, test), c, options.svm);
    const auto t = select_labels(data.labels, test);
    truth.insert(truth.end(), t.begin(), t.end());
    predicted.insert(predicted.end(), pred.begin(), pred.end());
  }
  return uar(truth, predicted);
}

double cross_predict_uar(const Dataset& train, const Dataset& test, const UarOptions& options) {
  if (train.feature_names != test.feature_names) throw Error(Errc::feature_schema, "train and test feature schemas differ");
  check(train.features, train.labels);
  check(test.features, test.labels);
  const double c = select_c(train.features, train.labels, options);
  const auto pred = fit_predict(train.features, train.labels, test.features, c, options.svm);
  return uar(test.labels, pred);
}

}  // namespace gsp::analysis
