#include "gsp/sim/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gsp/error.hpp"

namespace gsp::sim {

Eigen::MatrixXd EmotionTarget::precision() const {
  const auto d = static_cast<Eigen::Index>(mu.size());
  if (!covariance) {
    if (!(sigma > 0.0)) throw Error(Errc::conditioning, "sigma must be positive");
    return Eigen::MatrixXd::Identity(d, d) / (sigma * sigma);
  }
  const Eigen::MatrixXd& c = *covariance;
  if (c.rows() != d || c.cols() != d) throw Error(Errc::shape, "covariance must be D x D");
  if (!c.isApprox(c.transpose(), 1e-12)) throw Error(Errc::conditioning, "covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw Error(Errc::conditioning, "covariance is not positive-definite");
  return llt.solve(Eigen::MatrixXd::Identity(d, d));
}

double EmotionTarget::log_density(std::span<const double> x) const {
  if (x.size() != mu.size()) throw Error(Errc::shape, "point and target differ in dimension");
  Eigen::VectorXd diff(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) diff(static_cast<Eigen::Index>(i)) = x[i] - mu[i];
  return -0.5 * diff.dot(precision() * diff);
}

void validate(const EmotionTarget& target, const SliderGrid& grid) {
  if (target.mu.empty()) throw Error(Errc::shape, "target has no dimensions");
  for (double m : target.mu) {
    if (!(m >= grid.lo() && m <= grid.hi())) throw Error(Errc::range, "target mean outside the slider range");
  }
  target.precision();
}

std::vector<double> conditional_slice_probs(const EmotionTarget& target, const LatentPoint& point, int free_dim,
                                            const SliderGrid& grid) {
  const auto dims = static_cast<int>(target.mu.size());
  if (static_cast<int>(point.dimensions()) != dims) throw Error(Errc::shape, "point and target differ in dimension");
  if (free_dim < 0 || free_dim >= dims) throw Error(Errc::range, "free dimension out of range");

  const auto fd = static_cast<std::size_t>(free_dim);
  double m = target.mu[fd];
  double s = target.sigma;
  if (target.covariance) {
    const Eigen::MatrixXd q = target.precision();
    const double qdd = q(free_dim, free_dim);
    if (!(qdd > 0.0)) throw Error(Errc::conditioning, "degenerate conditional variance");
    const auto x = point.weights(grid);
    double shift = 0.0;
    for (int j = 0; j < dims; ++j) {
      if (j != free_dim) shift += q(free_dim, j) * (x[static_cast<std::size_t>(j)] - target.mu[static_cast<std::size_t>(j)]);
    }
    m -= shift / qdd;
    s = 1.0 / std::sqrt(qdd);
  }

  std::vector<double> logp(static_cast<std::size_t>(grid.size()));
  for (int k = 0; k < grid.size(); ++k) {
    const double z = (grid.position(k) - m) / s;
    logp[static_cast<std::size_t>(k)] = -0.5 * z * z;
  }
  const double top = *std::max_element(logp.begin(), logp.end());
  double total = 0.0;
  for (double& v : logp) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : logp) v /= total;
  return logp;
}

std::vector<double> choice_distribution(const AgentPolicy& policy, std::span<const double> probs) {
  if (probs.empty()) throw Error(Errc::size, "no choices");
  const auto n = probs.size();
  std::vector<double> out(n, 0.0);
  if (policy.mode == AgentPolicy::Mode::maximizer) {
    out[static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin())] = 1.0;
  } else {
    if (!(policy.temperature > 0.0)) throw Error(Errc::range, "temperature must be positive");
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      out[k] = policy.temperature == 1.0 ? probs[k] : std::pow(probs[k], 1.0 / policy.temperature);
      total += out[k];
    }
    for (double& v : out) v /= total;
  }
  if (policy.lapse_rate > 0.0) {
    for (double& v : out) v = (1.0 - policy.lapse_rate) * v + policy.lapse_rate / static_cast<double>(n);
  }
  return out;
}

int agent_choose(const AgentPolicy& policy, std::span<const double> probs, std::mt19937_64& rng) {
  if (probs.empty()) throw Error(Errc::size, "no choices");
  const int n = static_cast<int>(probs.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (policy.lapse_rate > 0.0 && unit(rng) < policy.lapse_rate) {
    return std::uniform_int_distribution<int>(0, n - 1)(rng);
  }
  if (policy.mode == AgentPolicy::Mode::maximizer) {
    // max_element returns the first maximum, i.e. the lowest index on ties.
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  }
  const auto weights = choice_distribution(AgentPolicy{policy.mode, policy.temperature, 0.0}, probs);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  return pick(rng);
}

int rating_from_similarity(double s) { return std::clamp(1 + static_cast<int>(std::floor(3.0 * s + 0.5)), 1, 4); }

int rating_agent(const EmotionTarget& target, std::span<const double> weights, const RatingModel& model,
                 std::mt19937_64& rng) {
  if (weights.size() != target.mu.size()) throw Error(Errc::shape, "point and target differ in dimension");
  double dist2 = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) dist2 += (weights[i] - target.mu[i]) * (weights[i] - target.mu[i]);
  const double s = std::exp(-dist2 / (2.0 * model.sigma_r * model.sigma_r));
  if (model.noise == RatingNoise::none) return rating_from_similarity(s);
  const double u = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
  return std::clamp(1 + static_cast<int>(std::floor(3.0 * s + u + 0.5)), 1, 4);
}

}  // namespace gsp::sim
