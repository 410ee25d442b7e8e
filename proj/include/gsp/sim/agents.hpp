#pragma once

#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gsp/grid.hpp"
#include "gsp/types.hpp"

namespace gsp::sim {

/// Gaussian utility over the latent space (weight units). Without a
/// covariance the target is isotropic with standard deviation `sigma`.
struct EmotionTarget {
  Emotion emotion = Emotion::anger;
  std::vector<double> mu;
  double sigma = 0.12;
  std::optional<Eigen::MatrixXd> covariance;

  /// Inverse covariance. Throws Error(conditioning) unless symmetric
  /// positive-definite.
  Eigen::MatrixXd precision() const;
  /// Unnormalized log density.
  double log_density(std::span<const double> x) const;
};

/// Throws Error(range) when mu leaves the grid range and Error(conditioning)
/// for an invalid covariance.
void validate(const EmotionTarget& target, const SliderGrid& grid);

struct AgentPolicy {
  enum class Mode { sampler, maximizer };

  Mode mode = Mode::maximizer;
  double temperature = 1.0;
  double lapse_rate = 0.0;
};

/// Distribution of the free coordinate given the others, restricted to the
/// grid: p(k) proportional to exp(-(x_k - m)^2 / (2 s^2)).
std::vector<double> conditional_slice_probs(const EmotionTarget& target, const LatentPoint& point, int free_dim,
                                            const SliderGrid& grid);

/// Exact distribution of agent_choose's answer.
std::vector<double> choice_distribution(const AgentPolicy& policy, std::span<const double> probs);

int agent_choose(const AgentPolicy& policy, std::span<const double> probs, std::mt19937_64& rng);

enum class RatingNoise {
  none,    // rating = 1 + round(3 s)
  dither,  // rating = 1 + round(3 s + u), u ~ U(-1/2, 1/2); unbiased in s
};

struct RatingModel {
  double sigma_r = 0.2;
  RatingNoise noise = RatingNoise::dither;
};

/// s = exp(-|x - mu|^2 / (2 sigma_r^2)), mapped to 1..4 with round-half-up.
int rating_agent(const EmotionTarget& target, std::span<const double> weights, const RatingModel& model,
                 std::mt19937_64& rng);

/// Round-half-up of 1 + 3 s, clamped to 1..4.
int rating_from_similarity(double s);

}  // namespace gsp::sim
