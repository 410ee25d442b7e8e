#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsp/config.hpp"
#include "gsp/sim/agents.hpp"

namespace gsp::sim {

struct ValidationScenario {
  bool enabled = true;
  int raters = 82;
  double rating_seconds = 8.0;
  RatingModel model;
};

/// Everything the closed loop needs besides the experiment config.
struct Scenario {
  std::vector<EmotionTarget> targets;  // one per emotion
  AgentPolicy policy;
  std::uint64_t seed = 1;
  int participants = 130;
  int concurrency = 5;
  double trial_seconds = 30.0;
  double idle_seconds = 60.0;
  /// Probability that a participant walks away from a trial without answering.
  double dropout_rate = 0.0;
  /// Chains whose trials are never answered; they can only end at the deadline.
  std::set<int> stalled_chains;
  /// Render the 32 slider stimuli of every trial with the configured renderer.
  bool render = true;
  ValidationScenario validation;

  const EmotionTarget& target(Emotion e) const;
};

/// Default targets: for D = 10 a fixed set of means with dimension pairs
/// (d, d + 5) correlated at 0.8 and sigma 0.12; other D get seeded means and
/// isotropic covariance.
std::vector<EmotionTarget> default_targets(const ExperimentConfig& config, bool correlated = true);

Scenario default_scenario(const ExperimentConfig& config);

/// Reads a scenario file; missing keys keep their defaults for `config`.
Scenario parse_scenario(const nlohmann::json& j, const ExperimentConfig& config);
Scenario load_scenario(const std::filesystem::path& path, const ExperimentConfig& config);
nlohmann::json to_json(const Scenario& scenario);

/// Nearest grid index per dimension of the target mean.
LatentPoint grid_projection(const EmotionTarget& target, const SliderGrid& grid);

}  // namespace gsp::sim
