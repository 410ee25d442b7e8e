#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsp/config.hpp"
#include "gsp/events.hpp"
#include "gsp/sim/scenario.hpp"
#include "gsp/state.hpp"

namespace gsp::sim {

/// Wall-clock origin of simulated runs (2024-01-01T00:00:00Z).
inline constexpr std::int64_t kSimEpochMs = 1704067200000;

struct SimulationOptions {
  /// Also write the event log (and snapshots) here. Must not exist yet.
  std::optional<std::filesystem::path> log_path;
};

struct SimulationStats {
  int participants_registered = 0;
  int trials_assigned = 0;
  int responses = 0;
  int abandoned = 0;  // dropouts plus trials on stalled chains
  int idle_polls = 0;
  int ratings = 0;
  std::size_t renders = 0;
  bool rendered = false;
};

struct SimulationResult {
  std::vector<Event> events;
  ExperimentState state;
  SimulationStats stats;
};

/// Drives the experiment service exactly as live participants would: up to
/// `concurrency` participants hold trials at a time, each answering after
/// `trial_seconds` of simulated time. Runs until termination and then, if
/// enabled, through the validation rating phase. Single-threaded and fully
/// determined by (config, scenario).
SimulationResult run_simulation(const ExperimentConfig& config, const Scenario& scenario,
                                const SimulationOptions& options = {});

/// Counts and outcome of a run; stable across identical runs.
nlohmann::json summarize(const SimulationResult& result);

}  // namespace gsp::sim
