#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsp/config.hpp"
#include "gsp/events.hpp"
#include "gsp/render/cache.hpp"
#include "gsp/sampler.hpp"
#include "gsp/service/event_log.hpp"

namespace gsp::service {

struct ExperimentOptions {
  /// Append-only log on disk; events are kept in memory either way.
  std::optional<std::filesystem::path> log_path;
  /// Where rendered stimuli go. Without it audio stays in memory.
  std::optional<std::filesystem::path> stimulus_dir;
  /// Keep only style embeddings and re-render audio on demand.
  bool discard_audio = false;
  /// Render the 32 slider stimuli when a trial is handed out.
  bool render_on_assign = true;
  /// Substitute renderer (tests); built from the config when empty.
  std::shared_ptr<render::Renderer> renderer;
};

struct TrialOffer {
  TrialAssignment assignment;
  LatentPoint point;                      // chain position the slider moves from
  std::vector<std::string> stimulus_ids;  // one per slider position
};

struct RatingOffer {
  RatingAssignment assignment;
  std::string stimulus_id;
};

/// One running experiment. Every command runs under a single lock, turns
/// into events through the pure planners, and each event is applied and
/// appended before the command returns.
class Experiment {
 public:
  /// Starts a new experiment and logs ExperimentInitialized.
  Experiment(const ExperimentConfig& config, Timestamp now, ExperimentOptions options = {});
  /// Restores from a log, finishing any command cut short by a crash.
  static std::unique_ptr<Experiment> open(const std::filesystem::path& log_path, Timestamp now,
                                          ExperimentOptions options = {});
  /// Rebuilds from in-memory events without a log file.
  static std::unique_ptr<Experiment> from_events(std::vector<Event> events, Timestamp now, ExperimentOptions options = {});

  std::string register_participant(bool prescreened, Timestamp now);

  /// Empty when no slot is open. Throws Error(experiment_closed) after termination.
  std::optional<TrialOffer> request_trial(const std::string& participant_id, Timestamp now);
  void submit_response(const std::string& trial_id, int slider_index, Timestamp now);

  /// Logs termination when the deadline passed or all chains are full.
  Termination poll(Timestamp now);
  void terminate(TerminationReason reason, Timestamp now);

  /// Builds the validation set once the run has ended, using the configured
  /// novel sentences, random count and seed. Idempotent.
  const std::vector<StimulusDescriptor>& build_validation(Timestamp now);
  std::optional<RatingOffer> request_rating(const std::string& participant_id, Timestamp now);
  void submit_rating(const std::string& rating_id, int rating, Timestamp now);

  /// Stimulus id of a validation item; registers it for lazy rendering.
  std::string stimulus_for(const StimulusDescriptor& item);

  ExperimentState state() const;
  std::vector<Event> events() const;
  std::string export_log() const;
  nlohmann::json chains_summary() const;
  const ExperimentConfig& config() const noexcept { return config_; }
  render::StimulusStore& stimuli() noexcept { return *store_; }
  render::Renderer& renderer() noexcept { return *renderer_; }

 private:
  Experiment(ExperimentOptions options, std::vector<Event> events, Timestamp now);
  void setup_rendering();
  void commit(const std::vector<EventPayload>& payloads, Timestamp now);
  void commit_one(const EventPayload& payload, Timestamp now);
  void terminate_if_due(Timestamp now);
  const SentenceRef& sentence(const std::string& id) const;

  ExperimentOptions options_;
  ExperimentConfig config_;
  mutable std::mutex mutex_;
  ExperimentState state_;
  std::vector<Event> events_;
  std::unique_ptr<EventLog> log_;
  std::shared_ptr<render::Renderer> renderer_;
  std::unique_ptr<render::StimulusStore> store_;
};

}  // namespace gsp::service
