#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsp/config.hpp"
#include "gsp/grid.hpp"
#include "gsp/types.hpp"

namespace gsp {

struct ChainSpec {
  int chain_id = 0;
  Emotion emotion = Emotion::anger;
  std::string sentence_id;
  int n_iterations = 20;
  int participants_per_iteration = 5;

  bool operator==(const ChainSpec&) const = default;
};

enum class ChainStatus { active, complete };

struct HistoryEntry {
  int iteration = 0;
  LatentPoint point;

  bool operator==(const HistoryEntry&) const = default;
};

struct AcceptedResponse {
  std::string trial_id;
  std::string participant_id;
  int slider_index = 0;

  bool operator==(const AcceptedResponse&) const = default;
};

struct ChainState {
  ChainSpec spec;
  LatentPoint current_point;
  int iteration = 0;
  int free_dimension = 0;
  /// One entry per visited iteration, starting with the iteration-0 origin.
  std::vector<HistoryEntry> history;
  ChainStatus status = ChainStatus::active;

  // Bookkeeping for the iteration currently in progress.
  std::vector<AcceptedResponse> responses;
  std::vector<std::string> open_trials;  // may include expired ones
  std::optional<int> aggregated_index;    // set between aggregation and advancement
  Timestamp last_update{};

  bool complete() const noexcept { return status == ChainStatus::complete; }
  bool operator==(const ChainState&) const = default;
};

struct TrialAssignment {
  std::string trial_id;
  std::string participant_id;
  int chain_id = 0;
  int iteration = 0;
  int free_dimension = 0;
  int initial_slider_index = 0;
  Timestamp issued_at{};
  Timestamp expires_at{};

  bool operator==(const TrialAssignment&) const = default;
};

struct TrialResponse {
  std::string trial_id;
  int chosen_slider_index = 0;
  Timestamp submitted_at{};
};

struct TrialRecord {
  TrialAssignment assignment;
  std::optional<int> chosen_index;
  std::optional<Timestamp> submitted_at;

  bool answered() const noexcept { return chosen_index.has_value(); }
  bool operator==(const TrialRecord&) const = default;
};

struct Participant {
  std::string id;
  bool prescreened = false;
  Timestamp registered_at{};

  bool operator==(const Participant&) const = default;
};

enum class StimulusKind { trajectory, random, transfer };

std::string_view to_string(StimulusKind kind) noexcept;
std::optional<StimulusKind> parse_stimulus_kind(std::string_view name) noexcept;

/// One stimulus of the validation experiment.
struct StimulusDescriptor {
  std::string item_id;
  StimulusKind kind = StimulusKind::trajectory;
  std::optional<int> chain_id;
  std::optional<Emotion> emotion;  // the chain's target emotion; none for random items
  std::optional<int> iteration;
  std::string sentence_id;
  LatentPoint point;

  bool operator==(const StimulusDescriptor&) const = default;
};

struct RatingAssignment {
  std::string rating_id;
  std::string participant_id;
  std::string item_id;
  Emotion probed_emotion = Emotion::anger;
  Timestamp issued_at{};
  Timestamp expires_at{};
  std::optional<int> rating;
  std::optional<Timestamp> rated_at;

  bool operator==(const RatingAssignment&) const = default;
};

struct PairProgress {
  int collected = 0;
  std::vector<std::string> open;  // unanswered rating ids, possibly expired

  bool operator==(const PairProgress&) const = default;
};

struct ValidationState {
  std::vector<StimulusDescriptor> items;
  std::map<std::string, RatingAssignment> ratings;

  // Derived from items/ratings; rebuilt on load.
  std::map<std::string, std::size_t> item_index;
  std::vector<PairProgress> pairs;  // items.size() x probed emotions, row-major
  std::map<std::string, std::set<std::size_t>> pairs_by_participant;  // pairs each participant was ever assigned

  bool operator==(const ValidationState&) const = default;
};

enum class RunStatus { running, terminated };
enum class TerminationReason { all_complete, deadline, admin };

std::string_view to_string(TerminationReason reason) noexcept;
std::optional<TerminationReason> parse_termination_reason(std::string_view name) noexcept;

struct ExperimentState {
  ExperimentConfig config;
  std::string mapping_checksum;
  Timestamp started_at{};
  Timestamp deadline{};
  std::vector<ChainState> chains;
  std::map<std::string, Participant> participants;
  std::map<std::string, TrialRecord> trials;
  std::uint64_t trials_issued = 0;
  std::uint64_t participants_issued = 0;
  std::uint64_t ratings_issued = 0;
  RunStatus status = RunStatus::running;
  std::optional<TerminationReason> termination;
  std::optional<Timestamp> terminated_at;
  std::optional<ValidationState> validation;
  std::uint64_t last_seq = 0;
  Timestamp last_event_at{};

  int full_chains() const noexcept;
  bool terminated() const noexcept { return status == RunStatus::terminated; }
  const ChainState& chain(int chain_id) const;
  ChainState& chain(int chain_id);

  bool operator==(const ExperimentState&) const = default;
};

nlohmann::json to_json(const LatentPoint& point);
LatentPoint point_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrialAssignment& a);
TrialAssignment assignment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StimulusDescriptor& d);
StimulusDescriptor descriptor_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RatingAssignment& r);
RatingAssignment rating_from_json(const nlohmann::json& j);

/// Canonical serialization. Two states are identical iff their dumps are.
nlohmann::json to_json(const ExperimentState& state);
ExperimentState state_from_json(const nlohmann::json& j);

/// Rebuilds the derived lookup tables of a validation phase.
void reindex(ValidationState& validation, const ExperimentConfig& config);

}  // namespace gsp
