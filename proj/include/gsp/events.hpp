#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsp/state.hpp"

namespace gsp {

struct ExperimentInitialized {
  ExperimentConfig config;
  std::string mapping_checksum;
};

struct ParticipantRegistered {
  std::string participant_id;
  bool prescreened = false;
};

struct TrialAssigned {
  TrialAssignment assignment;
};

struct ResponseRecorded {
  std::string trial_id;
  int slider_index = 0;
};

struct IterationAggregated {
  int chain_id = 0;
  int iteration = 0;
  std::vector<int> responses;
  int median = 0;
};

struct ChainAdvanced {
  int chain_id = 0;
  int iteration = 0;  // the iteration the chain moved to
  int dimension = 0;  // the dimension that was set
  int index = 0;
};

struct ChainCompleted {
  int chain_id = 0;
  int iterations = 0;
};

struct ExperimentTerminated {
  TerminationReason reason = TerminationReason::deadline;
  int full_chains = 0;
  int total_chains = 0;
};

struct ValidationSetBuilt {
  std::vector<StimulusDescriptor> items;
  std::uint64_t rng_seed = 0;
};

struct RatingAssigned {
  RatingAssignment assignment;
};

struct RatingRecorded {
  std::string rating_id;
  int rating = 0;
};

using EventPayload =
    std::variant<ExperimentInitialized, ParticipantRegistered, TrialAssigned, ResponseRecorded,
                 IterationAggregated, ChainAdvanced, ChainCompleted, ExperimentTerminated,
                 ValidationSetBuilt, RatingAssigned, RatingRecorded>;

struct Event {
  std::uint64_t seq = 0;
  Timestamp at{};
  EventPayload payload;

  std::string_view type_name() const noexcept;
};

std::string_view event_type_name(const EventPayload& payload) noexcept;

nlohmann::json to_json(const Event& event);
/// Throws CorruptLogError if the record is not a well-formed event.
Event event_from_json(const nlohmann::json& j);

/// Left-fold step. The only code path that mutates an ExperimentState after
/// initialization; live commands and replay both go through it.
void apply(ExperimentState& state, const Event& event);

/// Folds a complete log from scratch. The first event must initialize the
/// experiment and sequence numbers must run 1, 2, 3, ...
ExperimentState fold(const std::vector<Event>& events);

/// Events needed to finish a command whose tail was cut off by a crash: an
/// aggregation without its advancement, an advancement without completion.
std::vector<EventPayload> pending_followups(const ExperimentState& state);

}  // namespace gsp
