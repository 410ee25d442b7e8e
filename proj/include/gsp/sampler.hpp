#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gsp/events.hpp"
#include "gsp/state.hpp"

namespace gsp {

/// Median of an odd-length list of grid indices. Always one of the inputs.
int aggregate_iteration(std::span<const int> responses, int expected_count);

/// Writes the aggregated index into the free dimension and moves the chain
/// to the next iteration, cycling the free dimension through all `dimensions`.
ChainState advance_chain(ChainState chain, int aggregated_index, int dimensions);

/// Balanced design: every (emotion, sentence) pair gets n_chains / (E*S)
/// chains, laid out emotion-major so chain ids are reproducible.
ExperimentState init_experiment(const ExperimentConfig& config, Timestamp now,
                                std::string mapping_checksum = {});

/// Token issued to the n-th participant of an experiment.
std::string participant_token(std::uint64_t seed, std::uint64_t n);

/// Chooses the next slider task for a participant, or nothing if every open
/// slot is taken. A participant already holding an unexpired, unanswered trial
/// gets that trial back. Pure: the assignment takes effect once its
/// TrialAssigned event is applied.
std::optional<TrialAssignment> assign_trial(std::string_view participant_id, const ExperimentState& state,
                                            Timestamp now);

/// Validates a response and returns the events it triggers: ResponseRecorded,
/// and when it fills the iteration, IterationAggregated + ChainAdvanced
/// (+ ChainCompleted).
std::vector<EventPayload> record_response(const ExperimentState& state, const TrialResponse& response);

struct Termination {
  bool terminated = false;
  std::optional<TerminationReason> reason;
  int full_chains = 0;
};

Termination check_termination(const ExperimentState& state, Timestamp now);

/// Trajectory items for every full chain at every iteration, `n_random`
/// uniform grid points with a random original sentence, and one transfer item
/// per (full chain, novel sentence).
std::vector<StimulusDescriptor> build_validation_set(const ExperimentState& state,
                                                     std::span<const SentenceRef> novel_sentences,
                                                     int n_random, std::uint64_t rng_seed);

/// Convenience wrapper: plans and applies in one step on a copy.
ExperimentState apply_all(ExperimentState state, const std::vector<EventPayload>& events, Timestamp at);

}  // namespace gsp
