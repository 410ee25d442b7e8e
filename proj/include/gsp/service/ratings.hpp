#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gsp/events.hpp"
#include "gsp/state.hpp"

namespace gsp::service {

/// Least-rated (item, emotion) pair this participant has never been assigned,
/// skipping pairs whose collected plus outstanding ratings reach the target.
/// A participant holding an unexpired open rating gets it back. Pure; the
/// assignment takes effect once its RatingAssigned event is applied.
/// Throws Error(phase) before the validation set exists.
std::optional<RatingAssignment> next_rating_trial(const ExperimentState& state, std::string_view participant_id,
                                                  Timestamp now);

/// Validates a submitted rating and returns its RatingRecorded event.
std::vector<EventPayload> record_rating(const ExperimentState& state, const std::string& rating_id, int rating,
                                        Timestamp now);

/// True once every pair has reached the rating target.
bool ratings_complete(const ExperimentState& state);

}  // namespace gsp::service
