#include "gsp/service/ratings.hpp"

#include <cstdio>
#include <tuple>

#include "gsp/error.hpp"

namespace gsp::service {

namespace {

bool outstanding(const RatingAssignment& r, Timestamp now) { return !r.rating && r.expires_at > now; }

const ValidationState& validation_of(const ExperimentState& state) {
  if (!state.validation) throw Error(Errc::phase, "validation set has not been built");
  return *state.validation;
}

}  // namespace

std::optional<RatingAssignment> next_rating_trial(const ExperimentState& state, std::string_view participant_id,
                                                  Timestamp now) {
  const auto& v = validation_of(state);
  const std::string pid(participant_id);
  if (!state.participants.contains(pid)) throw Error(Errc::auth, "unknown participant");

  const auto assigned = v.pairs_by_participant.find(pid);
  if (assigned != v.pairs_by_participant.end()) {
    for (std::size_t pair : assigned->second) {
      for (const auto& id : v.pairs[pair].open) {
        const auto& r = v.ratings.at(id);
        if (r.participant_id == pid && outstanding(r, now)) return r;
      }
    }
  }

  const int target = state.config.rating_target;
  std::optional<std::size_t> best;
  std::tuple<int, int> best_key{0, 0};
  for (std::size_t pair = 0; pair < v.pairs.size(); ++pair) {
    const auto& progress = v.pairs[pair];
    if (progress.collected >= target) continue;
    if (assigned != v.pairs_by_participant.end() && assigned->second.contains(pair)) continue;
    int open = 0;
    for (const auto& id : progress.open) open += outstanding(v.ratings.at(id), now) ? 1 : 0;
    if (progress.collected + open >= target) continue;
    const std::tuple<int, int> key{progress.collected, open};
    if (!best || key < best_key) {
      best = pair;
      best_key = key;
    }
  }
  if (!best) return std::nullopt;

  const std::size_t n_emotions = state.config.emotions.size();
  char id[32];
  std::snprintf(id, sizeof id, "r%08llu", static_cast<unsigned long long>(state.ratings_issued + 1));
  RatingAssignment a;
  a.rating_id = id;
  a.participant_id = pid;
  a.item_id = v.items[*best / n_emotions].item_id;
  a.probed_emotion = state.config.emotions[*best % n_emotions];
  a.issued_at = now;
  a.expires_at = now + std::chrono::seconds(state.config.assignment_timeout_s);
  return a;
}

std::vector<EventPayload> record_rating(const ExperimentState& state, const std::string& rating_id, int rating,
                                        Timestamp now) {
  const auto& v = validation_of(state);
  if (rating < 1 || rating > 4) throw Error(Errc::range, "rating must be 1..4, got " + std::to_string(rating));
  const auto it = v.ratings.find(rating_id);
  if (it == v.ratings.end()) throw Error(Errc::not_found, "unknown rating " + rating_id);
  if (it->second.rating) throw Error(Errc::duplicate, "rating " + rating_id + " was already submitted");
  if (now > it->second.expires_at) throw Error(Errc::expired, "rating " + rating_id + " has expired");
  return {RatingRecorded{rating_id, rating}};
}

bool ratings_complete(const ExperimentState& state) {
  if (!state.validation) return false;
  for (const auto& p : state.validation->pairs) {
    if (p.collected < state.config.rating_target) return false;
  }
  return true;
}

}  // namespace gsp::service
