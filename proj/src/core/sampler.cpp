#include "gsp/sampler.hpp"

#include <algorithm>
#include <cstdio>
#include <tuple>

#include "gsp/error.hpp"

namespace gsp {

namespace {

std::string padded(char prefix, std::uint64_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*llu", prefix, width, static_cast<unsigned long long>(n));
  return buf;
}

bool outstanding(const TrialRecord& t, Timestamp now) { return !t.answered() && t.assignment.expires_at > now; }

}  // namespace

int aggregate_iteration(std::span<const int> responses, int expected_count) {
  if (expected_count < 1 || expected_count % 2 == 0) {
    throw Error(Errc::arity, "aggregation needs an odd response count, got " + std::to_string(expected_count));
  }
  if (static_cast<int>(responses.size()) != expected_count) {
    throw Error(Errc::arity, "expected " + std::to_string(expected_count) + " responses, got " +
                                 std::to_string(responses.size()));
  }
  std::vector<int> sorted(responses.begin(), responses.end());
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  return *mid;
}

ChainState advance_chain(ChainState chain, int aggregated_index, int dimensions) {
  if (chain.complete()) {
    throw Error(Errc::state, "chain " + std::to_string(chain.spec.chain_id) + " is already complete");
  }
  if (dimensions < 1 || static_cast<int>(chain.current_point.dimensions()) != dimensions) {
    throw Error(Errc::shape, "chain point has " + std::to_string(chain.current_point.dimensions()) +
                                 " dimensions, expected " + std::to_string(dimensions));
  }
  chain.current_point.indices[static_cast<std::size_t>(chain.free_dimension)] = aggregated_index;
  chain.iteration += 1;
  chain.free_dimension = chain.iteration % dimensions;
  chain.history.push_back({chain.iteration, chain.current_point});
  chain.responses.clear();
  chain.open_trials.clear();
  chain.aggregated_index.reset();
  if (chain.iteration >= chain.spec.n_iterations) chain.status = ChainStatus::complete;
  return chain;
}

ExperimentState init_experiment(const ExperimentConfig& config, Timestamp now, std::string mapping_checksum) {
  validate(config);
  const int cells = static_cast<int>(config.emotions.size() * config.sentences.size());
  if (config.n_chains % cells != 0) {
    throw Error(Errc::balanced_design, std::to_string(config.n_chains) + " chains cannot be balanced over " +
                                           std::to_string(cells) + " (emotion, sentence) pairs");
  }
  const int replicates = config.n_chains / cells;
  const SliderGrid grid = config.grid_spec();
  const LatentPoint origin = origin_point(grid, config.dimensions);

  ExperimentState s;
  s.config = config;
  s.mapping_checksum = std::move(mapping_checksum);
  s.started_at = now;
  s.deadline = now + std::chrono::duration_cast<Milliseconds>(std::chrono::duration<double, std::ratio<3600>>(config.duration_hours));
  s.last_event_at = now;
  int id = 0;
  for (Emotion emotion : config.emotions) {
    for (const auto& sentence : config.sentences) {
      for (int r = 0; r < replicates; ++r) {
        ChainState c;
        c.spec = {id++, emotion, sentence.id, config.n_iterations, config.participants_per_iteration};
        c.current_point = origin;
        c.history.push_back({0, origin});
        c.last_update = now;
        s.chains.push_back(std::move(c));
      }
    }
  }
  return s;
}

std::string participant_token(std::uint64_t seed, std::uint64_t n) {
  auto rng = substream(seed, "participant-token", n);
  char buf[40];
  std::snprintf(buf, sizeof buf, "p%06llu-%016llx", static_cast<unsigned long long>(n),
                static_cast<unsigned long long>(rng()));
  return buf;
}

std::optional<TrialAssignment> assign_trial(std::string_view participant_id, const ExperimentState& state,
                                            Timestamp now) {
  const auto participant = state.participants.find(std::string(participant_id));
  if (participant == state.participants.end()) {
    throw Error(Errc::auth, "unknown participant");
  }
  if (state.config.require_prescreening && !participant->second.prescreened) {
    throw Error(Errc::auth, "participant has not passed prescreening");
  }
  if (state.terminated()) throw Error(Errc::experiment_closed, "experiment has terminated");

  // Hand back a trial the participant is still holding.
  for (const auto& chain : state.chains) {
    for (const auto& id : chain.open_trials) {
      const auto& t = state.trials.at(id);
      if (t.assignment.participant_id == participant_id && outstanding(t, now)) return t.assignment;
    }
  }

  const ChainState* best = nullptr;
  int best_outstanding = 0;
  for (const auto& chain : state.chains) {
    if (chain.complete() || chain.iteration >= chain.spec.n_iterations || chain.aggregated_index) continue;
    const bool answered = std::any_of(chain.responses.begin(), chain.responses.end(),
                                      [&](const AcceptedResponse& r) { return r.participant_id == participant_id; });
    if (answered) continue;
    int open = 0;
    for (const auto& id : chain.open_trials) open += outstanding(state.trials.at(id), now) ? 1 : 0;
    if (static_cast<int>(chain.responses.size()) + open >= chain.spec.participants_per_iteration) continue;
    if (!best || open < best_outstanding) {
      best = &chain;
      best_outstanding = open;
    }
  }
  if (!best) return std::nullopt;

  const std::uint64_t n = state.trials_issued + 1;
  auto rng = substream(state.config.seed, "slider-init", n);
  std::uniform_int_distribution<int> pick(0, state.config.grid.n - 1);
  TrialAssignment a;
  a.trial_id = padded('t', n, 8);
  a.participant_id = std::string(participant_id);
  a.chain_id = best->spec.chain_id;
  a.iteration = best->iteration;
  a.free_dimension = best->free_dimension;
  a.initial_slider_index = pick(rng);
  a.issued_at = now;
  a.expires_at = now + std::chrono::seconds(state.config.assignment_timeout_s);
  return a;
}

std::vector<EventPayload> record_response(const ExperimentState& state, const TrialResponse& response) {
  if (state.terminated()) throw Error(Errc::experiment_closed, "experiment has terminated");
  const auto it = state.trials.find(response.trial_id);
  if (it == state.trials.end()) throw Error(Errc::not_found, "unknown trial " + response.trial_id);
  const TrialRecord& trial = it->second;
  if (trial.answered()) throw Error(Errc::duplicate, "trial " + response.trial_id + " was already answered");
  if (response.chosen_slider_index < 0 || response.chosen_slider_index >= state.config.grid.n) {
    throw Error(Errc::range, "slider index " + std::to_string(response.chosen_slider_index) + " outside the grid");
  }
  const ChainState& chain = state.chain(trial.assignment.chain_id);
  const int ppi = chain.spec.participants_per_iteration;
  if (response.submitted_at > trial.assignment.expires_at || chain.iteration != trial.assignment.iteration ||
      chain.complete() || static_cast<int>(chain.responses.size()) >= ppi) {
    throw Error(Errc::expired, "trial " + response.trial_id + " has expired");
  }

  std::vector<EventPayload> events;
  events.push_back(ResponseRecorded{response.trial_id, response.chosen_slider_index});
  if (static_cast<int>(chain.responses.size()) + 1 == ppi) {
    std::vector<int> responses;
    for (const auto& r : chain.responses) responses.push_back(r.slider_index);
    responses.push_back(response.chosen_slider_index);
    const int median = aggregate_iteration(responses, ppi);
    events.push_back(IterationAggregated{chain.spec.chain_id, chain.iteration, responses, median});
    events.push_back(ChainAdvanced{chain.spec.chain_id, chain.iteration + 1, chain.free_dimension, median});
    if (chain.iteration + 1 == chain.spec.n_iterations) {
      events.push_back(ChainCompleted{chain.spec.chain_id, chain.spec.n_iterations});
    }
  }
  return events;
}

Termination check_termination(const ExperimentState& state, Timestamp now) {
  Termination t;
  t.full_chains = state.full_chains();
  if (state.terminated()) {
    t.terminated = true;
    t.reason = state.termination;
  } else if (!state.chains.empty() && t.full_chains == static_cast<int>(state.chains.size())) {
    t.terminated = true;
    t.reason = TerminationReason::all_complete;
  } else if (now >= state.deadline) {
    t.terminated = true;
    t.reason = TerminationReason::deadline;
  }
  return t;
}

std::vector<StimulusDescriptor> build_validation_set(const ExperimentState& state,
                                                     std::span<const SentenceRef> novel_sentences, int n_random,
                                                     std::uint64_t rng_seed) {
  if (!state.terminated()) throw Error(Errc::phase, "validation set requires a terminated experiment");
  if (state.full_chains() == 0) throw Error(Errc::empty_experiment, "no full chains to validate");
  if (n_random < 0) throw Error(Errc::range, "n_random must be >= 0");

  std::vector<StimulusDescriptor> items;
  std::uint64_t n = 0;
  auto next_id = [&] { return padded('v', ++n, 5); };
  for (const auto& chain : state.chains) {
    if (!chain.complete()) continue;
    for (const auto& h : chain.history) {
      items.push_back({next_id(), StimulusKind::trajectory, chain.spec.chain_id, chain.spec.emotion, h.iteration,
                       chain.spec.sentence_id, h.point});
    }
  }
  auto rng = substream(rng_seed, "validation-random", 0);
  std::uniform_int_distribution<int> position(0, state.config.grid.n - 1);
  std::uniform_int_distribution<std::size_t> sentence(0, state.config.sentences.size() - 1);
  for (int r = 0; r < n_random; ++r) {
    LatentPoint p;
    for (int d = 0; d < state.config.dimensions; ++d) p.indices.push_back(position(rng));
    const auto& s = state.config.sentences[sentence(rng)];
    items.push_back({next_id(), StimulusKind::random, std::nullopt, std::nullopt, std::nullopt, s.id, std::move(p)});
  }
  for (const auto& chain : state.chains) {
    if (!chain.complete()) continue;
    for (const auto& novel : novel_sentences) {
      items.push_back({next_id(), StimulusKind::transfer, chain.spec.chain_id, chain.spec.emotion,
                       chain.spec.n_iterations, novel.id, chain.current_point});
    }
  }
  return items;
}

ExperimentState apply_all(ExperimentState state, const std::vector<EventPayload>& events, Timestamp at) {
  for (const auto& p : events) apply(state, Event{state.last_seq + 1, at, p});
  return state;
}

}  // namespace gsp
