#include "gsp/state.hpp"

#include <algorithm>

#include "gsp/error.hpp"

namespace gsp {

using nlohmann::json;

namespace {

json opt_ms(const std::optional<Timestamp>& t) { return t ? json(to_millis(*t)) : json(nullptr); }

std::optional<Timestamp> opt_ts(const json& j) {
  if (j.is_null()) return std::nullopt;
  return from_millis(j.get<std::int64_t>());
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

Emotion emotion_from(const json& j) {
  const auto e = parse_emotion(j.get<std::string>());
  if (!e) throw Error(Errc::state, "unknown emotion " + j.dump());
  return *e;
}

json to_json(const ChainState& c) {
  json history = json::array();
  for (const auto& h : c.history) history.push_back({{"iteration", h.iteration}, {"point", to_json(h.point)}});
  json responses = json::array();
  for (const auto& r : c.responses) {
    responses.push_back({{"trial_id", r.trial_id}, {"participant_id", r.participant_id}, {"slider_index", r.slider_index}});
  }
  return json{{"chain_id", c.spec.chain_id},
              {"emotion", std::string(to_string(c.spec.emotion))},
              {"sentence_id", c.spec.sentence_id},
              {"n_iterations", c.spec.n_iterations},
              {"participants_per_iteration", c.spec.participants_per_iteration},
              {"current_point", to_json(c.current_point)},
              {"iteration", c.iteration},
              {"free_dimension", c.free_dimension},
              {"history", history},
              {"status", c.complete() ? "complete" : "active"},
              {"responses", responses},
              {"open_trials", c.open_trials},
              {"aggregated_index", opt(c.aggregated_index)},
              {"last_update", to_millis(c.last_update)}};
}

ChainState chain_from_json(const json& j) {
  ChainState c;
  c.spec.chain_id = j.at("chain_id").get<int>();
  c.spec.emotion = emotion_from(j.at("emotion"));
  c.spec.sentence_id = j.at("sentence_id").get<std::string>();
  c.spec.n_iterations = j.at("n_iterations").get<int>();
  c.spec.participants_per_iteration = j.at("participants_per_iteration").get<int>();
  c.current_point = point_from_json(j.at("current_point"));
  c.iteration = j.at("iteration").get<int>();
  c.free_dimension = j.at("free_dimension").get<int>();
  for (const auto& h : j.at("history")) {
    c.history.push_back({h.at("iteration").get<int>(), point_from_json(h.at("point"))});
  }
  c.status = j.at("status").get<std::string>() == "complete" ? ChainStatus::complete : ChainStatus::active;
  for (const auto& r : j.at("responses")) {
    c.responses.push_back({r.at("trial_id").get<std::string>(), r.at("participant_id").get<std::string>(),
                           r.at("slider_index").get<int>()});
  }
  c.open_trials = j.at("open_trials").get<std::vector<std::string>>();
  c.aggregated_index = get_opt<int>(j.at("aggregated_index"));
  c.last_update = from_millis(j.at("last_update").get<std::int64_t>());
  return c;
}

}  // namespace

std::string_view to_string(StimulusKind kind) noexcept {
  switch (kind) {
    case StimulusKind::trajectory: return "trajectory";
    case StimulusKind::random: return "random";
    case StimulusKind::transfer: return "transfer";
  }
  return "unknown";
}

std::optional<StimulusKind> parse_stimulus_kind(std::string_view name) noexcept {
  for (auto k : {StimulusKind::trajectory, StimulusKind::random, StimulusKind::transfer}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(TerminationReason reason) noexcept {
  switch (reason) {
    case TerminationReason::all_complete: return "all-complete";
    case TerminationReason::deadline: return "deadline";
    case TerminationReason::admin: return "admin";
  }
  return "unknown";
}

std::optional<TerminationReason> parse_termination_reason(std::string_view name) noexcept {
  for (auto r : {TerminationReason::all_complete, TerminationReason::deadline, TerminationReason::admin}) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

int ExperimentState::full_chains() const noexcept {
  return static_cast<int>(std::count_if(chains.begin(), chains.end(), [](const ChainState& c) { return c.complete(); }));
}

const ChainState& ExperimentState::chain(int chain_id) const {
  if (chain_id < 0 || chain_id >= static_cast<int>(chains.size())) {
    throw Error(Errc::not_found, "no chain " + std::to_string(chain_id));
  }
  return chains[static_cast<std::size_t>(chain_id)];
}

ChainState& ExperimentState::chain(int chain_id) {
  return const_cast<ChainState&>(std::as_const(*this).chain(chain_id));
}

json to_json(const LatentPoint& point) { return json(point.indices); }

LatentPoint point_from_json(const json& j) { return LatentPoint{j.get<std::vector<int>>()}; }

json to_json(const TrialAssignment& a) {
  return json{{"trial_id", a.trial_id},
              {"participant_id", a.participant_id},
              {"chain_id", a.chain_id},
              {"iteration", a.iteration},
              {"free_dimension", a.free_dimension},
              {"initial_slider_index", a.initial_slider_index},
              {"issued_at", to_millis(a.issued_at)},
              {"expires_at", to_millis(a.expires_at)}};
}

TrialAssignment assignment_from_json(const json& j) {
  TrialAssignment a;
  a.trial_id = j.at("trial_id").get<std::string>();
  a.participant_id = j.at("participant_id").get<std::string>();
  a.chain_id = j.at("chain_id").get<int>();
  a.iteration = j.at("iteration").get<int>();
  a.free_dimension = j.at("free_dimension").get<int>();
  a.initial_slider_index = j.at("initial_slider_index").get<int>();
  a.issued_at = from_millis(j.at("issued_at").get<std::int64_t>());
  a.expires_at = from_millis(j.at("expires_at").get<std::int64_t>());
  return a;
}

json to_json(const StimulusDescriptor& d) {
  return json{{"item_id", d.item_id},
              {"kind", std::string(to_string(d.kind))},
              {"chain_id", opt(d.chain_id)},
              {"emotion", d.emotion ? json(std::string(to_string(*d.emotion))) : json(nullptr)},
              {"iteration", opt(d.iteration)},
              {"sentence_id", d.sentence_id},
              {"point", to_json(d.point)}};
}

StimulusDescriptor descriptor_from_json(const json& j) {
  StimulusDescriptor d;
  d.item_id = j.at("item_id").get<std::string>();
  const auto kind = parse_stimulus_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error(Errc::state, "unknown stimulus kind " + j.at("kind").dump());
  d.kind = *kind;
  d.chain_id = get_opt<int>(j.at("chain_id"));
  if (!j.at("emotion").is_null()) d.emotion = emotion_from(j.at("emotion"));
  d.iteration = get_opt<int>(j.at("iteration"));
  d.sentence_id = j.at("sentence_id").get<std::string>();
  d.point = point_from_json(j.at("point"));
  return d;
}

json to_json(const RatingAssignment& r) {
  return json{{"rating_id", r.rating_id},
              {"participant_id", r.participant_id},
              {"item_id", r.item_id},
              {"probed_emotion", std::string(to_string(r.probed_emotion))},
              {"issued_at", to_millis(r.issued_at)},
              {"expires_at", to_millis(r.expires_at)},
              {"rating", opt(r.rating)},
              {"rated_at", opt_ms(r.rated_at)}};
}

RatingAssignment rating_from_json(const json& j) {
  RatingAssignment r;
  r.rating_id = j.at("rating_id").get<std::string>();
  r.participant_id = j.at("participant_id").get<std::string>();
  r.item_id = j.at("item_id").get<std::string>();
  r.probed_emotion = emotion_from(j.at("probed_emotion"));
  r.issued_at = from_millis(j.at("issued_at").get<std::int64_t>());
  r.expires_at = from_millis(j.at("expires_at").get<std::int64_t>());
  if (j.contains("rating")) r.rating = get_opt<int>(j.at("rating"));
  if (j.contains("rated_at")) r.rated_at = opt_ts(j.at("rated_at"));
  return r;
}

void reindex(ValidationState& v, const ExperimentConfig& config) {
  const std::size_t n_emotions = config.emotions.size();
  v.item_index.clear();
  for (std::size_t i = 0; i < v.items.size(); ++i) v.item_index[v.items[i].item_id] = i;
  v.pairs.assign(v.items.size() * n_emotions, PairProgress{});
  v.pairs_by_participant.clear();
  for (const auto& [id, r] : v.ratings) {
    const auto item = v.item_index.find(r.item_id);
    const auto e = std::find(config.emotions.begin(), config.emotions.end(), r.probed_emotion);
    if (item == v.item_index.end() || e == config.emotions.end()) {
      throw Error(Errc::state, "rating " + id + " references an unknown item or emotion");
    }
    const std::size_t slot = item->second * n_emotions + static_cast<std::size_t>(e - config.emotions.begin());
    v.pairs_by_participant[r.participant_id].insert(slot);
    auto& pair = v.pairs[slot];
    if (r.rating) {
      ++pair.collected;
    } else {
      pair.open.push_back(id);
    }
  }
}

json to_json(const ExperimentState& s) {
  json chains = json::array();
  for (const auto& c : s.chains) chains.push_back(to_json(c));
  json participants = json::object();
  for (const auto& [id, p] : s.participants) {
    participants[id] = {{"prescreened", p.prescreened}, {"registered_at", to_millis(p.registered_at)}};
  }
  json trials = json::object();
  for (const auto& [id, t] : s.trials) {
    trials[id] = {{"assignment", to_json(t.assignment)},
                  {"chosen_index", opt(t.chosen_index)},
                  {"submitted_at", opt_ms(t.submitted_at)}};
  }
  json validation = nullptr;
  if (s.validation) {
    json items = json::array();
    for (const auto& d : s.validation->items) items.push_back(to_json(d));
    json ratings = json::object();
    for (const auto& [id, r] : s.validation->ratings) ratings[id] = to_json(r);
    validation = {{"items", items}, {"ratings", ratings}};
  }
  return json{{"config", to_json(s.config)},
              {"mapping_checksum", s.mapping_checksum},
              {"started_at", to_millis(s.started_at)},
              {"deadline", to_millis(s.deadline)},
              {"chains", chains},
              {"participants", participants},
              {"trials", trials},
              {"trials_issued", s.trials_issued},
              {"participants_issued", s.participants_issued},
              {"ratings_issued", s.ratings_issued},
              {"status", s.terminated() ? "terminated" : "running"},
              {"termination", s.termination ? json(std::string(to_string(*s.termination))) : json(nullptr)},
              {"terminated_at", opt_ms(s.terminated_at)},
              {"validation", validation},
              {"last_seq", s.last_seq},
              {"last_event_at", to_millis(s.last_event_at)}};
}

ExperimentState state_from_json(const json& j) {
  ExperimentState s;
  s.config = config_from_json(j.at("config"));
  s.mapping_checksum = j.at("mapping_checksum").get<std::string>();
  s.started_at = from_millis(j.at("started_at").get<std::int64_t>());
  s.deadline = from_millis(j.at("deadline").get<std::int64_t>());
  for (const auto& c : j.at("chains")) s.chains.push_back(chain_from_json(c));
  for (const auto& [id, p] : j.at("participants").items()) {
    s.participants[id] = {id, p.at("prescreened").get<bool>(), from_millis(p.at("registered_at").get<std::int64_t>())};
  }
  for (const auto& [id, t] : j.at("trials").items()) {
    s.trials[id] = {assignment_from_json(t.at("assignment")), get_opt<int>(t.at("chosen_index")),
                    opt_ts(t.at("submitted_at"))};
  }
  s.trials_issued = j.at("trials_issued").get<std::uint64_t>();
  s.participants_issued = j.at("participants_issued").get<std::uint64_t>();
  s.ratings_issued = j.at("ratings_issued").get<std::uint64_t>();
  s.status = j.at("status").get<std::string>() == "terminated" ? RunStatus::terminated : RunStatus::running;
  if (!j.at("termination").is_null()) {
    s.termination = parse_termination_reason(j.at("termination").get<std::string>());
  }
  s.terminated_at = opt_ts(j.at("terminated_at"));
  if (!j.at("validation").is_null()) {
    ValidationState v;
    for (const auto& d : j.at("validation").at("items")) v.items.push_back(descriptor_from_json(d));
    for (const auto& [id, r] : j.at("validation").at("ratings").items()) v.ratings[id] = rating_from_json(r);
    reindex(v, s.config);
    s.validation = std::move(v);
  }
  s.last_seq = j.at("last_seq").get<std::uint64_t>();
  s.last_event_at = from_millis(j.at("last_event_at").get<std::int64_t>());
  return s;
}

}  // namespace gsp
