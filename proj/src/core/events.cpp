#include "gsp/events.hpp"

#include <algorithm>

#include "gsp/error.hpp"
#include "gsp/sampler.hpp"

namespace gsp {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::string_view kTypeNames[] = {
    "ExperimentInitialized", "ParticipantRegistered", "TrialAssigned",        "ResponseRecorded",
    "IterationAggregated",   "ChainAdvanced",         "ChainCompleted",       "ExperimentTerminated",
    "ValidationSetBuilt",    "RatingAssigned",        "RatingRecorded"};
static_assert(std::size(kTypeNames) == std::variant_size_v<EventPayload>);

json payload_to_json(const EventPayload& payload) {
  return std::visit(
      overloaded{
          [](const ExperimentInitialized& e) {
            return json{{"config", to_json(e.config)}, {"mapping_checksum", e.mapping_checksum}};
          },
          [](const ParticipantRegistered& e) {
            return json{{"participant_id", e.participant_id}, {"prescreened", e.prescreened}};
          },
          [](const TrialAssigned& e) { return to_json(e.assignment); },
          [](const ResponseRecorded& e) { return json{{"trial_id", e.trial_id}, {"slider_index", e.slider_index}}; },
          [](const IterationAggregated& e) {
            return json{{"chain_id", e.chain_id}, {"iteration", e.iteration}, {"responses", e.responses}, {"median", e.median}};
          },
          [](const ChainAdvanced& e) {
            return json{{"chain_id", e.chain_id}, {"iteration", e.iteration}, {"dimension", e.dimension}, {"index", e.index}};
          },
          [](const ChainCompleted& e) { return json{{"chain_id", e.chain_id}, {"iterations", e.iterations}}; },
          [](const ExperimentTerminated& e) {
            return json{{"reason", std::string(to_string(e.reason))},
                        {"full_chains", e.full_chains},
                        {"total_chains", e.total_chains}};
          },
          [](const ValidationSetBuilt& e) {
            json items = json::array();
            for (const auto& d : e.items) items.push_back(to_json(d));
            return json{{"items", items}, {"rng_seed", e.rng_seed}};
          },
          [](const RatingAssigned& e) {
            json j = to_json(e.assignment);
            j.erase("rating");
            j.erase("rated_at");
            return j;
          },
          [](const RatingRecorded& e) { return json{{"rating_id", e.rating_id}, {"rating", e.rating}}; },
      },
      payload);
}

EventPayload payload_from_json(std::string_view type, const json& p) {
  if (type == "ExperimentInitialized") {
    return ExperimentInitialized{config_from_json(p.at("config")), p.at("mapping_checksum").get<std::string>()};
  }
  if (type == "ParticipantRegistered") {
    return ParticipantRegistered{p.at("participant_id").get<std::string>(), p.at("prescreened").get<bool>()};
  }
  if (type == "TrialAssigned") return TrialAssigned{assignment_from_json(p)};
  if (type == "ResponseRecorded") {
    return ResponseRecorded{p.at("trial_id").get<std::string>(), p.at("slider_index").get<int>()};
  }
  if (type == "IterationAggregated") {
    return IterationAggregated{p.at("chain_id").get<int>(), p.at("iteration").get<int>(),
                               p.at("responses").get<std::vector<int>>(), p.at("median").get<int>()};
  }
  if (type == "ChainAdvanced") {
    return ChainAdvanced{p.at("chain_id").get<int>(), p.at("iteration").get<int>(), p.at("dimension").get<int>(),
                         p.at("index").get<int>()};
  }
  if (type == "ChainCompleted") return ChainCompleted{p.at("chain_id").get<int>(), p.at("iterations").get<int>()};
  if (type == "ExperimentTerminated") {
    const auto reason = parse_termination_reason(p.at("reason").get<std::string>());
    if (!reason) throw std::invalid_argument("unknown termination reason");
    return ExperimentTerminated{*reason, p.at("full_chains").get<int>(), p.at("total_chains").get<int>()};
  }
  if (type == "ValidationSetBuilt") {
    ValidationSetBuilt e;
    for (const auto& d : p.at("items")) e.items.push_back(descriptor_from_json(d));
    e.rng_seed = p.at("rng_seed").get<std::uint64_t>();
    return e;
  }
  if (type == "RatingAssigned") return RatingAssigned{rating_from_json(p)};
  if (type == "RatingRecorded") return RatingRecorded{p.at("rating_id").get<std::string>(), p.at("rating").get<int>()};
  throw std::invalid_argument("unknown event type '" + std::string(type) + "'");
}

[[noreturn]] void inconsistent(const Event& e, const std::string& what) {
  throw CorruptLogError(e.seq, std::string(e.type_name()) + " inconsistent with state: " + what);
}

TrialRecord& trial_of(ExperimentState& s, const Event& e, const std::string& id) {
  const auto it = s.trials.find(id);
  if (it == s.trials.end()) inconsistent(e, "unknown trial " + id);
  return it->second;
}

ChainState& chain_of(ExperimentState& s, const Event& e, int chain_id) {
  if (chain_id < 0 || chain_id >= static_cast<int>(s.chains.size())) inconsistent(e, "unknown chain");
  return s.chains[static_cast<std::size_t>(chain_id)];
}

std::size_t emotion_slot(const ExperimentConfig& config, Emotion e) {
  return static_cast<std::size_t>(std::find(config.emotions.begin(), config.emotions.end(), e) -
                                  config.emotions.begin());
}

void erase_value(std::vector<std::string>& v, const std::string& value) {
  v.erase(std::remove(v.begin(), v.end(), value), v.end());
}

}  // namespace

std::string_view event_type_name(const EventPayload& payload) noexcept { return kTypeNames[payload.index()]; }

std::string_view Event::type_name() const noexcept { return event_type_name(payload); }

json to_json(const Event& event) {
  return json{{"seq", event.seq},
              {"ts", to_millis(event.at)},
              {"type", std::string(event.type_name())},
              {"payload", payload_to_json(event.payload)}};
}

Event event_from_json(const json& j) {
  const std::uint64_t seq = j.contains("seq") && j["seq"].is_number_unsigned() ? j["seq"].get<std::uint64_t>() : 0;
  try {
    Event e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.at = from_millis(j.at("ts").get<std::int64_t>());
    e.payload = payload_from_json(j.at("type").get<std::string>(), j.at("payload"));
    return e;
  } catch (const CorruptLogError&) {
    throw;
  } catch (const std::exception& ex) {
    throw CorruptLogError(seq, std::string("malformed event: ") + ex.what());
  }
}

void apply(ExperimentState& s, const Event& e) {
  if (e.seq != s.last_seq + 1) {
    throw CorruptLogError(s.last_seq + 1, "expected seq " + std::to_string(s.last_seq + 1) + ", found " +
                                              std::to_string(e.seq));
  }
  if (s.chains.empty() && !std::holds_alternative<ExperimentInitialized>(e.payload)) {
    throw CorruptLogError(e.seq, "log must start with ExperimentInitialized");
  }
  std::visit(
      overloaded{
          [&](const ExperimentInitialized& p) {
            if (!s.chains.empty()) inconsistent(e, "experiment already initialized");
            s = init_experiment(p.config, e.at, p.mapping_checksum);
          },
          [&](const ParticipantRegistered& p) {
            if (s.participants.contains(p.participant_id)) inconsistent(e, "participant registered twice");
            s.participants[p.participant_id] = {p.participant_id, p.prescreened, e.at};
            ++s.participants_issued;
          },
          [&](const TrialAssigned& p) {
            const auto& a = p.assignment;
            if (s.trials.contains(a.trial_id)) inconsistent(e, "trial issued twice");
            auto& chain = chain_of(s, e, a.chain_id);
            if (chain.iteration != a.iteration || chain.complete()) inconsistent(e, "trial for a stale iteration");
            // Drop trials that had already expired when this one was issued.
            std::erase_if(chain.open_trials,
                          [&](const std::string& id) { return s.trials.at(id).assignment.expires_at <= e.at; });
            chain.open_trials.push_back(a.trial_id);
            s.trials[a.trial_id] = TrialRecord{a, std::nullopt, std::nullopt};
            ++s.trials_issued;
          },
          [&](const ResponseRecorded& p) {
            auto& trial = trial_of(s, e, p.trial_id);
            if (trial.answered()) inconsistent(e, "trial answered twice");
            auto& chain = chain_of(s, e, trial.assignment.chain_id);
            if (chain.iteration != trial.assignment.iteration ||
                static_cast<int>(chain.responses.size()) >= chain.spec.participants_per_iteration) {
              inconsistent(e, "response does not fit the chain's iteration");
            }
            trial.chosen_index = p.slider_index;
            trial.submitted_at = e.at;
            erase_value(chain.open_trials, p.trial_id);
            chain.responses.push_back({p.trial_id, trial.assignment.participant_id, p.slider_index});
            chain.last_update = e.at;
          },
          [&](const IterationAggregated& p) {
            auto& chain = chain_of(s, e, p.chain_id);
            if (chain.iteration != p.iteration || chain.aggregated_index) inconsistent(e, "duplicate aggregation");
            std::vector<int> got;
            for (const auto& r : chain.responses) got.push_back(r.slider_index);
            if (got != p.responses) inconsistent(e, "aggregated responses differ from recorded ones");
            chain.aggregated_index = p.median;
            chain.last_update = e.at;
          },
          [&](const ChainAdvanced& p) {
            auto& chain = chain_of(s, e, p.chain_id);
            if (!chain.aggregated_index || *chain.aggregated_index != p.index) inconsistent(e, "advance without aggregation");
            if (chain.free_dimension != p.dimension || chain.iteration + 1 != p.iteration) {
              inconsistent(e, "advance to an unexpected iteration or dimension");
            }
            const bool was_active = !chain.complete();
            chain = advance_chain(std::move(chain), p.index, s.config.dimensions);
            if (was_active && chain.complete()) {
              // Completion is announced by its own event; keep the chain active until then.
              chain.status = ChainStatus::active;
            }
            chain.last_update = e.at;
          },
          [&](const ChainCompleted& p) {
            auto& chain = chain_of(s, e, p.chain_id);
            if (chain.iteration != chain.spec.n_iterations) inconsistent(e, "completion before the last iteration");
            chain.status = ChainStatus::complete;
            chain.last_update = e.at;
          },
          [&](const ExperimentTerminated& p) {
            if (s.terminated()) inconsistent(e, "terminated twice");
            s.status = RunStatus::terminated;
            s.termination = p.reason;
            s.terminated_at = e.at;
          },
          [&](const ValidationSetBuilt& p) {
            if (!s.terminated() || s.validation) inconsistent(e, "validation set built out of phase");
            ValidationState v;
            v.items = p.items;
            reindex(v, s.config);
            s.validation = std::move(v);
          },
          [&](const RatingAssigned& p) {
            if (!s.validation) inconsistent(e, "rating before validation set");
            auto& v = *s.validation;
            const auto item = v.item_index.find(p.assignment.item_id);
            const auto slot = emotion_slot(s.config, p.assignment.probed_emotion);
            if (item == v.item_index.end() || slot >= s.config.emotions.size()) inconsistent(e, "unknown rating target");
            if (v.ratings.contains(p.assignment.rating_id)) inconsistent(e, "rating issued twice");
            RatingAssignment a = p.assignment;
            a.rating.reset();
            a.rated_at.reset();
            const std::size_t pair = item->second * s.config.emotions.size() + slot;
            if (!v.pairs_by_participant[a.participant_id].insert(pair).second) {
              inconsistent(e, "participant assigned the same pair twice");
            }
            v.pairs[pair].open.push_back(a.rating_id);
            v.ratings[a.rating_id] = std::move(a);
            ++s.ratings_issued;
          },
          [&](const RatingRecorded& p) {
            if (!s.validation) inconsistent(e, "rating before validation set");
            auto& v = *s.validation;
            const auto it = v.ratings.find(p.rating_id);
            if (it == v.ratings.end() || it->second.rating) inconsistent(e, "unknown or duplicate rating");
            it->second.rating = p.rating;
            it->second.rated_at = e.at;
            const auto idx = v.item_index.at(it->second.item_id);
            auto& pair = v.pairs[idx * s.config.emotions.size() + emotion_slot(s.config, it->second.probed_emotion)];
            erase_value(pair.open, p.rating_id);
            ++pair.collected;
          },
      },
      e.payload);
  s.last_seq = e.seq;
  s.last_event_at = e.at;
}

ExperimentState fold(const std::vector<Event>& events) {
  if (events.empty()) throw CorruptLogError(1, "empty log has no ExperimentInitialized event");
  ExperimentState state;
  for (const auto& e : events) apply(state, e);
  return state;
}

std::vector<EventPayload> pending_followups(const ExperimentState& s) {
  std::vector<EventPayload> out;
  for (const auto& chain : s.chains) {
    if (chain.complete()) continue;
    const int ppi = chain.spec.participants_per_iteration;
    if (chain.iteration >= chain.spec.n_iterations) {
      out.push_back(ChainCompleted{chain.spec.chain_id, chain.iteration});
      continue;
    }
    std::optional<int> median = chain.aggregated_index;
    if (!median && static_cast<int>(chain.responses.size()) == ppi) {
      std::vector<int> responses;
      for (const auto& r : chain.responses) responses.push_back(r.slider_index);
      median = aggregate_iteration(responses, ppi);
      out.push_back(IterationAggregated{chain.spec.chain_id, chain.iteration, responses, *median});
    }
    if (median) {
      out.push_back(ChainAdvanced{chain.spec.chain_id, chain.iteration + 1, chain.free_dimension, *median});
      if (chain.iteration + 1 == chain.spec.n_iterations) {
        out.push_back(ChainCompleted{chain.spec.chain_id, chain.spec.n_iterations});
      }
    }
  }
  if (!s.terminated() && !s.chains.empty() && s.full_chains() + static_cast<int>(std::count_if(out.begin(), out.end(), [](const EventPayload& p) {
        return std::holds_alternative<ChainCompleted>(p);
      })) == static_cast<int>(s.chains.size())) {
    out.push_back(ExperimentTerminated{TerminationReason::all_complete, static_cast<int>(s.chains.size()),
                                       static_cast<int>(s.chains.size())});
  }
  return out;
}

}  // namespace gsp
