#include "gsp/service/experiment.hpp"

#include "gsp/error.hpp"
#include "gsp/render/digest.hpp"
#include "gsp/service/ratings.hpp"

namespace gsp::service {

Experiment::Experiment(const ExperimentConfig& config, Timestamp now, ExperimentOptions options)
    : options_(std::move(options)), config_(config) {
  validate(config_);
  if (options_.log_path) {
    std::error_code ec;
    if (std::filesystem::exists(*options_.log_path, ec) && std::filesystem::file_size(*options_.log_path, ec) > 0) {
      throw Error(Errc::io, "event log " + options_.log_path->string() + " already exists");
    }
    log_ = std::make_unique<EventLog>(*options_.log_path);
  }
  setup_rendering();
  const std::string checksum = options_.renderer ? render::sha256_hex(renderer_->backend_key())
                                                 : render::mapping_checksum(config_);
  std::lock_guard lock(mutex_);
  commit_one(ExperimentInitialized{config_, checksum}, now);
}

Experiment::Experiment(ExperimentOptions options, std::vector<Event> events, Timestamp now)
    : options_(std::move(options)) {
  std::optional<Snapshot> snapshot;
  if (options_.log_path) snapshot = read_snapshot(snapshot_path(*options_.log_path));
  state_ = replay_with_snapshot(events, snapshot);
  events_ = std::move(events);
  config_ = state_.config;
  setup_rendering();
  if (!options_.renderer && state_.mapping_checksum != render::mapping_checksum(config_)) {
    throw Error(Errc::config, "prosody mapping differs from the one this experiment was started with");
  }
  if (options_.log_path) log_ = std::make_unique<EventLog>(*options_.log_path);
  std::lock_guard lock(mutex_);
  commit(pending_followups(state_), now);
}

std::unique_ptr<Experiment> Experiment::open(const std::filesystem::path& log_path, Timestamp now,
                                             ExperimentOptions options) {
  auto events = read_log(log_path);
  options.log_path = log_path;
  return std::unique_ptr<Experiment>(new Experiment(std::move(options), std::move(events), now));
}

std::unique_ptr<Experiment> Experiment::from_events(std::vector<Event> events, Timestamp now, ExperimentOptions options) {
  options.log_path.reset();
  return std::unique_ptr<Experiment>(new Experiment(std::move(options), std::move(events), now));
}

void Experiment::setup_rendering() {
  renderer_ = options_.renderer ? options_.renderer : std::shared_ptr<render::Renderer>(render::make_renderer(config_));
  render::Retention retention = render::Retention::memory;
  std::filesystem::path dir;
  if (options_.discard_audio) {
    retention = render::Retention::discard;
  } else if (options_.stimulus_dir) {
    retention = render::Retention::disk;
    dir = *options_.stimulus_dir;
  }
  store_ = std::make_unique<render::StimulusStore>(*renderer_, retention, dir);
}

void Experiment::commit_one(const EventPayload& payload, Timestamp now) {
  Event event{state_.last_seq + 1, now, payload};
  apply(state_, event);
  if (log_) log_->append(event);
  events_.push_back(std::move(event));
  if (options_.log_path && config_.snapshot_interval > 0 && state_.last_seq % config_.snapshot_interval == 0) {
    write_snapshot(snapshot_path(*options_.log_path), state_);
  }
}

void Experiment::commit(const std::vector<EventPayload>& payloads, Timestamp now) {
  for (const auto& p : payloads) commit_one(p, now);
}

void Experiment::terminate_if_due(Timestamp now) {
  if (state_.terminated()) return;
  const auto t = check_termination(state_, now);
  if (t.terminated && t.reason) {
    commit_one(ExperimentTerminated{*t.reason, t.full_chains, static_cast<int>(state_.chains.size())}, now);
  }
}

const SentenceRef& Experiment::sentence(const std::string& id) const {
  const SentenceRef* s = config_.find_sentence(id);
  if (!s) throw Error(Errc::not_found, "unknown sentence " + id);
  return *s;
}

std::string Experiment::register_participant(bool prescreened, Timestamp now) {
  std::lock_guard lock(mutex_);
  std::string token = participant_token(config_.seed, state_.participants_issued + 1);
  commit_one(ParticipantRegistered{token, prescreened}, now);
  return token;
}

std::optional<TrialOffer> Experiment::request_trial(const std::string& participant_id, Timestamp now) {
  std::lock_guard lock(mutex_);
  terminate_if_due(now);
  auto assignment = assign_trial(participant_id, state_, now);
  if (!assignment) return std::nullopt;
  if (!state_.trials.contains(assignment->trial_id)) commit_one(TrialAssigned{*assignment}, now);

  const ChainState& chain = state_.chain(assignment->chain_id);
  const SentenceRef& text = sentence(chain.spec.sentence_id);
  TrialOffer offer{*assignment, chain.current_point, {}};
  if (options_.render_on_assign) {
    offer.stimulus_ids = render::render_slider_batch(chain, config_.grid_spec(), text, *store_);
  } else {
    for (int k = 0; k < config_.grid.n; ++k) {
      LatentPoint p = chain.current_point;
      p.indices[static_cast<std::size_t>(chain.free_dimension)] = k;
      offer.stimulus_ids.push_back(store_->reserve(p, text));
    }
  }
  return offer;
}

void Experiment::submit_response(const std::string& trial_id, int slider_index, Timestamp now) {
  std::lock_guard lock(mutex_);
  terminate_if_due(now);
  commit(record_response(state_, TrialResponse{trial_id, slider_index, now}), now);
  terminate_if_due(now);
}

Termination Experiment::poll(Timestamp now) {
  std::lock_guard lock(mutex_);
  terminate_if_due(now);
  return check_termination(state_, now);
}

void Experiment::terminate(TerminationReason reason, Timestamp now) {
  std::lock_guard lock(mutex_);
  if (state_.terminated()) return;
  commit_one(ExperimentTerminated{reason, state_.full_chains(), static_cast<int>(state_.chains.size())}, now);
}

const std::vector<StimulusDescriptor>& Experiment::build_validation(Timestamp now) {
  std::lock_guard lock(mutex_);
  if (!state_.validation) {
    terminate_if_due(now);
    auto items = build_validation_set(state_, config_.novel_sentences, config_.n_random, config_.seed);
    commit_one(ValidationSetBuilt{std::move(items), config_.seed}, now);
  }
  return state_.validation->items;
}

std::optional<RatingOffer> Experiment::request_rating(const std::string& participant_id, Timestamp now) {
  std::lock_guard lock(mutex_);
  auto assignment = next_rating_trial(state_, participant_id, now);
  if (!assignment) return std::nullopt;
  if (!state_.validation->ratings.contains(assignment->rating_id)) commit_one(RatingAssigned{*assignment}, now);
  const auto& v = *state_.validation;
  const auto& item = v.items[v.item_index.at(assignment->item_id)];
  return RatingOffer{*assignment, store_->reserve(item.point, sentence(item.sentence_id))};
}

void Experiment::submit_rating(const std::string& rating_id, int rating, Timestamp now) {
  std::lock_guard lock(mutex_);
  commit(record_rating(state_, rating_id, rating, now), now);
}

std::string Experiment::stimulus_for(const StimulusDescriptor& item) {
  return store_->reserve(item.point, sentence(item.sentence_id));
}

ExperimentState Experiment::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

std::vector<Event> Experiment::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

std::string Experiment::export_log() const {
  std::lock_guard lock(mutex_);
  return format_log(events_);
}

nlohmann::json Experiment::chains_summary() const {
  std::lock_guard lock(mutex_);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : state_.chains) {
    out.push_back({{"chain_id", c.spec.chain_id},
                   {"emotion", std::string(to_string(c.spec.emotion))},
                   {"sentence_id", c.spec.sentence_id},
                   {"iteration", c.iteration},
                   {"free_dimension", c.free_dimension},
                   {"status", c.complete() ? "complete" : "active"},
                   {"responses", c.responses.size()},
                   {"last_update", to_millis(c.last_update)}});
  }
  return out;
}

}  // namespace gsp::service
