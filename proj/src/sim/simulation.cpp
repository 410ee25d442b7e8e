#include "gsp/sim/simulation.hpp"

#include <queue>
#include <tuple>

#include "gsp/error.hpp"
#include "gsp/render/digest.hpp"
#include "gsp/render/renderer.hpp"
#include "gsp/service/event_log.hpp"
#include "gsp/service/experiment.hpp"

namespace gsp::sim {

namespace {

using service::Experiment;

/// Stands in when nothing is rendered; ids stay content-addressed.
class SilentRenderer final : public render::Renderer {
 public:
  SilentRenderer(int dims, SliderGrid grid) : dims_(dims), grid_(grid) {}
  std::string backend_key() const override { return "silent-v1;dims=" + std::to_string(dims_); }
  int dimensions() const override { return dims_; }
  const SliderGrid& grid() const override { return grid_; }
  render::RenderOutput render(const LatentPoint&, const SentenceRef&) override {
    throw Error(Errc::state, "simulation ran without a renderer");
  }

 private:
  int dims_;
  SliderGrid grid_;
};

bool builtin_fits(const ExperimentConfig& config) {
  if (config.renderer.kind != RendererConfig::Kind::builtin) return false;
  try {
    render::make_renderer(config);
    return true;
  } catch (const Error& e) {
    if (e.code() == Errc::shape) return false;
    throw;
  }
}

Timestamp at_seconds(double s) { return Timestamp(Milliseconds(kSimEpochMs + static_cast<std::int64_t>(s * 1000.0))); }

/// Pending action of one participant slot.
struct Wake {
  double time = 0.0;
  std::uint64_t order = 0;
  int slot = 0;
  std::optional<std::string> trial_id;  // answer this trial
  int choice = 0;

  bool operator>(const Wake& o) const { return std::tie(time, order) > std::tie(o.time, o.order); }
};

void run_ratings(Experiment& exp, const Scenario& scenario, double& clock, SimulationStats& stats) {
  const ExperimentConfig& config = exp.config();
  const SliderGrid grid = config.grid_spec();
  const auto& items = exp.build_validation(at_seconds(clock));
  std::map<std::string, const StimulusDescriptor*> by_id;
  for (const auto& item : items) by_id[item.item_id] = &item;

  std::vector<std::string> raters;
  for (int r = 0; r < scenario.validation.raters; ++r) {
    raters.push_back(exp.register_participant(true, at_seconds(clock)));
    ++stats.participants_registered;
  }
  std::uint64_t n = 0;
  for (bool progress = true; progress;) {
    progress = false;
    for (const auto& rater : raters) {
      auto offer = exp.request_rating(rater, at_seconds(clock));
      if (!offer) continue;
      progress = true;
      const auto& item = *by_id.at(offer->assignment.item_id);
      auto rng = substream(scenario.seed, "sim-rating", ++n);
      const int rating = rating_agent(scenario.target(offer->assignment.probed_emotion), item.point.weights(grid),
                                      scenario.validation.model, rng);
      clock += scenario.validation.rating_seconds;
      exp.submit_rating(offer->assignment.rating_id, rating, at_seconds(clock));
      ++stats.ratings;
    }
  }
}

}  // namespace

SimulationResult run_simulation(const ExperimentConfig& config, const Scenario& scenario,
                                const SimulationOptions& options) {
  validate(config);
  const SliderGrid grid = config.grid_spec();
  for (Emotion e : config.emotions) validate(scenario.target(e), grid);

  SimulationStats stats;
  service::ExperimentOptions exp_options;
  exp_options.log_path = options.log_path;
  exp_options.discard_audio = true;
  stats.rendered = scenario.render && builtin_fits(config);
  exp_options.render_on_assign = stats.rendered;
  if (!stats.rendered) exp_options.renderer = std::make_shared<SilentRenderer>(config.dimensions, grid);

  double clock = 0.0;
  Experiment exp(config, at_seconds(clock), exp_options);

  std::vector<std::string> pool;
  std::size_t next_participant = 0;
  auto take_participant = [&]() -> std::string {
    const std::size_t k = next_participant++ % static_cast<std::size_t>(scenario.participants);
    if (k == pool.size()) {
      pool.push_back(exp.register_participant(true, at_seconds(clock)));
      ++stats.participants_registered;
    }
    return pool[k];
  };

  std::priority_queue<Wake, std::vector<Wake>, std::greater<>> queue;
  std::uint64_t order = 0;
  std::vector<std::string> holder(static_cast<std::size_t>(scenario.concurrency));
  for (int slot = 0; slot < scenario.concurrency; ++slot) {
    holder[static_cast<std::size_t>(slot)] = take_participant();
    queue.push({0.0, order++, slot, std::nullopt, 0});
  }

  std::uint64_t offers = 0;
  while (!queue.empty()) {
    Wake w = queue.top();
    queue.pop();
    clock = w.time;
    const Timestamp now = at_seconds(clock);
    if (exp.poll(now).terminated) break;
    auto& participant = holder[static_cast<std::size_t>(w.slot)];

    if (w.trial_id) {
      exp.submit_response(*w.trial_id, w.choice, now);
      ++stats.responses;
      participant = take_participant();
      queue.push({clock, order++, w.slot, std::nullopt, 0});
      continue;
    }

    auto offer = exp.request_trial(participant, now);
    if (!offer) {
      ++stats.idle_polls;
      queue.push({clock + scenario.idle_seconds, order++, w.slot, std::nullopt, 0});
      continue;
    }
    ++stats.trials_assigned;
    const std::uint64_t k = ++offers;
    const auto& a = offer->assignment;
    auto drop_rng = substream(scenario.seed, "sim-dropout", k);
    const bool dropped = scenario.stalled_chains.contains(a.chain_id) ||
                         (scenario.dropout_rate > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(drop_rng) <
                                                             scenario.dropout_rate);
    if (dropped) {
      // The participant leaves with the trial; the slot is refilled.
      ++stats.abandoned;
      participant = take_participant();
      queue.push({clock + scenario.trial_seconds, order++, w.slot, std::nullopt, 0});
      continue;
    }
    // Chains are laid out emotion-major.
    const Emotion emotion = config.emotions[static_cast<std::size_t>(a.chain_id) /
                                            (static_cast<std::size_t>(config.n_chains) / config.emotions.size())];
    const auto probs = conditional_slice_probs(scenario.target(emotion), offer->point, a.free_dimension, grid);
    auto rng = substream(scenario.seed, "sim-response", k);
    const int choice = agent_choose(scenario.policy, probs, rng);
    queue.push({clock + scenario.trial_seconds, order++, w.slot, a.trial_id, choice});
  }

  // Nothing left to do before the deadline passes.
  if (!exp.poll(at_seconds(clock)).terminated) {
    const auto deadline = exp.state().deadline;
    clock = static_cast<double>((deadline.time_since_epoch().count() - kSimEpochMs)) / 1000.0;
    exp.poll(deadline);
  }

  if (scenario.validation.enabled && exp.state().full_chains() > 0) run_ratings(exp, scenario, clock, stats);

  stats.renders = exp.stimuli().renders();
  SimulationResult result{exp.events(), exp.state(), stats};
  return result;
}

nlohmann::json summarize(const SimulationResult& r) {
  const auto& s = r.state;
  int transfer = 0;
  int random = 0;
  int trajectory = 0;
  std::size_t ratings = 0;
  if (s.validation) {
    for (const auto& item : s.validation->items) {
      if (item.kind == StimulusKind::transfer) ++transfer;
      if (item.kind == StimulusKind::random) ++random;
      if (item.kind == StimulusKind::trajectory) ++trajectory;
    }
    for (const auto& [id, rating] : s.validation->ratings) ratings += rating.rating ? 1 : 0;
  }
  return nlohmann::json{
      {"events", r.events.size()},
      {"chains", s.chains.size()},
      {"full_chains", s.full_chains()},
      {"termination", s.termination ? std::string(to_string(*s.termination)) : std::string("none")},
      {"participants", r.stats.participants_registered},
      {"trials_assigned", r.stats.trials_assigned},
      {"responses", r.stats.responses},
      {"abandoned", r.stats.abandoned},
      {"rendered", r.stats.rendered},
      {"renders", r.stats.renders},
      {"validation",
       {{"trajectory", trajectory}, {"random", random}, {"transfer", transfer}, {"ratings", ratings}}},
      {"log_sha256", render::sha256_hex(service::format_log(r.events))},
  };
}

}  // namespace gsp::sim
