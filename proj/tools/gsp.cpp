// gsp: serve, simulate, validate, analyze, render and export.
//
// Exit status: 0 success, 2 configuration or usage error, 3 runtime error,
// 4 corrupt event log. Failures print {"error", "message"} JSON on stderr.

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gsp/analysis/report.hpp"
#include "gsp/config.hpp"
#include "gsp/error.hpp"
#include "gsp/render/audio.hpp"
#include "gsp/render/external.hpp"
#include "gsp/render/renderer.hpp"
#include "gsp/service/event_log.hpp"
#include "gsp/service/experiment.hpp"
#include "gsp/service/http_server.hpp"
#include "gsp/sim/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitCorrupt = 4;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
};

gsp::ExperimentConfig load(const Common& c) {
  std::vector<std::string> overrides = c.overrides;
  if (c.seed) overrides.push_back("seed=" + std::to_string(*c.seed));
  if (c.config_path.empty()) return gsp::parse_config("", overrides);
  return gsp::load_config(c.config_path, overrides);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw gsp::Error(gsp::Errc::io, "cannot write " + path.string());
  out << text;
}

void remove_log(const fs::path& log) {
  fs::remove(log);
  fs::remove(gsp::service::snapshot_path(log));
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw gsp::Error(gsp::Errc::config, "not a number: '" + item + "'");
    }
  }
  return out;
}

gsp::ExperimentState replay_file(const fs::path& log) { return gsp::service::replay(gsp::service::read_log(log)); }

std::atomic<gsp::service::HttpServer*> g_server{nullptr};

void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

int cmd_serve(const Common& c, const std::string& log, const std::string& host, int port, const std::string& static_dir,
              const std::string& stimulus_dir) {
  gsp::service::ExperimentOptions options;
  if (!stimulus_dir.empty()) options.stimulus_dir = stimulus_dir;
  std::unique_ptr<gsp::service::Experiment> exp;
  const fs::path path = log.empty() ? fs::path(c.out.empty() ? "." : c.out) / "events.log" : fs::path(log);
  if (fs::exists(path) && fs::file_size(path) > 0) {
    exp = gsp::service::Experiment::open(path, gsp::now_utc(), options);
  } else {
    options.log_path = path;
    exp = std::make_unique<gsp::service::Experiment>(load(c), gsp::now_utc(), options);
  }
  gsp::service::ServerOptions server_options;
  server_options.host = host;
  server_options.port = port;
  server_options.static_dir = static_dir;
  gsp::service::HttpServer server(*exp, server_options);
  const int bound = server.bind();
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << json{{"listening", "http://" + host + ":" + std::to_string(bound)}, {"log", path.string()}}.dump()
            << std::endl;
  server.serve();
  g_server = nullptr;
  return 0;
}

int cmd_simulate(const Common& c, const std::string& scenario_path) {
  const auto config = load(c);
  auto scenario = scenario_path.empty() ? gsp::sim::default_scenario(config)
                                        : gsp::sim::load_scenario(scenario_path, config);
  if (c.seed) scenario.seed = *c.seed;
  const fs::path dir = c.out.empty() ? fs::path("sim-out") : fs::path(c.out);
  fs::create_directories(dir);
  const fs::path log = dir / "events.log";
  remove_log(log);
  gsp::sim::SimulationOptions options;
  options.log_path = log;
  const auto result = gsp::sim::run_simulation(config, scenario, options);
  json summary = gsp::sim::summarize(result);
  summary["scenario"] = gsp::sim::to_json(scenario);
  const fs::path summary_path = dir / "summary.json";
  write_text(summary_path, summary.dump(2) + "\n");
  std::cout << json{{"log", log.string()}, {"summary", summary_path.string()}, {"log_sha256", summary["log_sha256"]}}.dump()
            << std::endl;
  return 0;
}

int cmd_validate(const Common& c, const std::string& log) {
  if (log.empty()) {
    std::cout << gsp::to_json(load(c)).dump(2) << std::endl;
    return 0;
  }
  auto state = replay_file(log);
  if (!state.terminated()) {
    const auto t = gsp::check_termination(state, state.last_event_at);
    if (!t.terminated) throw gsp::Error(gsp::Errc::phase, "the experiment in " + log + " is still running");
    state = gsp::apply_all(state, {gsp::ExperimentTerminated{*t.reason, t.full_chains, static_cast<int>(state.chains.size())}},
                           state.last_event_at);
  }
  std::vector<gsp::StimulusDescriptor> items;
  if (state.validation) {
    items = state.validation->items;
  } else {
    items = gsp::build_validation_set(state, state.config.novel_sentences, state.config.n_random, state.config.seed);
  }
  json out = json::array();
  for (const auto& item : items) out.push_back(gsp::to_json(item));
  const fs::path path = c.out.empty() ? fs::path("validation.json") : fs::path(c.out);
  write_text(path, out.dump(2) + "\n");
  std::cout << json{{"validation", path.string()}, {"items", items.size()}}.dump() << std::endl;
  return 0;
}

int cmd_analyze(const Common& c, const std::string& log, const std::string& embedding) {
  if (log.empty()) throw gsp::Error(gsp::Errc::config, "analyze needs --log");
  const auto state = replay_file(log);
  std::unique_ptr<gsp::render::Renderer> renderer;
  try {
    renderer = gsp::render::make_renderer(state.config);
  } catch (const gsp::Error& e) {
    if (e.code() != gsp::Errc::shape) throw;
  }
  gsp::analysis::ReportOptions options;
  options.embedding = embedding == "latent" ? gsp::analysis::EmbeddingSource::latent : gsp::analysis::EmbeddingSource::style;
  options.bootstrap.seed = state.config.seed;
  options.uar.svm.seed = state.config.seed;
  const auto report = gsp::analysis::build_report(state, renderer.get(), options);
  const auto paths = gsp::analysis::write_report(report, c.out.empty() ? fs::path("report") : fs::path(c.out));
  json printed = json::array();
  for (const auto& p : paths) printed.push_back(p.string());
  std::cout << json{{"report", printed}}.dump() << std::endl;
  return 0;
}

int cmd_render(const Common& c, const std::string& point_text, const std::string& weights_text,
               const std::string& sentence_id, const std::string& text) {
  const auto config = load(c);
  gsp::SentenceRef sentence;
  if (!text.empty()) {
    sentence = {sentence_id.empty() ? "adhoc" : sentence_id, text};
  } else {
    const auto* s = config.find_sentence(sentence_id.empty() ? config.sentences.front().id : sentence_id);
    if (!s) throw gsp::Error(gsp::Errc::config, "unknown sentence '" + sentence_id + "'");
    sentence = *s;
  }
  std::vector<double> weights(static_cast<std::size_t>(config.dimensions), 0.0);
  if (!weights_text.empty()) weights = parse_numbers(weights_text);
  if (static_cast<int>(weights.size()) != config.dimensions) {
    throw gsp::Error(gsp::Errc::config, "--weights needs " + std::to_string(config.dimensions) + " values");
  }
  auto renderer = gsp::render::make_renderer(config);
  gsp::render::RenderOutput out;
  if (!point_text.empty()) {
    gsp::LatentPoint point;
    for (double v : parse_numbers(point_text)) point.indices.push_back(static_cast<int>(v));
    if (static_cast<int>(point.dimensions()) != config.dimensions) {
      throw gsp::Error(gsp::Errc::config, "--point needs " + std::to_string(config.dimensions) + " indices");
    }
    out = renderer->render(point, sentence);
  } else if (auto* builtin = dynamic_cast<gsp::render::BuiltinRenderer*>(renderer.get())) {
    out = builtin->render_weights(weights, sentence);
  } else {
    auto* external = dynamic_cast<gsp::render::ExternalRenderer*>(renderer.get());
    out = external->render_weights(weights, sentence.text);
  }
  const fs::path path = c.out.empty() ? fs::path("stimulus.wav") : fs::path(c.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  gsp::render::write_wav(path, out.audio);
  std::cout << json{{"wav", path.string()}, {"samples", out.audio.samples.size()}}.dump() << std::endl;
  return 0;
}

int cmd_export(const Common& c, const std::string& log, const std::string& format) {
  if (log.empty()) throw gsp::Error(gsp::Errc::config, "export needs --log");
  const auto events = gsp::service::read_log(log);
  const auto state = gsp::service::replay(events);
  std::string body;
  if (format == "log") {
    body = gsp::service::format_log(events);
  } else if (format == "state") {
    body = gsp::to_json(state).dump(2) + "\n";
  } else if (format == "chains") {
    std::ostringstream s;
    s << "chain_id,emotion,sentence_id,iteration";
    for (int d = 0; d < state.config.dimensions; ++d) s << ",d" << d;
    s << '\n';
    for (const auto& chain : state.chains) {
      for (const auto& h : chain.history) {
        s << chain.spec.chain_id << ',' << gsp::to_string(chain.spec.emotion) << ',' << chain.spec.sentence_id << ','
          << h.iteration;
        for (int k : h.point.indices) s << ',' << k;
        s << '\n';
      }
    }
    body = s.str();
  } else {
    std::ostringstream s;
    s << "item_id,kind,intended,iteration,probed,rating\n";
    for (const auto& row : gsp::analysis::rating_table(state)) {
      s << row.stimulus_id << ',' << gsp::to_string(row.kind) << ','
        << (row.intended ? gsp::to_string(*row.intended) : std::string_view{}) << ','
        << (row.iteration ? std::to_string(*row.iteration) : std::string{}) << ',' << gsp::to_string(row.probed) << ','
        << row.rating << '\n';
    }
    body = s.str();
  }
  if (c.out.empty() || c.out == "-") {
    std::cout << body;
  } else {
    write_text(c.out, body);
    std::cout << json{{"export", c.out}, {"format", format}}.dump() << std::endl;
  }
  return 0;
}

int fail(int status, std::string_view code, const std::string& message, json extra = json::object()) {
  json j{{"error", code}, {"message", message}};
  j.update(extra);
  std::cerr << j.dump() << std::endl;
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gibbs sampling with people over a synthesizer latent space"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub, bool config = true) {
    if (config) {
      sub->add_option("--config", common.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
      sub->add_option("--override", common.overrides, "key=value with dotted keys, e.g. grid.n=16");
    }
    sub->add_option("--seed", common.seed, "Seed overriding the config (and scenario)");
    sub->add_option("--out", common.out, "Output path");
  };

  std::string log, host = "127.0.0.1", static_dir, stimulus_dir, scenario, embedding = "style", format = "log";
  std::string point, weights, sentence, text;
  int port = 8080;

  auto* serve = app.add_subcommand("serve", "Run the experiment service");
  add_common(serve);
  serve->add_option("--log", log, "Event log; resumed when it exists");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--static-dir", static_dir, "Directory served at /");
  serve->add_option("--stimulus-dir", stimulus_dir, "Keep rendered stimuli on disk here");

  auto* simulate = app.add_subcommand("simulate", "Closed-loop run with simulated participants");
  add_common(simulate);
  simulate->add_option("--scenario", scenario, "Scenario file (JSON)")->check(CLI::ExistingFile);

  auto* validate = app.add_subcommand("validate", "Normalize a config, or build the validation set of a log");
  add_common(validate);
  validate->add_option("--log", log, "Event log of a finished run");

  auto* analyze = app.add_subcommand("analyze", "Contrast, PCA, features and classification report");
  add_common(analyze, false);
  analyze->add_option("--log", log, "Event log")->required();
  analyze->add_option("--embedding", embedding, "style or latent")->check(CLI::IsMember({"style", "latent"}));

  auto* render = app.add_subcommand("render", "Render one stimulus to WAV");
  add_common(render);
  render->add_option("--point", point, "Grid indices, comma separated");
  render->add_option("--weights", weights, "Latent weights, comma separated (default all zero)");
  render->add_option("--sentence", sentence, "Sentence id from the config");
  render->add_option("--text", text, "Ad-hoc sentence text");

  auto* export_cmd = app.add_subcommand("export", "Export a log as a verified log, state, chains or ratings");
  add_common(export_cmd, false);
  export_cmd->add_option("--log", log, "Event log")->required();
  export_cmd->add_option("--format", format)->check(CLI::IsMember({"log", "state", "chains", "ratings"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kExitConfig, "usage", e.what());
  }

  try {
    if (*serve) return cmd_serve(common, log, host, port, static_dir, stimulus_dir);
    if (*simulate) return cmd_simulate(common, scenario);
    if (*validate) return cmd_validate(common, log);
    if (*analyze) return cmd_analyze(common, log, embedding);
    if (*render) return cmd_render(common, point, weights, sentence, text);
    if (*export_cmd) return cmd_export(common, log, format);
  } catch (const gsp::ConfigError& e) {
    return fail(kExitConfig, "config", e.what(), json{{"issues", e.report()}});
  } catch (const gsp::CorruptLogError& e) {
    return fail(kExitCorrupt, gsp::to_string(gsp::Errc::corrupt_log), e.what(), json{{"seq", e.seq()}});
  } catch (const gsp::Error& e) {
    return fail(e.code() == gsp::Errc::config ? kExitConfig : kExitRuntime, gsp::to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, "internal", e.what());
  }
  return 0;
}
