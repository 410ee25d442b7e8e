#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "gsp/analysis/features.hpp"
#include "gsp/analysis/report.hpp"
#include "gsp/config.hpp"
#include "gsp/render/renderer.hpp"
#include "gsp/service/event_log.hpp"
#include "gsp/sim/simulation.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

// Everything structured crosses the boundary as JSON text; the Python package
// decodes it.

gsp::ExperimentConfig config_of(const std::string& text) {
  return gsp::parse_config(text.empty() ? std::string("{}") : text);
}

py::tuple render(const std::vector<double>& weights, const std::string& sentence_id, const std::string& config_text) {
  const auto config = config_of(config_text);
  const auto* sentence = config.find_sentence(sentence_id.empty() ? config.sentences.front().id : sentence_id);
  if (!sentence) throw gsp::Error(gsp::Errc::config, "unknown sentence '" + sentence_id + "'");
  if (static_cast<int>(weights.size()) != config.dimensions) {
    throw gsp::Error(gsp::Errc::config, "weights need " + std::to_string(config.dimensions) + " values");
  }
  auto renderer = gsp::render::make_renderer(config);
  auto* builtin = dynamic_cast<gsp::render::BuiltinRenderer*>(renderer.get());
  if (!builtin) throw gsp::Error(gsp::Errc::config, "python rendering needs the builtin renderer");
  gsp::render::RenderOutput out;
  {
    py::gil_scoped_release release;
    out = builtin->render_weights(weights, *sentence);
  }
  py::array_t<double> samples(static_cast<py::ssize_t>(out.audio.samples.size()));
  std::copy(out.audio.samples.begin(), out.audio.samples.end(), samples.mutable_data());
  return py::make_tuple(samples, out.audio.sample_rate);
}

std::string extract_features(const std::vector<double>& samples, int sample_rate) {
  gsp::render::AudioBuffer audio{samples, sample_rate};
  const auto f = gsp::analysis::extract_features(audio);
  json j{{"duration", f.duration}};
  const auto put = [&](const char* name, const std::optional<double>& v) { j[name] = v ? json(*v) : json(nullptr); };
  put("f0_mean", f.f0_mean);
  put("f0_slope", f.f0_slope);
  put("f0_range", f.f0_range);
  put("jitter_ddp", f.jitter_ddp);
  put("shimmer_local", f.shimmer_local);
  return j.dump();
}

py::tuple simulate(const std::string& config_text, const std::string& scenario_text) {
  const auto config = config_of(config_text);
  const auto scenario =
      gsp::sim::parse_scenario(json::parse(scenario_text.empty() ? std::string("{}") : scenario_text), config);
  gsp::sim::SimulationResult result;
  {
    py::gil_scoped_release release;
    result = gsp::sim::run_simulation(config, scenario);
  }
  return py::make_tuple(gsp::service::format_log(result.events), gsp::sim::summarize(result).dump());
}

std::string analyze(const std::string& log_text) {
  const auto state = gsp::service::replay(gsp::service::parse_log(log_text));
  auto renderer = gsp::render::make_renderer(state.config);
  gsp::analysis::ReportOptions options;
  options.bootstrap.seed = state.config.seed;
  options.uar.svm.seed = state.config.seed;
  py::gil_scoped_release release;
  return gsp::analysis::to_json(gsp::analysis::build_report(state, renderer.get(), options)).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the gsp sampler, renderer, simulator and analysis";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error;
  error.call_once_and_store_result([&] { return py::exception<gsp::Error>(m, "GspError"); });
  // args are (code, message, details)
  py::register_exception_translator([](std::exception_ptr p) {
    const auto raise = [](const gsp::Error& e, const json& details) {
      py::object d = py::module_::import("json").attr("loads")(details.dump());
      PyErr_SetObject(error.get_stored().ptr(), py::make_tuple(std::string(gsp::to_string(e.code())), e.what(), d).ptr());
    };
    try {
      if (p) std::rethrow_exception(p);
    } catch (const gsp::ConfigError& e) {
      raise(e, json{{"issues", e.report()}});
    } catch (const gsp::CorruptLogError& e) {
      raise(e, json{{"seq", e.seq()}});
    } catch (const gsp::Error& e) {
      raise(e, json::object());
    }
  });

  m.def("default_config", [] { return gsp::to_json(gsp::ExperimentConfig{}).dump(); });
  m.def(
      "normalize_config", [](const std::string& text) { return gsp::to_json(config_of(text)).dump(); },
      py::arg("config_json"));
  m.def("render", &render, py::arg("weights"), py::arg("sentence_id") = "", py::arg("config_json") = "");
  m.def("extract_features", &extract_features, py::arg("samples"), py::arg("sample_rate"));
  m.def(
      "jitter_ddp", [](const std::vector<double>& periods) { return gsp::analysis::jitter_ddp(periods); },
      py::arg("periods"));
  m.def("simulate", &simulate, py::arg("config_json") = "", py::arg("scenario_json") = "");
  m.def(
      "replay",
      [](const std::string& log_text) {
        return gsp::to_json(gsp::service::replay(gsp::service::parse_log(log_text))).dump();
      },
      py::arg("log_text"));
  m.def("analyze", &analyze, py::arg("log_text"));
}
