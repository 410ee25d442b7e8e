#include "gsp/service/http_server.hpp"

#include <httplib.h>

#include "gsp/error.hpp"

namespace gsp::service {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, Errc code, const std::string& message) {
  send_json(res, json{{"error", std::string(to_string(code))}, {"message", message}}, http_status(code));
}

std::string stimulus_url(const std::string& id) { return "/api/stimulus/" + id + ".wav"; }

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const std::exception&) {
    throw Error(Errc::range, "request body is not valid JSON");
  }
}

template <typename T>
T field(const json& body, const char* key) {
  try {
    return body.at(key).get<T>();
  } catch (const std::exception&) {
    throw Error(Errc::range, std::string("missing or invalid field '") + key + "'");
  }
}

std::string participant_param(const httplib::Request& req) {
  if (!req.has_param("participant")) throw Error(Errc::auth, "missing participant token");
  return req.get_param_value("participant");
}

// Runs a handler, mapping library errors to JSON error responses.
template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      send_json(res, json{{"error", "internal"}, {"message", e.what()}}, 500);
    }
  };
}

}  // namespace

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::auth: return 403;
    case Errc::not_found: return 404;
    case Errc::duplicate:
    case Errc::phase:
    case Errc::empty_experiment:
    case Errc::state: return 409;
    case Errc::experiment_closed:
    case Errc::expired: return 410;
    case Errc::range:
    case Errc::config:
    case Errc::shape:
    case Errc::arity: return 400;
    case Errc::render_backend:
    case Errc::batch: return 502;
    default: return 500;
  }
}

HttpServer::HttpServer(Experiment& experiment, ServerOptions options)
    : experiment_(experiment), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::routes() {
  auto& s = *server_;
  auto& exp = experiment_;
  auto clock = options_.clock;

  s.Get("/api/session", guarded([&exp, clock](const httplib::Request& req, httplib::Response& res) {
    const bool prescreened = req.has_param("prescreened") &&
                             (req.get_param_value("prescreened") == "true" || req.get_param_value("prescreened") == "1");
    send_json(res, json{{"participant_token", exp.register_participant(prescreened, clock())}});
  }));

  s.Get("/api/trial", guarded([&exp, clock](const httplib::Request& req, httplib::Response& res) {
    auto offer = exp.request_trial(participant_param(req), clock());
    if (!offer) {
      res.status = 204;
      return;
    }
    json body = to_json(offer->assignment);
    json urls = json::array();
    for (const auto& id : offer->stimulus_ids) urls.push_back(stimulus_url(id));
    body["stimuli"] = urls;
    send_json(res, body);
  }));

  s.Post("/api/response", guarded([&exp, clock](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    exp.submit_response(field<std::string>(body, "trial_id"), field<int>(body, "slider_index"), clock());
    send_json(res, json{{"status", "recorded"}});
  }));

  s.Get(R"(/api/stimulus/([0-9a-f]+)\.wav)", guarded([&exp](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto bytes = exp.stimuli().wav(id);
    if (!bytes) throw Error(Errc::not_found, "unknown stimulus " + id);
    res.set_header("Cache-Control", "public, max-age=31536000, immutable");
    res.set_content(std::string(bytes->begin(), bytes->end()), "audio/wav");
  }));

  s.Get("/api/rating-trial", guarded([&exp, clock](const httplib::Request& req, httplib::Response& res) {
    const auto now = clock();
    const std::string pid = participant_param(req);
    if (!exp.state().validation) {
      if (!exp.poll(now).terminated) throw Error(Errc::phase, "the slider experiment is still running");
      exp.build_validation(now);
    }
    auto offer = exp.request_rating(pid, now);
    if (!offer) {
      res.status = 204;
      return;
    }
    send_json(res, json{{"rating_id", offer->assignment.rating_id},
                        {"stimulus_url", stimulus_url(offer->stimulus_id)},
                        {"probed_emotion", std::string(to_string(offer->assignment.probed_emotion))},
                        {"scale", 4},
                        {"expires_at", to_millis(offer->assignment.expires_at)}});
  }));

  s.Post("/api/rating", guarded([&exp, clock](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    exp.submit_rating(field<std::string>(body, "rating_id"), field<int>(body, "rating"), clock());
    send_json(res, json{{"status", "recorded"}});
  }));

  s.Get("/api/admin/chains", guarded([&exp](const httplib::Request&, httplib::Response& res) {
    send_json(res, exp.chains_summary());
  }));

  s.Post("/api/admin/terminate", guarded([&exp, clock](const httplib::Request&, httplib::Response& res) {
    exp.terminate(TerminationReason::admin, clock());
    const auto state = exp.state();
    send_json(res, json{{"status", "terminated"},
                        {"reason", std::string(to_string(*state.termination))},
                        {"full_chains", state.full_chains()}});
  }));

  s.Get("/api/admin/export", guarded([&exp](const httplib::Request&, httplib::Response& res) {
    res.set_content(exp.export_log(), "application/x-ndjson");
  }));

  if (!options_.static_dir.empty()) s.set_mount_point("/", options_.static_dir);
}

int HttpServer::bind() {
  if (options_.port == 0) {
    const int port = server_->bind_to_any_port(options_.host);
    if (port < 0) throw Error(Errc::io, "cannot bind " + options_.host);
    return port;
  }
  if (!server_->bind_to_port(options_.host, options_.port)) {
    throw Error(Errc::io, "cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  return options_.port;
}

void HttpServer::serve() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace gsp::service
