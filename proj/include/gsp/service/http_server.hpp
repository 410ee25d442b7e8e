#pragma once

#include <functional>
#include <memory>
#include <string>

#include "gsp/service/experiment.hpp"

namespace httplib {
class Server;
}

namespace gsp::service {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::function<Timestamp()> clock = now_utc;
  /// Served at / when set (the web console build output).
  std::string static_dir;
};

/// JSON-over-HTTP facade for the participant console and the admin
/// dashboard. Errors come back as {"error": code, "message": text}.
class HttpServer {
 public:
  HttpServer(Experiment& experiment, ServerOptions options = {});
  ~HttpServer();

  /// Binds the socket; returns the bound port.
  int bind();
  /// Serves until stop(); call bind() first.
  void serve();
  void stop();

 private:
  void routes();

  Experiment& experiment_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

/// HTTP status for an error code.
int http_status(Errc code) noexcept;

}  // namespace gsp::service
