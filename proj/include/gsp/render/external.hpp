#pragma once

#include <map>
#include <mutex>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

#include "gsp/render/renderer.hpp"

namespace gsp::render {

struct ExternalOptions {
  double timeout_s = 30.0;
  int max_in_flight = 4;
  double retry_delay_s = 1.0;  // wait before the single retry on 503
};

/// Client for a remote renderer speaking `POST {url}/render`.
class ExternalRenderer final : public Renderer {
 public:
  ExternalRenderer(std::string url, SliderGrid grid, int dimensions, ExternalOptions options = {});

  std::string backend_key() const override;
  int dimensions() const override { return dimensions_; }
  const SliderGrid& grid() const override { return grid_; }
  RenderOutput render(const LatentPoint& point, const SentenceRef& sentence) override;

  /// Sends one request unless (weights, text) is already cached. Throws
  /// Error(shape) before any I/O when the weight count is wrong and
  /// Error(render_backend) for transport, status or payload problems.
  RenderOutput render_weights(std::span<const double> weights, const std::string& text);

  /// Number of HTTP requests issued so far, retries included.
  std::size_t requests_sent() const;

 private:
  RenderOutput request(const std::string& body);

  std::string scheme_host_;
  std::string path_prefix_;
  std::string url_;
  SliderGrid grid_;
  int dimensions_;
  ExternalOptions options_;
  std::counting_semaphore<64> in_flight_;
  mutable std::mutex mutex_;
  std::map<std::string, RenderOutput> cache_;
  std::size_t requests_ = 0;
};

/// One-shot helper: a temporary client for `url`, no cache sharing.
RenderOutput external_render(const std::string& url, int dimensions, std::span<const double> weights, const std::string& text,
                             double timeout_s = 30.0);

}  // namespace gsp::render
