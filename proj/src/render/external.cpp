#include "gsp/render/external.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gsp/error.hpp"

namespace gsp::render {

namespace {

std::vector<double> parse_embedding(const std::string& header) {
  std::vector<double> values;
  std::stringstream in(header);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
      values.push_back(v);
    } catch (const std::exception&) {
      throw Error(Errc::render_backend, "malformed X-Style-Embedding header");
    }
  }
  return values;
}

// Releases a semaphore slot on scope exit.
template <typename Semaphore>
struct SlotGuard {
  Semaphore& sem;
  explicit SlotGuard(Semaphore& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
};

}  // namespace

ExternalRenderer::ExternalRenderer(std::string url, SliderGrid grid, int dimensions, ExternalOptions options)
    : url_(std::move(url)),
      grid_(grid),
      dimensions_(dimensions),
      options_(options),
      in_flight_(std::clamp(options.max_in_flight, 1, 64)) {
  while (!url_.empty() && url_.back() == '/') url_.pop_back();
  const auto scheme = url_.find("://");
  const auto path_start = url_.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  scheme_host_ = path_start == std::string::npos ? url_ : url_.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url_.substr(path_start);
  if (scheme_host_.empty()) throw Error(Errc::config, "external renderer url is empty");
}

std::string ExternalRenderer::backend_key() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "/grid:%.17g:%.17g:%d", grid_.lo(), grid_.hi(), grid_.size());
  return "external/" + url_ + buf;
}

RenderOutput ExternalRenderer::render(const LatentPoint& point, const SentenceRef& sentence) {
  if (static_cast<int>(point.dimensions()) != dimensions_) {
    throw Error(Errc::shape, "expected " + std::to_string(dimensions_) + " dimensions");
  }
  if (!point.on_grid(grid_)) throw Error(Errc::range, "latent point is off the slider grid");
  const auto weights = point.weights(grid_);
  return render_weights(weights, sentence.text);
}

RenderOutput ExternalRenderer::render_weights(std::span<const double> weights, const std::string& text) {
  if (static_cast<int>(weights.size()) != dimensions_) {
    throw Error(Errc::shape, "expected " + std::to_string(dimensions_) + " weights, got " + std::to_string(weights.size()));
  }
  nlohmann::json body{{"weights", std::vector<double>(weights.begin(), weights.end())},
                      {"text", text},
                      {"sample_rate", kDefaultSampleRate}};
  const std::string key = body.dump();
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  RenderOutput out = request(key);
  std::lock_guard lock(mutex_);
  return cache_.try_emplace(key, std::move(out)).first->second;
}

RenderOutput ExternalRenderer::request(const std::string& body) {
  SlotGuard slot(in_flight_);
  httplib::Client client(scheme_host_);
  const auto timeout = std::chrono::duration<double>(options_.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Result res;
  for (int attempt = 0; attempt < 2; ++attempt) {
    {
      std::lock_guard lock(mutex_);
      ++requests_;
    }
    res = client.Post(path_prefix_ + "/render", body, "application/json");
    if (!res) throw Error(Errc::render_backend, "request to " + url_ + " failed: " + httplib::to_string(res.error()));
    if (res->status != 503 || attempt == 1) break;
    std::this_thread::sleep_for(std::chrono::duration<double>(options_.retry_delay_s));
  }
  if (res->status != 200) {
    throw Error(Errc::render_backend, "renderer returned status " + std::to_string(res->status));
  }

  const auto& payload = res->body;
  RenderOutput out;
  out.audio = decode_wav(std::span(reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()));
  if (out.audio.sample_rate != kDefaultSampleRate) {
    throw Error(Errc::render_backend, "renderer returned sample rate " + std::to_string(out.audio.sample_rate));
  }
  if (!out.audio.valid()) throw Error(Errc::render_backend, "renderer returned non-finite audio");
  if (res->has_header("X-Style-Embedding")) out.style_embedding = parse_embedding(res->get_header_value("X-Style-Embedding"));
  return out;
}

std::size_t ExternalRenderer::requests_sent() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

RenderOutput external_render(const std::string& url, int dimensions, std::span<const double> weights, const std::string& text,
                             double timeout_s) {
  ExternalRenderer client(url, SliderGrid(-1.0, 1.0, 2), dimensions, ExternalOptions{timeout_s, 1});
  return client.render_weights(weights, text);
}

}  // namespace gsp::render
