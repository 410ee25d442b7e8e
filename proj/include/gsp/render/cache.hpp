#pragma once

#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "gsp/render/renderer.hpp"
#include "gsp/state.hpp"

namespace gsp::render {

enum class Retention {
  memory,   // keep encoded WAV bytes in memory
  disk,     // write <dir>/<id>.wav and read back on request
  discard,  // keep only the style embedding; audio is re-rendered on request
};

/// Content-addressed stimulus cache. Each id is rendered at most once no
/// matter how many threads ask for it concurrently.
class StimulusStore {
 public:
  explicit StimulusStore(Renderer& renderer, Retention retention = Retention::memory, std::filesystem::path dir = {});

  Renderer& renderer() noexcept { return renderer_; }

  /// Renders unless already present; returns the stimulus id.
  std::string ensure(const LatentPoint& point, const SentenceRef& sentence);
  /// Records the id -> (point, sentence) mapping without rendering.
  std::string reserve(const LatentPoint& point, const SentenceRef& sentence);

  bool contains(const std::string& id) const;
  /// Encoded WAV for a known id, rendering it first if needed.
  std::optional<std::vector<std::uint8_t>> wav(const std::string& id);
  std::optional<AudioBuffer> audio(const std::string& id);
  std::optional<std::vector<double>> embedding(const std::string& id);

  std::size_t renders() const;
  std::size_t hits() const;

 private:
  struct Rendered {
    std::vector<std::uint8_t> wav;  // empty unless retention is memory
    std::vector<double> embedding;
  };
  struct Entry {
    LatentPoint point;
    SentenceRef sentence;
    std::shared_future<std::shared_ptr<const Rendered>> result;  // invalid until requested
  };

  std::shared_ptr<const Rendered> materialize(const std::string& id);
  std::filesystem::path path_for(const std::string& id) const;

  Renderer& renderer_;
  Retention retention_;
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, Entry> entries_;
  std::size_t renders_ = 0;
  std::size_t hits_ = 0;
};

/// Stimulus ids for every grid position of the chain's free dimension, other
/// coordinates held at the chain's current point. A failing position is
/// retried once; positions that fail twice are reported in a BatchError.
std::vector<std::string> render_slider_batch(const ChainState& chain, const SliderGrid& grid, const SentenceRef& sentence,
                                             StimulusStore& store);

}  // namespace gsp::render
