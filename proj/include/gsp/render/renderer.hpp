#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsp/config.hpp"
#include "gsp/grid.hpp"
#include "gsp/render/audio.hpp"
#include "gsp/render/prosody.hpp"
#include "gsp/render/sentence.hpp"
#include "gsp/render/synth.hpp"

namespace gsp::render {

inline constexpr std::string_view kSynthVersion = "synth-v1";

struct RenderOutput {
  AudioBuffer audio;
  std::vector<double> style_embedding;  // may be empty for external backends
};

class Renderer {
 public:
  virtual ~Renderer() = default;

  /// Identifies everything besides (point, sentence) that the audio depends on.
  virtual std::string backend_key() const = 0;
  virtual int dimensions() const = 0;
  virtual const SliderGrid& grid() const = 0;
  virtual RenderOutput render(const LatentPoint& point, const SentenceRef& sentence) = 0;

  /// Content address: hex digest of backend key, sentence and grid indices.
  std::string stimulus_id(const LatentPoint& point, const SentenceRef& sentence) const;
};

/// Content key hashed into stimulus ids and, for the builtin renderer, into
/// the jitter/shimmer noise seed.
std::string stimulus_key(std::string_view backend_key, const LatentPoint& point, const SentenceRef& sentence);

/// Renders with the parametric synthesizer.
AudioBuffer render(const LatentPoint& point, const SentenceScore& score, const ProsodyMap& map, const SliderGrid& grid,
                   std::uint64_t noise_seed, const SynthOptions& options = {});

class BuiltinRenderer final : public Renderer {
 public:
  BuiltinRenderer(ProsodyMap map, SliderGrid grid, SynthOptions options = {});

  std::string backend_key() const override;
  int dimensions() const override { return map_.dimensions(); }
  const SliderGrid& grid() const override { return grid_; }
  RenderOutput render(const LatentPoint& point, const SentenceRef& sentence) override;

  /// Arbitrary weights, on or off the grid. Weights that all sit on grid
  /// positions render exactly like the corresponding grid point.
  RenderOutput render_weights(std::span<const double> weights, const SentenceRef& sentence);

  const ProsodyMap& map() const noexcept { return map_; }
  ProsodyParams params_for(const LatentPoint& point) const;

 private:
  ProsodyMap map_;
  SliderGrid grid_;
  SynthOptions options_;
};

/// Builtin or external backend per the config. Checks that the mapping matrix
/// matches the configured dimensionality.
std::unique_ptr<Renderer> make_renderer(const ExperimentConfig& config);

/// Checksum of the mapping in effect for `config`; recorded at initialization.
std::string mapping_checksum(const ExperimentConfig& config);

}  // namespace gsp::render
