#include "gsp/render/renderer.hpp"

#include <cstdio>

#include "gsp/error.hpp"
#include "gsp/render/digest.hpp"
#include "gsp/render/external.hpp"

namespace gsp::render {

namespace {

ProsodyMap map_for(const ExperimentConfig& config) {
  return config.renderer.mapping_path.empty() ? ProsodyMap::shipped() : ProsodyMap::load(config.renderer.mapping_path);
}

std::string grid_key(const SliderGrid& grid) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "grid:%.17g:%.17g:%d", grid.lo(), grid.hi(), grid.size());
  return buf;
}

}  // namespace

std::string stimulus_key(std::string_view backend_key, const LatentPoint& point, const SentenceRef& sentence) {
  std::string key(backend_key);
  key += '|';
  key += sentence.id;
  key += '|';
  key += sentence.text;
  key += '|';
  for (std::size_t d = 0; d < point.indices.size(); ++d) {
    if (d > 0) key += ',';
    key += std::to_string(point.indices[d]);
  }
  return key;
}

std::string Renderer::stimulus_id(const LatentPoint& point, const SentenceRef& sentence) const {
  return sha256_hex(stimulus_key(backend_key(), point, sentence)).substr(0, 32);
}

AudioBuffer render(const LatentPoint& point, const SentenceScore& score, const ProsodyMap& map, const SliderGrid& grid,
                   std::uint64_t noise_seed, const SynthOptions& options) {
  if (!point.on_grid(grid)) throw Error(Errc::range, "latent point is off the slider grid");
  return synthesize(map_latent_to_prosody(map, point, grid), score, noise_seed, options);
}

BuiltinRenderer::BuiltinRenderer(ProsodyMap map, SliderGrid grid, SynthOptions options)
    : map_(std::move(map)), grid_(grid), options_(options) {}

std::string BuiltinRenderer::backend_key() const {
  return "builtin/" + std::string(kSynthVersion) + "/" + map_.version() + "/" + map_.checksum().substr(0, 16) + "/" +
         grid_key(grid_) + "/sr:" + std::to_string(options_.sample_rate);
}

ProsodyParams BuiltinRenderer::params_for(const LatentPoint& point) const {
  return map_latent_to_prosody(map_, point, grid_);
}

RenderOutput BuiltinRenderer::render(const LatentPoint& point, const SentenceRef& sentence) {
  const auto seed = digest_seed(stimulus_key(backend_key(), point, sentence));
  const ProsodyParams params = params_for(point);
  RenderOutput out;
  out.audio = render::render(point, score_sentence(sentence), map_, grid_, seed, options_);
  const auto values = params.to_array();
  out.style_embedding.assign(values.begin(), values.end());
  return out;
}

RenderOutput BuiltinRenderer::render_weights(std::span<const double> weights, const SentenceRef& sentence) {
  LatentPoint point;
  for (double w : weights) {
    const int k = grid_.nearest_index(w);
    if (grid_.position(k) != w) break;
    point.indices.push_back(k);
  }
  if (point.indices.size() == weights.size()) return render(point, sentence);

  const ProsodyParams params = map_.apply(weights);
  std::string key = backend_key() + '|' + sentence.id + '|' + sentence.text + "|w:";
  char buf[32];
  for (std::size_t d = 0; d < weights.size(); ++d) {
    std::snprintf(buf, sizeof buf, d > 0 ? ",%.17g" : "%.17g", weights[d]);
    key += buf;
  }
  RenderOutput out;
  out.audio = synthesize(params, score_sentence(sentence), digest_seed(key), options_);
  const auto values = params.to_array();
  out.style_embedding.assign(values.begin(), values.end());
  return out;
}

std::unique_ptr<Renderer> make_renderer(const ExperimentConfig& config) {
  const SliderGrid grid = config.grid_spec();
  if (config.renderer.kind == RendererConfig::Kind::external) {
    return std::make_unique<ExternalRenderer>(config.renderer.url, grid, config.dimensions,
                                              ExternalOptions{config.renderer.timeout_s, config.renderer.max_in_flight});
  }
  ProsodyMap map = map_for(config);
  if (map.dimensions() != config.dimensions) {
    throw Error(Errc::shape, "mapping matrix has " + std::to_string(map.dimensions()) + " columns but dimensions = " +
                                 std::to_string(config.dimensions));
  }
  return std::make_unique<BuiltinRenderer>(std::move(map), grid);
}

std::string mapping_checksum(const ExperimentConfig& config) {
  if (config.renderer.kind == RendererConfig::Kind::external) return sha256_hex("external:" + config.renderer.url);
  return map_for(config).checksum();
}

}  // namespace gsp::render
