#include "gsp/render/prosody.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gsp/error.hpp"
#include "gsp/render/digest.hpp"
#include "prosody_map_data.hpp"

namespace gsp::render {

std::array<double, ProsodyParams::kCount> ProsodyParams::to_array() const noexcept {
  return {f0_mean, f0_slope, rate, intensity_slope, jitter_depth, shimmer_depth, vibrato_rate, vibrato_depth};
}

ProsodyParams ProsodyParams::from_array(const std::array<double, kCount>& v) noexcept {
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
}

ProsodyParams clamp(ProsodyParams p) noexcept {
  p.f0_mean = std::clamp(p.f0_mean, 60.0, 600.0);
  p.rate = std::clamp(p.rate, 0.5, 2.0);
  p.jitter_depth = std::max(p.jitter_depth, 0.0);
  p.shimmer_depth = std::max(p.shimmer_depth, 0.0);
  p.vibrato_rate = std::max(p.vibrato_rate, 0.0);
  p.vibrato_depth = std::max(p.vibrato_depth, 0.0);
  return p;
}

const ProsodyMap& ProsodyMap::shipped() {
  static const ProsodyMap kMap = parse(detail::kShippedProsodyMap);
  return kMap;
}

ProsodyMap ProsodyMap::parse(std::string_view json_text) {
  ProsodyMap map;
  try {
    const auto j = nlohmann::json::parse(json_text);
    map.version_ = j.at("version").get<std::string>();
    const auto baseline = j.at("baseline").get<std::vector<double>>();
    const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    if (baseline.size() != ProsodyParams::kCount || rows.size() != ProsodyParams::kCount) {
      throw std::invalid_argument("expected 8 baseline values and 8 matrix rows");
    }
    std::array<double, ProsodyParams::kCount> b{};
    std::copy(baseline.begin(), baseline.end(), b.begin());
    map.baseline_ = ProsodyParams::from_array(b);
    map.dimensions_ = static_cast<int>(rows.front().size());
    if (map.dimensions_ < 1) throw std::invalid_argument("matrix has no columns");
    map.columns_.assign(static_cast<std::size_t>(map.dimensions_), {});
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<int>(rows[r].size()) != map.dimensions_) throw std::invalid_argument("ragged matrix");
      for (int d = 0; d < map.dimensions_; ++d) map.columns_[static_cast<std::size_t>(d)][r] = rows[r][static_cast<std::size_t>(d)];
    }
  } catch (const std::exception& e) {
    throw Error(Errc::config, std::string("invalid prosody map: ") + e.what());
  }
  map.checksum_ = sha256_hex(json_text);
  return map;
}

ProsodyMap ProsodyMap::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read prosody map " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

double ProsodyMap::coefficient(std::size_t param, int dimension) const {
  return columns_.at(static_cast<std::size_t>(dimension)).at(param);
}

ProsodyParams ProsodyMap::apply(std::span<const double> weights) const {
  if (static_cast<int>(weights.size()) != dimensions_) {
    throw Error(Errc::shape, "prosody map expects " + std::to_string(dimensions_) + " weights, got " +
                                 std::to_string(weights.size()));
  }
  auto values = baseline_.to_array();
  for (int d = 0; d < dimensions_; ++d) {
    const double w = weights[static_cast<std::size_t>(d)];
    if (w == 0.0) continue;
    const auto& column = columns_[static_cast<std::size_t>(d)];
    for (std::size_t r = 0; r < ProsodyParams::kCount; ++r) values[r] += column[r] * w;
  }
  return clamp(ProsodyParams::from_array(values));
}

int ProsodyMap::strongest_f0_dimension() const noexcept {
  int best = 0;
  for (int d = 1; d < dimensions_; ++d) {
    if (columns_[static_cast<std::size_t>(d)][0] > columns_[static_cast<std::size_t>(best)][0]) best = d;
  }
  return best;
}

ProsodyParams map_latent_to_prosody(const ProsodyMap& map, const LatentPoint& point, const SliderGrid& grid) {
  if (static_cast<int>(point.dimensions()) != map.dimensions()) {
    throw Error(Errc::shape, "latent point has " + std::to_string(point.dimensions()) + " dimensions, map expects " +
                                 std::to_string(map.dimensions()));
  }
  const auto weights = point.weights(grid);
  return map.apply(weights);
}

}  // namespace gsp::render
