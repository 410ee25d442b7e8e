#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gsp/grid.hpp"

namespace gsp::render {

struct ProsodyParams {
  double f0_mean = 180.0;         // Hz
  double f0_slope = 0.0;          // semitones/s
  double rate = 1.0;              // speaking-rate multiplier; durations scale by 1/rate
  double intensity_slope = 0.0;   // dB/s
  double jitter_depth = 0.0;      // relative SD of cycle periods
  double shimmer_depth = 0.0;     // relative SD of cycle amplitudes
  double vibrato_rate = 5.0;      // Hz
  double vibrato_depth = 0.0;     // semitones

  static constexpr std::size_t kCount = 8;
  static constexpr std::array<std::string_view, kCount> kNames{
      "f0_mean", "f0_slope", "rate", "intensity_slope", "jitter_depth", "shimmer_depth", "vibrato_rate", "vibrato_depth"};

  std::array<double, kCount> to_array() const noexcept;
  static ProsodyParams from_array(const std::array<double, kCount>& values) noexcept;

  bool operator==(const ProsodyParams&) const = default;
};

/// f0_mean to [60, 600] Hz, rate to [0.5, 2], depths and vibrato rate to >= 0.
ProsodyParams clamp(ProsodyParams params) noexcept;

/// Versioned 8 x D matrix plus baseline, loaded from a JSON data file.
class ProsodyMap {
 public:
  /// The matrix shipped in data/prosody_map_v1.json.
  static const ProsodyMap& shipped();
  static ProsodyMap parse(std::string_view json_text);
  static ProsodyMap load(const std::filesystem::path& path);

  const std::string& version() const noexcept { return version_; }
  /// SHA-256 of the source text; recorded with every experiment.
  const std::string& checksum() const noexcept { return checksum_; }
  int dimensions() const noexcept { return dimensions_; }
  const ProsodyParams& baseline() const noexcept { return baseline_; }
  double coefficient(std::size_t param, int dimension) const;

  /// baseline + M * weights, clamped. Throws Error(shape) on a length mismatch.
  ProsodyParams apply(std::span<const double> weights) const;

  /// Column with the largest positive f0_mean coefficient.
  int strongest_f0_dimension() const noexcept;

 private:
  std::string version_;
  std::string checksum_;
  int dimensions_ = 0;
  ProsodyParams baseline_;
  std::vector<std::array<double, ProsodyParams::kCount>> columns_;
};

ProsodyParams map_latent_to_prosody(const ProsodyMap& map, const LatentPoint& point, const SliderGrid& grid);

}  // namespace gsp::render
