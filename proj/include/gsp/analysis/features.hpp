#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gsp/analysis/pitch.hpp"
#include "gsp/render/audio.hpp"

namespace gsp::analysis {

struct FeatureOptions {
  PitchOptions pitch;
  double trim_db = -40.0;        // duration trim relative to peak
  double pulse_gate_db = -30.0;  // cycles quieter than this relative to their span are skipped
  double edge_guard_s = 0.02;    // excluded at both ends of every voiced stretch
};

/// F0-derived fields are empty for fully unvoiced audio rather than zero.
struct FeatureVector {
  double duration = 0.0;                // s
  std::optional<double> f0_mean;        // Hz
  std::optional<double> f0_slope;       // semitones/s
  std::optional<double> f0_range;       // semitones, SD of the centred track
  std::optional<double> jitter_ddp;     // fraction
  std::optional<double> shimmer_local;  // fraction

  static constexpr std::array<std::string_view, 6> kNames{"duration", "f0_mean", "f0_slope", "f0_range", "jitter_ddp",
                                                          "shimmer_local"};
  bool complete() const noexcept;
  /// Values in kNames order; requires complete().
  std::vector<double> values() const;
};

/// Cycle-level measurements within voiced stretches. Each inner vector is one
/// uninterrupted run of glottal cycles.
struct PulseMarks {
  std::vector<std::vector<double>> marks;       // s
  std::vector<std::vector<double>> periods;     // s
  std::vector<std::vector<double>> amplitudes;  // one per period
};

FeatureVector extract_features(const render::AudioBuffer& audio, const FeatureOptions& options = {});

PulseMarks mark_pulses(const render::AudioBuffer& audio, const std::vector<PitchFrame>& track,
                       const FeatureOptions& options = {});

/// mean |P[i-1] - 2P[i] + P[i+1]| / mean P. Empty when fewer than 3 periods.
std::optional<double> jitter_ddp(std::span<const double> periods);
/// mean |A[i+1] - A[i]| / mean A. Empty when fewer than 2 amplitudes.
std::optional<double> shimmer_local(std::span<const double> amplitudes);

/// Pools several runs: differences are taken within a run only.
std::optional<double> jitter_ddp(const std::vector<std::vector<double>>& runs);
std::optional<double> shimmer_local(const std::vector<std::vector<double>>& runs);

/// Seconds between the first and last sample within `trim_db` of the peak.
double trimmed_duration(const render::AudioBuffer& audio, double trim_db = -40.0);

}  // namespace gsp::analysis
