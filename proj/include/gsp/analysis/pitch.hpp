#pragma once

#include <vector>

#include "gsp/render/audio.hpp"

namespace gsp::analysis {

struct PitchOptions {
  double frame_s = 0.04;
  double hop_s = 0.01;
  double min_f0 = 75.0;
  double max_f0 = 500.0;
  double voicing_threshold = 0.45;
  /// Frames quieter than this relative to the loudest frame are unvoiced.
  double silence_db = -40.0;
  /// Among correlation peaks within this fraction of the best, the shortest
  /// lag wins. Guards against halving F0.
  double octave_tolerance = 0.97;
  /// Voiced frames further than this from the median of their neighbours
  /// (within +-5 frames) are treated as tracking errors and unvoiced.
  double outlier_semitones = 3.0;
};

struct PitchFrame {
  double time = 0.0;      // frame centre, s
  double f0 = 0.0;        // Hz, 0 when unvoiced
  double strength = 0.0;  // normalized cross-correlation at the chosen lag
  bool voiced = false;
};

/// Normalized cross-correlation pitch track.
std::vector<PitchFrame> track_pitch(const render::AudioBuffer& audio, const PitchOptions& options = {});

}  // namespace gsp::analysis
