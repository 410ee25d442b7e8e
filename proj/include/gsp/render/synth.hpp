#pragma once

#include <cstdint>

#include "gsp/render/audio.hpp"
#include "gsp/render/prosody.hpp"
#include "gsp/render/sentence.hpp"

namespace gsp::render {

struct SynthOptions {
  int sample_rate = kDefaultSampleRate;
  double edge_silence_s = 0.1;  // before the first and after the last syllable
  double gap_s = 0.05;          // between syllables at rate 1
  double ramp_s = 0.01;         // raised-cosine onset/offset per syllable
  double peak_level = 0.89;
};

/// Glottal-pulse source filtered by a cascade of three vowel formants per
/// syllable. Cycle-level jitter and shimmer draw from `noise_seed` only, so
/// the output is a pure function of its arguments.
AudioBuffer synthesize(const ProsodyParams& params, const SentenceScore& score, std::uint64_t noise_seed,
                       const SynthOptions& options = {});

/// Expected length in seconds of `synthesize` output.
double synthesized_duration(const ProsodyParams& params, const SentenceScore& score, const SynthOptions& options = {});

}  // namespace gsp::render
