#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gsp/config.hpp"

namespace gsp::render {

enum class VowelClass { a, e, i, o, u };

std::string_view to_string(VowelClass v) noexcept;

struct Syllable {
  double base_duration = 0.15;     // seconds at rate 1
  double base_pitch_offset = 0.0;  // semitones relative to f0_mean
  VowelClass vowel = VowelClass::a;

  bool operator==(const Syllable&) const = default;
};

struct SentenceScore {
  std::string sentence_id;
  std::vector<Syllable> syllables;

  double base_duration() const noexcept;
  bool operator==(const SentenceScore&) const = default;
};

/// Rough syllabification of English text: each maximal run of vowel letters is
/// one syllable, every other syllable stressed starting with the first, final
/// syllable lengthened, and pitch declining from +2 to -3 semitones.
/// Throws Error(config) when the text contains no vowels.
SentenceScore score_sentence(const SentenceRef& sentence);

/// Throws Error(config) unless there is at least one syllable and every
/// duration is positive and finite.
void validate(const SentenceScore& score);

}  // namespace gsp::render
