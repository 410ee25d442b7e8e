#include "gsp/render/sentence.hpp"

#include <cctype>
#include <cmath>

#include "gsp/error.hpp"

namespace gsp::render {

namespace {

constexpr double kStressedDuration = 0.22;
constexpr double kUnstressedDuration = 0.15;
constexpr double kFinalLengthening = 1.3;
constexpr double kDeclinationStart = 2.0;
constexpr double kDeclinationEnd = -3.0;
constexpr double kStressBoost = 1.5;

bool is_vowel(char c) {
  switch (std::tolower(static_cast<unsigned char>(c))) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
      return true;
    default:
      return false;
  }
}

VowelClass classify(char c) {
  switch (std::tolower(static_cast<unsigned char>(c))) {
    case 'a': return VowelClass::a;
    case 'e': return VowelClass::e;
    case 'o': return VowelClass::o;
    case 'u': return VowelClass::u;
    default: return VowelClass::i;
  }
}

}  // namespace

std::string_view to_string(VowelClass v) noexcept {
  switch (v) {
    case VowelClass::a: return "a";
    case VowelClass::e: return "e";
    case VowelClass::i: return "i";
    case VowelClass::o: return "o";
    case VowelClass::u: return "u";
  }
  return "?";
}

double SentenceScore::base_duration() const noexcept {
  double total = 0.0;
  for (const auto& s : syllables) total += s.base_duration;
  return total;
}

SentenceScore score_sentence(const SentenceRef& sentence) {
  std::vector<VowelClass> nuclei;
  const std::string& text = sentence.text;
  for (std::size_t i = 0; i < text.size();) {
    if (!is_vowel(text[i])) {
      ++i;
      continue;
    }
    nuclei.push_back(classify(text[i]));
    while (i < text.size() && is_vowel(text[i])) ++i;
  }
  if (nuclei.empty()) throw Error(Errc::config, "sentence '" + sentence.id + "' has no vowels");

  SentenceScore score{sentence.id, {}};
  const std::size_t n = nuclei.size();
  for (std::size_t k = 0; k < n; ++k) {
    const bool stressed = k % 2 == 0;
    const double frac = n > 1 ? static_cast<double>(k) / static_cast<double>(n - 1) : 0.0;
    Syllable s;
    s.vowel = nuclei[k];
    s.base_duration = stressed ? kStressedDuration : kUnstressedDuration;
    if (k + 1 == n) s.base_duration *= kFinalLengthening;
    s.base_pitch_offset = kDeclinationStart + frac * (kDeclinationEnd - kDeclinationStart) + (stressed ? kStressBoost : 0.0);
    score.syllables.push_back(s);
  }
  return score;
}

void validate(const SentenceScore& score) {
  if (score.syllables.empty()) throw Error(Errc::config, "sentence score has no syllables");
  for (const auto& s : score.syllables) {
    if (!std::isfinite(s.base_duration) || s.base_duration <= 0.0) {
      throw Error(Errc::config, "syllable duration must be positive");
    }
    if (!std::isfinite(s.base_pitch_offset)) throw Error(Errc::config, "syllable pitch offset must be finite");
  }
}

}  // namespace gsp::render
