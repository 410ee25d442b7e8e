#include "gsp/render/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "gsp/error.hpp"

namespace gsp::render {

namespace {

constexpr double kOpenPhase = 0.4;
constexpr double kClosePhase = 0.16;
constexpr std::array<double, 3> kBandwidths{60.0, 90.0, 120.0};

std::array<double, 3> formants(VowelClass v) {
  switch (v) {
    case VowelClass::a: return {730.0, 1090.0, 2440.0};
    case VowelClass::e: return {530.0, 1840.0, 2480.0};
    case VowelClass::i: return {270.0, 2290.0, 3010.0};
    case VowelClass::o: return {570.0, 840.0, 2410.0};
    case VowelClass::u: return {300.0, 870.0, 2240.0};
  }
  return {500.0, 1500.0, 2500.0};
}

// Rosenberg glottal flow over one normalized cycle, closed phase first so that
// glottal closure falls exactly on the cycle boundary.
double glottal_flow(double phase) {
  phase -= 1.0 - kOpenPhase - kClosePhase;
  if (phase < 0.0) return 0.0;
  if (phase < kOpenPhase) return 0.5 * (1.0 - std::cos(std::numbers::pi * phase / kOpenPhase));
  if (phase < kOpenPhase + kClosePhase) return std::cos(std::numbers::pi * (phase - kOpenPhase) / (2.0 * kClosePhase));
  return 0.0;
}

// Two-pole resonator with unit gain at DC.
class Resonator {
 public:
  Resonator(double frequency, double bandwidth, int sample_rate) {
    const double t = 1.0 / sample_rate;
    c_ = -std::exp(-2.0 * std::numbers::pi * bandwidth * t);
    b_ = 2.0 * std::exp(-std::numbers::pi * bandwidth * t) * std::cos(2.0 * std::numbers::pi * frequency * t);
    a_ = 1.0 - b_ - c_;
  }

  double operator()(double x) {
    const double y = a_ * x + b_ * y1_ + c_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a_, b_, c_;
  double y1_ = 0.0, y2_ = 0.0;
};

double raised_cosine(double t, double ramp) {
  if (ramp <= 0.0 || t >= ramp) return 1.0;
  if (t <= 0.0) return 0.0;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * t / ramp));
}

}  // namespace

double synthesized_duration(const ProsodyParams& params, const SentenceScore& score, const SynthOptions& options) {
  const ProsodyParams p = clamp(params);
  const double gaps = options.gap_s * static_cast<double>(score.syllables.size() - 1);
  return 2.0 * options.edge_silence_s + (score.base_duration() + gaps) / p.rate;
}

AudioBuffer synthesize(const ProsodyParams& params, const SentenceScore& score, std::uint64_t noise_seed,
                       const SynthOptions& options) {
  validate(score);
  const ProsodyParams p = clamp(params);
  const int sr = options.sample_rate;
  const double gap = options.gap_s / p.rate;

  std::vector<double> starts;
  std::vector<double> lengths;
  double cursor = 0.0;
  for (std::size_t k = 0; k < score.syllables.size(); ++k) {
    if (k > 0) cursor += gap;
    starts.push_back(cursor);
    lengths.push_back(score.syllables[k].base_duration / p.rate);
    cursor += lengths.back();
  }
  const double voiced_span = cursor;
  const double midpoint = voiced_span / 2.0;

  const auto lead = static_cast<std::size_t>(std::llround(options.edge_silence_s * sr));
  const auto body = static_cast<std::size_t>(std::llround(voiced_span * sr));
  AudioBuffer out;
  out.sample_rate = sr;
  out.samples.assign(lead + body + lead, 0.0);

  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&] { return std::clamp(normal(rng), -3.0, 3.0); };

  auto f0_at = [&](double t, double offset) {
    const double vibrato = p.vibrato_depth * std::sin(2.0 * std::numbers::pi * p.vibrato_rate * t);
    return p.f0_mean * std::exp2((offset + p.f0_slope * (t - midpoint) + vibrato) / 12.0);
  };

  std::vector<double> segment;
  for (std::size_t k = 0; k < score.syllables.size(); ++k) {
    const Syllable& syl = score.syllables[k];
    const auto first = static_cast<std::size_t>(std::llround(starts[k] * sr));
    const auto count = std::min(static_cast<std::size_t>(std::llround(lengths[k] * sr)), body - std::min(body, first));
    if (count == 0) continue;

    // Source: differentiated glottal flow, one period and amplitude per cycle.
    segment.assign(count, 0.0);
    double phase = 0.0;
    double period = 0.0;
    double amplitude = 1.0;
    auto start_cycle = [&](double t) {
      period = (1.0 / f0_at(t, syl.base_pitch_offset)) * std::max(0.2, 1.0 + p.jitter_depth * draw());
      amplitude = std::max(0.1, 1.0 + p.shimmer_depth * draw());
    };
    start_cycle(starts[k]);
    double previous = 0.0;
    for (std::size_t n = 0; n < count; ++n) {
      const double flow = amplitude * glottal_flow(phase);
      segment[n] = flow - previous;
      previous = flow;
      phase += 1.0 / (period * sr);
      if (phase >= 1.0) {
        phase -= 1.0;
        const double t = starts[k] + static_cast<double>(n + 1) / sr;
        const double elapsed_fraction = phase;
        const double old_period = period;
        start_cycle(t);
        // Carry the overshoot into the new cycle at the new period.
        phase = elapsed_fraction * old_period / period;
      }
    }

    const auto f = formants(syl.vowel);
    std::array<Resonator, 3> filters{Resonator(f[0], kBandwidths[0], sr), Resonator(f[1], kBandwidths[1], sr),
                                     Resonator(f[2], kBandwidths[2], sr)};
    double energy = 0.0;
    for (double& x : segment) {
      for (auto& r : filters) x = r(x);
      energy += x * x;
    }
    const double rms = std::sqrt(energy / static_cast<double>(count));
    const double norm = rms > 0.0 ? 1.0 / rms : 0.0;

    // Intensity slope in dB/s as an exponential gain, stepped per sample.
    const double rate_per_s = p.intensity_slope * std::numbers::ln10 / 20.0;
    const double step = std::exp(rate_per_s / sr);
    double gain = std::exp(rate_per_s * (starts[k] - midpoint));
    const double length = static_cast<double>(count) / sr;
    for (std::size_t n = 0; n < count; ++n) {
      const double local = static_cast<double>(n) / sr;
      const double envelope = raised_cosine(local, options.ramp_s) * raised_cosine(length - local, options.ramp_s);
      out.samples[lead + first + n] = segment[n] * norm * envelope * gain;
      gain *= step;
    }
  }

  const double peak = out.peak();
  if (peak > 0.0) {
    const double scale = options.peak_level / peak;
    for (double& x : out.samples) x *= scale;
  }
  return out;
}

}  // namespace gsp::render
