#include "gsp/analysis/features.hpp"

#include <algorithm>
#include <cmath>

#include "gsp/error.hpp"

namespace gsp::analysis {

namespace {

struct Sums {
  double numerator = 0.0;
  std::size_t terms = 0;
  double total = 0.0;
  std::size_t count = 0;

  std::optional<double> ratio() const {
    if (terms == 0 || count == 0 || total <= 0.0) return std::nullopt;
    return (numerator / static_cast<double>(terms)) / (total / static_cast<double>(count));
  }
};

void add_ddp(Sums& s, std::span<const double> p) {
  if (p.size() < 3) return;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    s.numerator += std::abs((p[i + 1] - p[i]) - (p[i] - p[i - 1]));
    ++s.terms;
  }
  for (double v : p) s.total += v;
  s.count += p.size();
}

void add_local(Sums& s, std::span<const double> a) {
  if (a.size() < 2) return;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    s.numerator += std::abs(a[i + 1] - a[i]);
    ++s.terms;
  }
  for (double v : a) s.total += v;
  s.count += a.size();
}

// Vertex of the parabola through (-1, l), (0, c), (1, r).
double vertex_offset(double l, double c, double r) {
  const double denom = l - 2.0 * c + r;
  if (denom >= 0.0) return 0.0;
  return std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
}

double vertex_value(double l, double c, double r) {
  const double d = vertex_offset(l, c, r);
  return c - 0.25 * (l - r) * d;
}

class Tracker {
 public:
  Tracker(const render::AudioBuffer& audio, const std::vector<PitchFrame>& track, const FeatureOptions& options)
      : x_(audio.samples), sr_(audio.sample_rate), track_(track), options_(options) {}

  void run(PulseMarks& out) {
    const double hop = options_.pitch.hop_s;
    std::size_t i = 0;
    while (i < track_.size()) {
      if (!track_[i].voiced) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j + 1 < track_.size() && track_[j + 1].voiced) ++j;
      const double t0 = track_[i].time - hop / 2.0;
      const double t1 = track_[j].time + hop / 2.0;
      span_frames_ = {i, j};
      follow_span(to_index(t0), to_index(t1), out);
      i = j + 1;
    }
  }

 private:
  long to_index(double t) const {
    return std::clamp(std::lround(t * sr_), 0L, static_cast<long>(x_.size()) - 1);
  }

  // Period in samples at time t, from the voiced frames of the current span.
  double period_at(double t) const {
    const auto [first, last] = span_frames_;
    if (t <= track_[first].time) return sr_ / track_[first].f0;
    for (std::size_t k = first; k < last; ++k) {
      if (t <= track_[k + 1].time) {
        const double w = (t - track_[k].time) / (track_[k + 1].time - track_[k].time);
        return sr_ / ((1.0 - w) * track_[k].f0 + w * track_[k + 1].f0);
      }
    }
    return sr_ / track_[last].f0;
  }

  double value(long i) const {
    if (i < 0 || i >= static_cast<long>(x_.size())) return 0.0;
    return polarity_ * x_[static_cast<std::size_t>(i)];
  }

  // Largest polarity-adjusted sample in [lo, hi).
  long peak_in(long lo, long hi) const {
    long best = lo;
    for (long i = lo; i < hi; ++i) {
      if (value(i) > value(best)) best = i;
    }
    return best;
  }

  // Correlation over a window that starts just before each excitation and
  // covers the first part of the cycle, where the response to that excitation
  // dominates the ringing left over from the previous one.
  double ncc(long a, long b, long half) const {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (long i = -half / 4; i <= 3 * half / 4; ++i) {
      const double va = value(a + i);
      const double vb = value(b + i);
      ab += va * vb;
      aa += va * va;
      bb += vb * vb;
    }
    return (aa > 0.0 && bb > 0.0) ? ab / std::sqrt(aa * bb) : 0.0;
  }

  void flush(std::vector<double>& marks, PulseMarks& out) {
    if (marks.size() >= 2) {
      std::vector<double> periods, amplitudes, times;
      for (std::size_t k = 0; k + 1 < marks.size(); ++k) {
        periods.push_back((marks[k + 1] - marks[k]) / sr_);
        const long lo = std::lround(marks[k]);
        const long hi = std::lround(marks[k + 1]);
        const long p = peak_in(lo, std::max(hi, lo + 1));
        amplitudes.push_back(vertex_value(value(p - 1), value(p), value(p + 1)));
      }
      for (double m : marks) times.push_back(m / sr_);
      out.marks.push_back(std::move(times));
      out.periods.push_back(std::move(periods));
      out.amplitudes.push_back(std::move(amplitudes));
    }
    marks.clear();
  }

  void follow_span(long begin, long end, PulseMarks& out) {
    const long guard = std::lround(options_.edge_guard_s * sr_);
    const long lo = begin + guard;
    const long hi = end - guard;
    if (hi <= lo) return;

    double peak_pos = 0.0, peak_neg = 0.0;
    for (long i = begin; i <= end; ++i) {
      peak_pos = std::max(peak_pos, x_[static_cast<std::size_t>(i)]);
      peak_neg = std::max(peak_neg, -x_[static_cast<std::size_t>(i)]);
    }
    polarity_ = peak_pos >= peak_neg ? 1.0 : -1.0;
    const double gate = std::max(peak_pos, peak_neg) * std::pow(10.0, options_.pulse_gate_db / 20.0);
    if (gate <= 0.0) return;

    std::vector<double> marks;
    long cursor = lo;
    while (cursor < hi) {
      if (marks.empty()) {
        // Seed a run at the strongest sample of the next period.
        const double period = period_at(static_cast<double>(cursor) / sr_);
        const long stop = std::min(hi, cursor + std::max(2L, std::lround(period)));
        const long p = peak_in(cursor, stop);
        cursor = stop;
        if (value(p) < gate) continue;
        marks.push_back(static_cast<double>(p) + vertex_offset(value(p - 1), value(p), value(p + 1)));
        continue;
      }
      const double mark = marks.back();
      const double period = period_at(mark / sr_);
      const long m0 = std::lround(mark);
      const long half = std::max(2L, std::lround(period / 2.0));
      const long predicted = std::lround(mark + period);
      const long reach = std::max(1L, std::lround(0.3 * period));
      if (predicted + reach >= hi) break;
      long best = predicted;
      double best_score = -2.0;
      for (long c = predicted - reach; c <= predicted + reach; ++c) {
        const double score = ncc(m0, c, half);
        if (score > best_score) {
          best_score = score;
          best = c;
        }
      }
      const double refined =
          static_cast<double>(best) + vertex_offset(ncc(m0, best - 1, half), best_score, ncc(m0, best + 1, half));
      const long peak = peak_in(best - half / 2, best + half / 2 + 1);
      if (best_score < 0.5 || value(peak) < gate) {
        flush(marks, out);
        cursor = best + 1;
        continue;
      }
      marks.push_back(refined + (mark - static_cast<double>(m0)));
      cursor = best;
    }
    flush(marks, out);
  }

  const std::vector<double>& x_;
  double sr_;
  const std::vector<PitchFrame>& track_;
  const FeatureOptions& options_;
  std::pair<std::size_t, std::size_t> span_frames_{0, 0};
  double polarity_ = 1.0;
};

}  // namespace

bool FeatureVector::complete() const noexcept {
  return f0_mean && f0_slope && f0_range && jitter_ddp && shimmer_local;
}

std::vector<double> FeatureVector::values() const {
  if (!complete()) throw Error(Errc::feature_schema, "feature vector has missing values");
  return {duration, *f0_mean, *f0_slope, *f0_range, *jitter_ddp, *shimmer_local};
}

std::optional<double> jitter_ddp(std::span<const double> periods) {
  Sums s;
  add_ddp(s, periods);
  return s.ratio();
}

std::optional<double> shimmer_local(std::span<const double> amplitudes) {
  Sums s;
  add_local(s, amplitudes);
  return s.ratio();
}

std::optional<double> jitter_ddp(const std::vector<std::vector<double>>& runs) {
  Sums s;
  for (const auto& run : runs) add_ddp(s, run);
  return s.ratio();
}

std::optional<double> shimmer_local(const std::vector<std::vector<double>>& runs) {
  Sums s;
  for (const auto& run : runs) add_local(s, run);
  return s.ratio();
}

double trimmed_duration(const render::AudioBuffer& audio, double trim_db) {
  const double threshold = audio.peak() * std::pow(10.0, trim_db / 20.0);
  const auto& x = audio.samples;
  if (x.empty() || audio.peak() <= 0.0) return 0.0;
  std::size_t first = 0;
  while (first < x.size() && std::abs(x[first]) < threshold) ++first;
  std::size_t last = x.size() - 1;
  while (last > first && std::abs(x[last]) < threshold) --last;
  return static_cast<double>(last - first + 1) / audio.sample_rate;
}

PulseMarks mark_pulses(const render::AudioBuffer& audio, const std::vector<PitchFrame>& track,
                       const FeatureOptions& options) {
  PulseMarks out;
  Tracker(audio, track, options).run(out);
  return out;
}

FeatureVector extract_features(const render::AudioBuffer& audio, const FeatureOptions& options) {
  if (!audio.valid() || audio.duration() < 0.2) {
    throw Error(Errc::size, "feature extraction needs at least 200 ms of valid audio");
  }
  FeatureVector f;
  f.duration = trimmed_duration(audio, options.trim_db);

  const auto track = track_pitch(audio, options.pitch);
  std::vector<double> times, semitones;
  double hz_sum = 0.0;
  for (const auto& frame : track) {
    if (!frame.voiced) continue;
    times.push_back(frame.time);
    semitones.push_back(12.0 * std::log2(frame.f0));
    hz_sum += frame.f0;
  }
  const auto n = static_cast<double>(times.size());
  if (times.empty()) return f;
  f.f0_mean = hz_sum / n;
  if (times.size() >= 2) {
    double mt = 0.0, ms = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      mt += times[i];
      ms += semitones[i];
    }
    mt /= n;
    ms /= n;
    double stt = 0.0, sts = 0.0, sss = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      stt += (times[i] - mt) * (times[i] - mt);
      sts += (times[i] - mt) * (semitones[i] - ms);
      sss += (semitones[i] - ms) * (semitones[i] - ms);
    }
    f.f0_slope = stt > 0.0 ? sts / stt : 0.0;
    f.f0_range = std::sqrt(sss / (n - 1.0));
  }
  const auto pulses = mark_pulses(audio, track, options);
  f.jitter_ddp = jitter_ddp(pulses.periods);
  f.shimmer_local = shimmer_local(pulses.amplitudes);
  return f;
}

}  // namespace gsp::analysis
