#include "melody/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace melody::synthetic {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

PitchCurve steady(double f0) {
  return [f0](double) { return f0; };
}

PitchCurve vibrato(double f0, double extent_cents, double rate_hz, double phase) {
  return [=](double t) { return f0 * std::exp2(extent_cents * std::sin(kTwoPi * rate_hz * t + phase) / 1200.0); };
}

std::vector<double> harmonic_tone(const PitchCurve& f0, double duration, int sample_rate, int partials,
                                  Rolloff rolloff) {
  const auto n = static_cast<std::size_t>(std::lround(duration * sample_rate));
  std::vector<double> out(n, 0.0);
  const double nyquist = sample_rate / 2.0;
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = f0(static_cast<double>(i) / sample_rate);
    if (f > 0) {
      double v = 0.0;
      for (int k = 1; k <= partials && k * f < nyquist; ++k) {
        v += (rolloff == Rolloff::InverseN ? 1.0 / k : 1.0) * std::sin(k * phase);
      }
      out[i] = v;
      phase = std::fmod(phase + kTwoPi * f / sample_rate, kTwoPi);
    }
  }
  return out;
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& v : out) v = gauss(rng);
  return out;
}

double rms(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

void scale_to_rms(std::vector<double>& x, double target) {
  const double r = rms(x);
  if (r > 0) {
    for (auto& v : x) v *= target / r;
  }
}

PitchContour truth_contour(const PitchCurve& f0, std::size_t sample_count, int sample_rate, double window_seconds,
                           double hop_seconds) {
  const auto layout = frame_layout(sample_count, sample_rate, window_seconds, hop_seconds);
  PitchContour truth;
  truth.reserve(layout.count);
  for (std::size_t i = 0; i < layout.count; ++i) {
    const double t = layout.center_time(i);
    truth.push_back({t, std::max(0.0, f0(t)), 0.0});
  }
  return truth;
}

namespace {

AudioClip make_clip(std::vector<double> samples, int sample_rate) {
  for (auto& v : samples) v = std::clamp(v, -1.0, 1.0);
  return {std::move(samples), sample_rate};
}

std::vector<double> mix(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

}  // namespace

Item vibrato_tone(double duration, int sample_rate) {
  auto curve = vibrato(220.0, 50.0, 5.5);
  auto tone = harmonic_tone(curve, duration, sample_rate, 10);
  scale_to_rms(tone, 0.2);
  Item item{"vibrato", make_clip(std::move(tone), sample_rate), {}};
  item.truth = truth_contour(curve, item.clip.samples.size(), sample_rate);
  return item;
}

Item vibrato_with_drone(double duration, int sample_rate) {
  auto curve = vibrato(220.0, 50.0, 5.5);
  auto voice = harmonic_tone(curve, duration, sample_rate, 10);
  auto drone = harmonic_tone(steady(150.0), duration, sample_rate, 3, Rolloff::Flat);
  scale_to_rms(voice, 0.15);
  scale_to_rms(drone, 0.15);
  Item item{"vibrato_drone", make_clip(mix(voice, drone), sample_rate), {}};
  item.truth = truth_contour(curve, item.clip.samples.size(), sample_rate);
  return item;
}

Item silence(double duration, int sample_rate) {
  const auto n = static_cast<std::size_t>(std::lround(duration * sample_rate));
  Item item{"silence", AudioClip{std::vector<double>(n, 0.0), sample_rate}, {}};
  item.truth = truth_contour(steady(0.0), n, sample_rate);
  return item;
}

Item voicing_scene(std::uint64_t seed, double duration, int sample_rate, double segment_seconds) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const auto n = static_cast<std::size_t>(std::lround(duration * sample_rate));
  const double level = 0.1;

  auto drone = harmonic_tone(steady(uniform(120.0, 180.0)), duration, sample_rate, 3, Rolloff::Flat);
  scale_to_rms(drone, level);

  const auto seg_len = static_cast<std::size_t>(std::lround(segment_seconds * sample_rate));
  const auto fade = static_cast<std::size_t>(0.01 * sample_rate);
  std::vector<double> foreground(n, 0.0);
  std::vector<std::pair<double, PitchCurve>> voiced_spans;  // segment start time -> curve

  for (std::size_t seg = 0, start = 0; start < n; ++seg, start += seg_len) {
    const std::size_t len = std::min(seg_len, n - start);
    const double seg_dur = static_cast<double>(len) / sample_rate;
    std::vector<double> part;
    if (seg % 2 == 0) {
      auto curve = vibrato(uniform(180.0, 400.0), uniform(30.0, 80.0), uniform(5.0, 7.0), uniform(0.0, kTwoPi));
      part = harmonic_tone(curve, seg_dur, sample_rate, static_cast<int>(uniform(8.0, 13.0)));
      voiced_spans.emplace_back(static_cast<double>(start) / sample_rate, curve);
    } else if (seg % 4 == 1) {
      part = harmonic_tone(steady(uniform(180.0, 400.0)), seg_dur, sample_rate, static_cast<int>(uniform(6.0, 13.0)));
    } else {
      part = white_noise(len, rng());
    }
    part.resize(len, 0.0);
    scale_to_rms(part, level);
    for (std::size_t i = 0; i < len; ++i) {
      double g = 1.0;
      if (i < fade) g = static_cast<double>(i) / fade;
      if (len - i <= fade) g = std::min(g, static_cast<double>(len - i) / fade);
      foreground[start + i] = g * part[i];
    }
  }

  const double seg_dur = static_cast<double>(seg_len) / sample_rate;
  PitchCurve truth_curve = [voiced_spans, seg_dur](double t) {
    for (const auto& [start, curve] : voiced_spans) {
      // Segment-local time: each voice segment is rendered from t = 0.
      if (t >= start && t < start + seg_dur) return curve(t - start);
    }
    return 0.0;
  };

  Item item{"voicing_" + std::to_string(seed), make_clip(mix(foreground, drone), sample_rate), {}};
  item.truth = truth_contour(truth_curve, n, sample_rate);
  return item;
}

std::vector<Item> corpus(std::uint64_t seed) {
  std::vector<Item> items;
  items.push_back(vibrato_tone());
  items.push_back(vibrato_with_drone());
  items.push_back(silence());
  for (std::uint64_t k = 0; k < 4; ++k) items.push_back(voicing_scene(seed * 1000 + k));
  return items;
}

}  // namespace melody::synthetic
