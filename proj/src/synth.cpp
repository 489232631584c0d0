#include "melody/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace melody {

SynthMode synth_mode_from_string(const std::string& name) {
  if (name == "sine") return SynthMode::Sine;
  if (name == "harmonic") return SynthMode::Harmonic;
  throw std::invalid_argument("unknown synthesis mode '" + name + "' (expected sine or harmonic)");
}

AudioClip synthesize_contour(const PitchContour& contour, int sample_rate, SynthMode mode, double amplitude) {
  if (sample_rate < 8000) throw std::invalid_argument("synthesis sample rate must be >= 8000 Hz");
  if (!(amplitude >= 0 && amplitude <= 1)) throw std::invalid_argument("amplitude must be in [0, 1]");
  AudioClip clip;
  clip.sample_rate = sample_rate;
  if (contour.empty()) return clip;

  const double spacing = contour.size() > 1 ? contour[1].time - contour[0].time : 0.01;
  const double duration = contour.back().time + spacing;
  const auto n = static_cast<std::size_t>(std::max(0L, std::lround(duration * sample_rate)));
  clip.samples.assign(n, 0.0);
  if (n == 0) return clip;

  // Per-sample voicing gate and frequency.
  std::vector<bool> gate(n);
  std::vector<double> freq(n, 0.0);
  std::size_t j = 0;  // contour[j].time <= t < contour[j + 1].time once t passes contour[0]
  double held = 0.0;
  for (const auto& p : contour) {
    if (p.voiced()) {
      held = p.f0;
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    while (j + 1 < contour.size() && contour[j + 1].time <= t) ++j;
    const auto& a = contour[j];
    const bool before_first = t < contour.front().time;
    const bool has_next = !before_first && j + 1 < contour.size();
    const auto& b = has_next ? contour[j + 1] : a;
    // Nearest frame decides voicing.
    const bool near_b = has_next && (t - a.time) > (b.time - t);
    gate[i] = near_b ? b.voiced() : a.voiced();

    double f = 0.0;
    if (has_next && a.voiced() && b.voiced()) {
      const double w = (t - a.time) / (b.time - a.time);
      f = a.f0 + w * (b.f0 - a.f0);
    } else if (gate[i]) {
      f = near_b ? b.f0 : a.f0;
    }
    if (f > 0) held = f;
    freq[i] = held;
  }

  // Raised-cosine envelope from the distance to the nearest silent sample.
  const double fade = std::max(1.0, std::round(kSynthFadeSeconds * sample_rate));
  std::vector<double> dist(n, 0.0);
  double run = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run = gate[i] ? run + 1.0 : 0.0;
    dist[i] = run;
  }
  run = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    run = gate[i] ? run + 1.0 : 0.0;
    dist[i] = std::min(dist[i], run);
  }

  constexpr int kPartials = 5;
  constexpr double kHarmonicNorm = 1.0 + 1.0 / 2 + 1.0 / 3 + 1.0 / 4 + 1.0 / 5;
  const double nyquist = sample_rate / 2.0;
  const double two_pi = 2.0 * std::numbers::pi;
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double env = 0.5 * (1.0 - std::cos(std::numbers::pi * std::min(dist[i], fade) / fade));
    double value = 0.0;
    if (env > 0.0 && freq[i] > 0.0) {
      if (mode == SynthMode::Sine) {
        value = std::sin(phase);
      } else {
        for (int k = 1; k <= kPartials; ++k) {
          if (k * freq[i] >= nyquist) break;
          value += std::sin(k * phase) / k;
        }
        value /= kHarmonicNorm;
      }
    }
    clip.samples[i] = std::clamp(amplitude * env * value, -1.0, 1.0);
    // Trapezoid step: exact for the piecewise-linear frequency track.
    const double next = i + 1 < n ? freq[i + 1] : freq[i];
    phase = std::fmod(phase + two_pi * 0.5 * (freq[i] + next) / sample_rate, two_pi);
  }
  return clip;
}

}  // namespace melody
