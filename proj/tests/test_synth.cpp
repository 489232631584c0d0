#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "melody/spectral.hpp"
#include "melody/synth.hpp"
#include "melody/synthetic.hpp"

using namespace melody;

namespace {

PitchContour constant(double f0, int frames, double hop = 0.01) {
  PitchContour c;
  for (int i = 0; i < frames; ++i) c.push_back({0.02 + hop * i, f0, -0.1});
  return c;
}

}  // namespace

TEST_CASE("empty and unvoiced contours") {
  auto empty = synthesize_contour({}, 16000);
  CHECK(empty.samples.empty());
  CHECK(empty.sample_rate == 16000);

  auto silent = synthesize_contour(constant(0.0, 100), 16000);
  CHECK(!silent.samples.empty());
  CHECK(synthetic::rms(silent.samples) == 0.0);

  CHECK_THROWS(synthesize_contour(constant(440, 5), 4000));
  CHECK_THROWS(synthesize_contour(constant(440, 5), 16000, SynthMode::Sine, 1.5));
  CHECK(synth_mode_from_string("harmonic") == SynthMode::Harmonic);
  CHECK_THROWS(synth_mode_from_string("saw"));
}

TEST_CASE("duration covers the contour span") {
  auto c = constant(300, 50);  // last centre at 0.51 s
  auto clip = synthesize_contour(c, 8000);
  CHECK(clip.samples.size() == static_cast<std::size_t>(std::lround(0.52 * 8000)));
}

TEST_CASE("constant 440 Hz: spectral peak and RMS") {
  const int rate = 16000;
  const double amp = 0.5;
  auto clip = synthesize_contour(constant(440.0, 100), rate, SynthMode::Sine, amp);
  // Skip the leading silence before the first frame centre and the fades.
  const std::size_t start = static_cast<std::size_t>(0.03 * rate);
  const std::size_t len = static_cast<std::size_t>(0.9 * rate);
  REQUIRE(start + len <= clip.samples.size());
  std::vector<double> body(clip.samples.begin() + start, clip.samples.begin() + start + len);
  CHECK(synthetic::rms(body) == doctest::Approx(amp / std::sqrt(2.0)).epsilon(0.02));

  auto spec = compute_spectrum(body, rate, 1);
  const auto peak = std::max_element(spec.magnitudes.begin(), spec.magnitudes.end()) - spec.magnitudes.begin();
  CHECK(std::abs(peak * spec.bin_hz - 440.0) <= spec.bin_hz);
}

TEST_CASE("harmonic mode stays in range and carries partials") {
  const int rate = 16000;
  auto clip = synthesize_contour(constant(200.0, 100), rate, SynthMode::Harmonic, 1.0);
  for (double v : clip.samples) REQUIRE(std::abs(v) <= 1.0);
  std::vector<double> body(clip.samples.begin() + 800, clip.samples.begin() + 800 + 8000);
  auto spec = compute_spectrum(body, rate, 1);
  // 8000 samples at 16 kHz: 2 Hz bins, partial n sits on bin 100n.
  for (int n = 1; n <= 5; ++n) CHECK(spec.magnitudes[100 * n] > 0.1 * spec.magnitudes[100]);
  CHECK(spec.magnitudes[100 * 6] < 1e-3 * spec.magnitudes[100]);
}

TEST_CASE("voiced-unvoiced-voiced has no clicks") {
  const int rate = 16000;
  const double amp = 0.8;
  PitchContour c;
  for (int i = 0; i < 90; ++i) c.push_back({0.01 * i, (i / 30) % 2 ? 0.0 : 350.0, 0.0});
  auto clip = synthesize_contour(c, rate, SynthMode::Sine, amp);
  // A sine moves at most amp*2*pi*f/rate per sample; the fade adds amp*pi/(2*fade_len).
  const double fade_len = kSynthFadeSeconds * rate;
  const double limit = amp * (2 * std::numbers::pi * 350.0 / rate + std::numbers::pi / (2 * fade_len)) * 1.01;
  double worst = 0.0;
  for (std::size_t i = 1; i < clip.samples.size(); ++i) worst = std::max(worst, std::abs(clip.samples[i] - clip.samples[i - 1]));
  CHECK(worst <= limit);
  // The gap is silent away from its edges.
  const auto mid = static_cast<std::size_t>(0.45 * rate);
  for (std::size_t i = mid - 500; i < mid + 500; ++i) REQUIRE(clip.samples[i] == 0.0);
}

TEST_CASE("property: instantaneous frequency follows the interpolated contour") {
  const int rate = 22050;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> f(100, 900);
  for (int rep = 0; rep < 10; ++rep) {
    PitchContour c;
    for (int i = 0; i < 40; ++i) c.push_back({0.01 * i, f(rng), 0.0});
    auto clip = synthesize_contour(c, rate, SynthMode::Sine, 1.0);
    auto interp = [&](double t) {
      const auto j = std::min<std::size_t>(static_cast<std::size_t>(t / 0.01), c.size() - 2);
      const double w = (t - c[j].time) / 0.01;
      return c[j].f0 + w * (c[j + 1].f0 - c[j].f0);
    };
    // Upward zero crossings are exactly one cycle of phase apart, so the
    // contour integrated between them must be one cycle too.
    std::vector<double> crossings;
    for (std::size_t i = 1; i < clip.samples.size(); ++i) {
      const double a = clip.samples[i - 1], b = clip.samples[i];
      if (a < 0 && b >= 0) crossings.push_back((static_cast<double>(i) - 1 + a / (a - b)) / rate);
    }
    int checked = 0;
    for (std::size_t k = 1; k < crossings.size(); ++k) {
      const double t0 = crossings[k - 1], t1 = crossings[k];
      if (t0 < 0.02 || t1 > 0.38) continue;
      const int steps = 400;
      double cycles = 0.0;
      for (int s = 0; s < steps; ++s) cycles += interp(t0 + (s + 0.5) * (t1 - t0) / steps) * (t1 - t0) / steps;
      // Mean contour frequency over the period vs the measured one.
      CHECK(std::abs(cycles - 1.0) / (t1 - t0) <= 1.0);
      ++checked;
    }
    CHECK(checked > 100);
  }
}

TEST_CASE("property: samples within [-1, 1]") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> f(50, 3000);
  std::bernoulli_distribution voiced(0.7);
  for (int rep = 0; rep < 20; ++rep) {
    PitchContour c;
    for (int i = 0; i < 30; ++i) c.push_back({0.01 * i, voiced(rng) ? f(rng) : 0.0, 0.0});
    for (auto mode : {SynthMode::Sine, SynthMode::Harmonic}) {
      auto clip = synthesize_contour(c, 8000, mode, 1.0);
      for (double v : clip.samples) REQUIRE(std::abs(v) <= 1.0);
    }
  }
}
