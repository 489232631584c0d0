#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "melody/spectrogram.hpp"
#include "melody/synthetic.hpp"

using namespace melody;

TEST_CASE("silence renders uniform black") {
  auto item = synthetic::silence(1.0, 16000);
  auto img = render_spectrogram(item.clip, AnalysisConfig{});
  REQUIRE(img.pixels.size() == static_cast<std::size_t>(img.width * img.height));
  for (auto v : img.pixels) REQUIRE(v == 0);
}

TEST_CASE("full clip gives one column per frame") {
  auto item = synthetic::vibrato_tone(1.0, 16000);
  AnalysisConfig cfg;
  const auto layout = frame_layout(item.clip.samples.size(), item.clip.sample_rate, cfg.window_seconds, cfg.hop_seconds);
  auto img = render_spectrogram(item.clip, cfg);
  CHECK(img.width == static_cast<int>(layout.count));
  CHECK(img.height == 256);
  CHECK(img.first_frame == 0);
  CHECK(img.time_origin == doctest::Approx(layout.center_time(0)));
  CHECK(img.seconds_per_pixel == doctest::Approx(layout.hop_seconds()));
  CHECK(img.row_frequency(0) == doctest::Approx(5000.0));
  CHECK(img.row_frequency(img.height - 1) == doctest::Approx(50.0));
}

TEST_CASE("a steady tone lights the row at its frequency") {
  synthetic::PitchCurve f = synthetic::steady(440.0);
  AudioClip clip{synthetic::harmonic_tone(f, 1.0, 16000, 1), 16000};
  auto img = render_spectrogram(clip, AnalysisConfig{}, {.fmin = 100, .fmax = 2000, .height = 300});
  const int x = img.width / 2;
  int best = 0;
  for (int y = 1; y < img.height; ++y) {
    if (img.pixels[y * img.width + x] > img.pixels[best * img.width + x]) best = y;
  }
  CHECK(std::abs(1200.0 * std::log2(img.row_frequency(best) / 440.0)) < 20.0);
}

TEST_CASE("sub-range selection and bad ranges") {
  auto item = synthetic::vibrato_tone(1.0, 16000);
  AnalysisConfig cfg;
  auto part = render_spectrogram(item.clip, cfg, {.t0 = 0.25, .t1 = 0.5});
  CHECK(part.time_origin >= 0.25);
  CHECK(part.time_origin + (part.width - 1) * part.seconds_per_pixel <= 0.5 + 1e-9);
  CHECK(part.width == 26);

  auto full = render_spectrogram(item.clip, cfg);
  for (int y = 0; y < part.height; ++y) {
    for (int x = 0; x < part.width; ++x) {
      REQUIRE(part.pixels[y * part.width + x] == full.pixels[y * full.width + x + static_cast<int>(part.first_frame)]);
    }
  }

  CHECK_THROWS_AS(render_spectrogram(item.clip, cfg, {.t0 = 0.5, .t1 = 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(render_spectrogram(item.clip, cfg, {.t0 = 0.5, .t1 = 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(render_spectrogram(item.clip, cfg, {.fmin = 500, .fmax = 100}), std::invalid_argument);
  CHECK_THROWS_AS(render_spectrogram(item.clip, cfg, {.height = 1}), std::invalid_argument);
  CHECK_THROWS_AS(render_spectrogram(item.clip, cfg, {.t0 = 5.0, .t1 = 6.0}), std::invalid_argument);
}

TEST_CASE("PNG encoding") {
  SpectrogramImage img;
  img.width = 3, img.height = 2;
  img.pixels = {0, 128, 255, 1, 2, 3};
  auto png = encode_png(img);
  const std::vector<std::uint8_t> sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  REQUIRE(png.size() > 33);
  CHECK(std::equal(sig.begin(), sig.end(), png.begin()));
  // IHDR width and height, big endian.
  CHECK(png[19] == 3);
  CHECK(png[23] == 2);
}
