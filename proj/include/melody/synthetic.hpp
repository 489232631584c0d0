#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "melody/audio_io.hpp"
#include "melody/tracking.hpp"

// Deterministic test signals with known pitch ground truth.
namespace melody::synthetic {

using PitchCurve = std::function<double(double)>;  // seconds -> Hz, <= 0 for silence

PitchCurve steady(double f0);
PitchCurve vibrato(double f0, double extent_cents, double rate_hz, double phase = 0.0);

enum class Rolloff { InverseN, Flat };

// Sum of `partials` harmonics of a time-varying F0, phase-accumulated so
// vibrato stays continuous. Partials at or above Nyquist are dropped.
std::vector<double> harmonic_tone(const PitchCurve& f0, double duration, int sample_rate, int partials,
                                  Rolloff rolloff = Rolloff::InverseN);

std::vector<double> white_noise(std::size_t n, std::uint64_t seed);

double rms(const std::vector<double>& x);
void scale_to_rms(std::vector<double>& x, double target);

// Ground truth at analysis frame centres (default 40 ms window, 10 ms hop).
PitchContour truth_contour(const PitchCurve& f0, std::size_t sample_count, int sample_rate,
                           double window_seconds = 0.040, double hop_seconds = 0.010);

struct Item {
  std::string name;
  AudioClip clip;
  PitchContour truth;
};

// 220 Hz +-50 cent vibrato tone with 10 partials.
Item vibrato_tone(double duration = 2.0, int sample_rate = 44100);

// The vibrato tone plus a steady 150 Hz, 3-partial drone at equal RMS.
Item vibrato_with_drone(double duration = 2.0, int sample_rate = 44100);

Item silence(double duration = 2.0, int sample_rate = 44100);

// Alternating sung and non-sung segments over a continuous drone at equal
// level. Sung: vibrato harmonic tone. Non-sung: a steady pitched tone or
// noise. Truth is voiced exactly where the voice sounds.
Item voicing_scene(std::uint64_t seed, double duration = 12.0, int sample_rate = 22050, double segment_seconds = 1.5);

// Everything gen-corpus writes for a given seed.
std::vector<Item> corpus(std::uint64_t seed);

}  // namespace melody::synthetic
