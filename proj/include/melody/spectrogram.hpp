#pragma once

#include <cstdint>
#include <vector>

#include "melody/audio_io.hpp"
#include "melody/config.hpp"

namespace melody {

struct SpectrogramOptions {
  double fmin = 50.0;
  double fmax = 5000.0;
  // Frames whose centre time lies in [t0, t1]. A negative t1 means "to the end".
  double t0 = 0.0;
  double t1 = -1.0;
  int height = 256;
  double floor_db = -100.0;  // maps to black; 0 dB (a unit sine) maps to white
};

// 8-bit grayscale, row-major, row 0 at fmax. One column per analysis frame.
struct SpectrogramImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  std::size_t first_frame = 0;
  // Centre time of column x is time_origin + x * seconds_per_pixel.
  double time_origin = 0.0;
  double seconds_per_pixel = 0.0;
  // Row y shows fmax * (fmin / fmax)^(y / (height - 1)).
  double fmin = 0.0;
  double fmax = 0.0;

  double row_frequency(int y) const;
};

// Throws std::invalid_argument for an empty or inverted range.
SpectrogramImage render_spectrogram(const AudioClip& clip, const AnalysisConfig& config,
                                    const SpectrogramOptions& options = {});

std::vector<std::uint8_t> encode_png(const SpectrogramImage& image);

}  // namespace melody
