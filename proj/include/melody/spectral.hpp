#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "melody/audio_io.hpp"

namespace melody {

// Magnitude of the DFT of a zero-padded frame, DC through Nyquist.
struct Spectrum {
  std::vector<double> magnitudes;
  double bin_hz = 0.0;
  std::size_t frame_index = 0;
  int zero_pad_factor = 1;
  std::size_t window_length = 0;
  int sample_rate = 0;

  std::size_t fft_size() const { return window_length * static_cast<std::size_t>(zero_pad_factor); }
};

Spectrum compute_spectrum(std::span<const double> windowed, int sample_rate, int zero_pad_factor,
                          std::size_t frame_index = 0);

struct SpectralPeak {
  double frequency = 0.0;      // Hz, interpolated
  double amplitude = 0.0;      // linear; a unit-amplitude sinusoid reads 1.0
  double sinusoidality = 0.0;  // closeness to the ideal main lobe, [0, 1]
};

struct FramePeaks {
  std::size_t frame_index = 0;
  double start_time = 0.0;
  std::vector<SpectralPeak> peaks;  // strictly increasing frequency
};

// Describes the analysis window a spectrum was computed with, and holds the
// magnitude of its transform sampled every 0.1 padded bins around DC. That
// sampled main lobe is the template peaks are matched against.
class WindowDescriptor {
 public:
  static constexpr int kStepsPerBin = 10;

  WindowDescriptor(WindowKind kind, std::size_t length, int zero_pad_factor);

  WindowKind kind() const { return kind_; }
  std::size_t length() const { return length_; }
  int zero_pad_factor() const { return pad_; }
  // Half main-lobe width in padded bins (2 bins per pad step for Hann, 1 for rectangular).
  int half_lobe_bins() const { return half_lobe_; }
  // Sum of the window samples. A sinusoid of amplitude A peaks at A * gain / 2.
  double coherent_gain() const { return gain_; }
  // Normalized main-lobe magnitude at an offset of steps / kStepsPerBin padded bins.
  double lobe(int steps) const;

 private:
  WindowKind kind_;
  std::size_t length_;
  int pad_;
  int half_lobe_;
  double gain_ = 0.0;
  int max_steps_ = 0;
  std::vector<double> table_;
};

struct SinusoidOptions {
  double threshold = 0.8;  // minimum sinusoidality
  double noise_floor_db = -100.0;
  double max_frequency = 5000.0;
};

// Sinusoidality of the local maximum at `bin`: 1 - residual/segment energy of
// the best least-squares fit of a scaled, sub-bin shifted main-lobe template.
double sinusoidality_at(const Spectrum& spectrum, const WindowDescriptor& window, std::size_t bin);

FramePeaks detect_sinusoids(const Spectrum& spectrum, const WindowDescriptor& window,
                            const SinusoidOptions& options = {});

}  // namespace melody
