#include "melody/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace melody {

namespace {

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

// FFTW planning is not thread-safe; execution with fresh arrays is.
class PlanCache {
 public:
  fftw_plan get(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(n));
    std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(n / 2 + 1));
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
    plans_.emplace(n, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace

Spectrum compute_spectrum(std::span<const double> windowed, int sample_rate, int zero_pad_factor,
                          std::size_t frame_index) {
  if (zero_pad_factor < 1) throw std::invalid_argument("zero-pad factor must be >= 1");
  if (windowed.size() < 2) throw std::invalid_argument("frame shorter than 2 samples");
  const std::size_t n = windowed.size() * static_cast<std::size_t>(zero_pad_factor);
  const std::size_t bins = n / 2 + 1;

  fftw_plan plan = plan_cache().get(n);
  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(bins));
  std::copy(windowed.begin(), windowed.end(), in.get());
  std::fill(in.get() + windowed.size(), in.get() + n, 0.0);
  fftw_execute_dft_r2c(plan, in.get(), out.get());

  Spectrum spectrum;
  spectrum.magnitudes.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) spectrum.magnitudes[k] = std::hypot(out.get()[k][0], out.get()[k][1]);
  spectrum.bin_hz = static_cast<double>(sample_rate) / static_cast<double>(n);
  spectrum.frame_index = frame_index;
  spectrum.zero_pad_factor = zero_pad_factor;
  spectrum.window_length = windowed.size();
  spectrum.sample_rate = sample_rate;
  return spectrum;
}

WindowDescriptor::WindowDescriptor(WindowKind kind, std::size_t length, int zero_pad_factor)
    : kind_(kind), length_(length), pad_(zero_pad_factor) {
  if (length < 2 || zero_pad_factor < 1) throw std::invalid_argument("invalid window descriptor");
  half_lobe_ = (kind == WindowKind::Hann ? 2 : 1) * zero_pad_factor;
  auto w = make_window(kind, length);
  for (double v : w) gain_ += v;

  // Fit segments span +-half_lobe bins and the shift search +-0.5 bin.
  max_steps_ = (half_lobe_ + 1) * kStepsPerBin;
  table_.resize(static_cast<std::size_t>(max_steps_) + 1);
  const double m = static_cast<double>(length) * zero_pad_factor;
  for (int s = 0; s <= max_steps_; ++s) {
    const double omega = 2.0 * std::numbers::pi * (static_cast<double>(s) / kStepsPerBin) / m;
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < length; ++n) acc += w[n] * std::polar(1.0, -omega * static_cast<double>(n));
    table_[static_cast<std::size_t>(s)] = std::abs(acc) / gain_;
  }
}

double WindowDescriptor::lobe(int steps) const {
  steps = std::abs(steps);
  if (steps > max_steps_) return 0.0;
  return table_[static_cast<std::size_t>(steps)];
}

double sinusoidality_at(const Spectrum& spectrum, const WindowDescriptor& window, std::size_t bin) {
  const auto& mag = spectrum.magnitudes;
  const int half = window.half_lobe_bins();
  const int first = std::max(0, static_cast<int>(bin) - half);
  const int last = std::min(static_cast<int>(mag.size()) - 1, static_cast<int>(bin) + half);

  double energy = 0.0;
  for (int k = first; k <= last; ++k) energy += mag[k] * mag[k];
  if (energy <= 0.0) return 0.0;

  constexpr int kStep = WindowDescriptor::kStepsPerBin;
  double best_residual = energy;
  for (int shift = -kStep / 2; shift <= kStep / 2; ++shift) {
    double xt = 0.0, tt = 0.0;
    for (int k = first; k <= last; ++k) {
      double t = window.lobe((k - static_cast<int>(bin)) * kStep - shift);
      xt += mag[k] * t;
      tt += t * t;
    }
    if (tt <= 0.0) continue;
    best_residual = std::min(best_residual, std::max(0.0, energy - xt * xt / tt));
  }
  return std::clamp(1.0 - best_residual / energy, 0.0, 1.0);
}

FramePeaks detect_sinusoids(const Spectrum& spectrum, const WindowDescriptor& window,
                            const SinusoidOptions& options) {
  FramePeaks result;
  result.frame_index = spectrum.frame_index;
  const auto& mag = spectrum.magnitudes;
  if (mag.size() < 3) return result;

  const double full_scale = window.coherent_gain() / 2.0;
  const double floor = full_scale * std::pow(10.0, options.noise_floor_db / 20.0);
  const std::size_t top = std::min(
      mag.size() - 1, static_cast<std::size_t>(std::floor(options.max_frequency / spectrum.bin_hz)) + 1);

  std::vector<std::size_t> maxima;
  for (std::size_t k = 1; k < top; ++k) {
    if (mag[k] > floor && mag[k] > mag[k - 1] && mag[k] >= mag[k + 1]) maxima.push_back(k);
  }

  // Resolve crowded maxima before scoring, strongest first, so the kept set
  // does not depend on the sinusoidality threshold.
  std::vector<std::size_t> order = maxima;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return mag[a] > mag[b]; });
  std::vector<std::size_t> kept;
  const std::size_t min_sep = static_cast<std::size_t>(window.half_lobe_bins());
  for (std::size_t k : order) {
    bool crowded = std::any_of(kept.begin(), kept.end(), [&](std::size_t j) {
      return (k > j ? k - j : j - k) < min_sep;
    });
    if (!crowded) kept.push_back(k);
  }
  std::sort(kept.begin(), kept.end());

  const double nyquist = spectrum.sample_rate / 2.0;
  for (std::size_t k : kept) {
    double score = sinusoidality_at(spectrum, window, k);
    if (score < options.threshold) continue;

    const double tiny = 1e-300;
    double a = std::log(std::max(mag[k - 1], tiny));
    double b = std::log(std::max(mag[k], tiny));
    double c = std::log(std::max(mag[k + 1], tiny));
    double denom = a - 2.0 * b + c;
    double offset = denom < 0.0 ? std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) : 0.0;
    double peak_log = b - 0.25 * (a - c) * offset;

    SpectralPeak peak;
    peak.frequency = (static_cast<double>(k) + offset) * spectrum.bin_hz;
    peak.amplitude = std::exp(peak_log) / full_scale;
    peak.sinusoidality = score;
    if (peak.frequency <= 0.0 || peak.frequency >= nyquist || peak.frequency > options.max_frequency) continue;
    result.peaks.push_back(peak);
  }
  return result;
}

}  // namespace melody
