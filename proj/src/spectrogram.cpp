#include "melody/spectrogram.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "melody/spectral.hpp"

namespace melody {

double SpectrogramImage::row_frequency(int y) const {
  if (height < 2) return fmax;
  return fmax * std::pow(fmin / fmax, static_cast<double>(y) / (height - 1));
}

SpectrogramImage render_spectrogram(const AudioClip& clip, const AnalysisConfig& config,
                                    const SpectrogramOptions& options) {
  if (!(options.fmin > 0) || !(options.fmax > options.fmin)) {
    throw std::invalid_argument("frequency range needs 0 < fmin < fmax");
  }
  if (options.height < 2 || options.height > 4096) throw std::invalid_argument("height must be in [2, 4096]");
  if (!(options.floor_db < 0)) throw std::invalid_argument("floor_db must be negative");
  const double t1 = options.t1 < 0 ? clip.duration() : options.t1;
  if (!(options.t0 >= 0) || !(t1 > options.t0)) throw std::invalid_argument("time range needs 0 <= t0 < t1");

  const auto layout = frame_layout(clip.samples.size(), clip.sample_rate, config.window_seconds, config.hop_seconds);
  std::size_t first = layout.count, last = 0;
  for (std::size_t i = 0; i < layout.count; ++i) {
    const double c = layout.center_time(i);
    if (c < options.t0 || c > t1) continue;
    first = std::min(first, i);
    last = i;
  }
  if (first == layout.count) throw std::invalid_argument("time range contains no analysis frames");

  SpectrogramImage img;
  img.width = static_cast<int>(last - first + 1);
  img.height = options.height;
  img.first_frame = first;
  img.time_origin = layout.center_time(first);
  img.seconds_per_pixel = layout.hop_seconds();
  img.fmin = options.fmin;
  img.fmax = options.fmax;
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 0);

  const WindowDescriptor window(config.window, layout.window, config.zero_pad_factor);
  const auto taper = make_window(config.window, layout.window);
  const double scale = 2.0 / window.coherent_gain();
  std::vector<double> buf(layout.window);
  for (int x = 0; x < img.width; ++x) {
    const std::size_t frame = first + static_cast<std::size_t>(x);
    const double* src = clip.samples.data() + frame * layout.hop;
    for (std::size_t n = 0; n < layout.window; ++n) buf[n] = src[n] * taper[n];
    const auto spec = compute_spectrum(buf, clip.sample_rate, config.zero_pad_factor, frame);
    const auto& mag = spec.magnitudes;
    for (int y = 0; y < img.height; ++y) {
      // Linear interpolation between the two nearest bins.
      const double pos = img.row_frequency(y) / spec.bin_hz;
      double m = 0.0;
      if (pos < static_cast<double>(mag.size() - 1)) {
        const auto k = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(k);
        m = (1.0 - frac) * mag[k] + frac * mag[k + 1];
      }
      const double db = m > 0 ? 20.0 * std::log10(m * scale) : options.floor_db;
      const double level = std::clamp((db - options.floor_db) / -options.floor_db, 0.0, 1.0);
      img.pixels[static_cast<std::size_t>(y) * img.width + x] = static_cast<std::uint8_t>(std::lround(level * 255.0));
    }
  }
  return img;
}

namespace {

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_nothing(png_structp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const SpectrogramImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw std::invalid_argument("image dimensions do not match pixel buffer");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y) {
    rows[y] = const_cast<png_bytep>(image.pixels.data() + static_cast<std::size_t>(y) * image.width);
  }
  // libpng reports errors by longjmp; nothing with a destructor is created past this point.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encoding failed");
  }
  png_set_write_fn(png, &out, append_bytes, flush_nothing);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace melody
