#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace melody {

// Mono floating-point audio. Samples are kept in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

class WavError : public std::runtime_error {
 public:
  enum class Kind { Unreadable, Malformed, UnsupportedEncoding, Empty };

  WavError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Decodes a RIFF/WAVE image (PCM 16, PCM 24 or IEEE float 32). Channels are
// averaged to mono, integer samples scaled by 1/2^(bits-1), then clamped.
AudioClip decode_wav(std::span<const std::uint8_t> bytes);
AudioClip load_wav(const std::filesystem::path& path);

// 16-bit PCM little-endian mono.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);
void write_wav(const AudioClip& clip, const std::filesystem::path& path);

enum class WindowKind { Hann, Rectangular };

struct Frame {
  std::size_t index = 0;
  double start_time = 0.0;
  std::vector<double> samples;
};

// Integer frame geometry derived from the window and hop durations.
struct FrameLayout {
  std::size_t window = 0;  // samples
  std::size_t hop = 0;     // samples
  std::size_t count = 0;
  int sample_rate = 0;

  double start_time(std::size_t index) const {
    return static_cast<double>(index * hop) / sample_rate;
  }
  double center_time(std::size_t index) const {
    return (static_cast<double>(index * hop) + 0.5 * static_cast<double>(window)) / sample_rate;
  }
  double hop_seconds() const { return static_cast<double>(hop) / sample_rate; }
  double window_seconds() const { return static_cast<double>(window) / sample_rate; }
};

FrameLayout frame_layout(std::size_t sample_count, int sample_rate, double window_seconds,
                         double hop_seconds);

// Number of frames of length window with stride hop that fit in n samples.
constexpr std::size_t frame_count(std::size_t n, std::size_t window, std::size_t hop) {
  return n < window ? 0 : (n - window) / hop + 1;
}

std::vector<Frame> frame_signal(const AudioClip& clip, double window_seconds, double hop_seconds);

// Copies frame `index` of `layout` out of the clip.
Frame extract_frame(const AudioClip& clip, const FrameLayout& layout, std::size_t index);

std::vector<double> make_window(WindowKind kind, std::size_t length);
Frame apply_window(const Frame& frame, WindowKind kind);

const char* to_string(WindowKind kind);
WindowKind window_kind_from_string(const std::string& name);

}  // namespace melody
