#include "melody/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

namespace melody {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

double decode_sample(const std::uint8_t* p, std::uint16_t format, std::uint16_t bits) {
  if (format == kFormatFloat) {
    std::uint32_t raw = read_u32(p);
    float f;
    std::memcpy(&f, &raw, sizeof f);
    return std::isfinite(f) ? static_cast<double>(f) : 0.0;
  }
  if (bits == 16) {
    auto v = static_cast<std::int16_t>(read_u16(p));
    return v / 32768.0;
  }
  // 24-bit: sign-extend from bit 23.
  std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
  if (v & 0x800000) v -= 0x1000000;
  return v / 8388608.0;
}

}  // namespace

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  using K = WavError::Kind;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw WavError(K::Malformed, "not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    std::size_t size = read_u32(chunk + 4);
    std::size_t body = pos + 8;
    std::size_t available = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || available < 16) throw WavError(K::Malformed, "truncated fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      block_align = read_u16(f + 12);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40 || available < 40) throw WavError(K::Malformed, "truncated extensible fmt chunk");
        format = read_u16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Streamed writers leave the size at 0 or 0xFFFFFFFF; take what is there.
      data_size = (size == 0 || size > available) ? available : size;
      break;
    }
    if (size > available) break;
    pos = body + size + (size & 1);
  }

  if (!have_fmt) throw WavError(K::Malformed, "missing fmt chunk");
  if (data == nullptr) throw WavError(K::Malformed, "missing data chunk");
  bool supported = (format == kFormatPcm && (bits == 16 || bits == 24)) ||
                   (format == kFormatFloat && bits == 32);
  if (!supported) {
    throw WavError(K::UnsupportedEncoding, "unsupported WAV encoding (format tag " +
                                               std::to_string(format) + ", " +
                                               std::to_string(bits) + " bits)");
  }
  if (channels == 0 || rate == 0) throw WavError(K::Malformed, "invalid channel count or rate");
  std::size_t sample_bytes = bits / 8;
  std::size_t frame_bytes = std::max<std::size_t>(block_align, sample_bytes * channels);
  std::size_t frames = data_size / frame_bytes;
  if (frames == 0) throw WavError(K::Empty, "WAV file contains no audio");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const std::uint8_t* frame = data + i * frame_bytes;
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) sum += decode_sample(frame + c * sample_bytes, format, bits);
    clip.samples[i] = std::clamp(sum / channels, -1.0, 1.0);
  }
  return clip;
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(WavError::Kind::Unreadable, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw WavError(WavError::Kind::Unreadable, "read error on " + path.string());
  try {
    return decode_wav(bytes);
  } catch (const WavError& e) {
    throw WavError(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (double s : clip.samples) {
    long v = std::lround(std::clamp(s, -1.0, 1.0) * 32768.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(v, -32768L, 32767L))));
  }
  return out;
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
  auto bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

FrameLayout frame_layout(std::size_t sample_count, int sample_rate, double window_seconds,
                         double hop_seconds) {
  if (!(window_seconds > 0.0) || !(hop_seconds > 0.0)) {
    throw std::invalid_argument("window and hop durations must be positive");
  }
  if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
  FrameLayout layout;
  layout.sample_rate = sample_rate;
  layout.window = static_cast<std::size_t>(std::llround(window_seconds * sample_rate));
  layout.hop = static_cast<std::size_t>(std::llround(hop_seconds * sample_rate));
  if (layout.window < 2) throw std::invalid_argument("analysis window shorter than 2 samples");
  if (layout.hop < 1) throw std::invalid_argument("hop shorter than 1 sample");
  layout.count = frame_count(sample_count, layout.window, layout.hop);
  return layout;
}

Frame extract_frame(const AudioClip& clip, const FrameLayout& layout, std::size_t index) {
  Frame frame;
  frame.index = index;
  frame.start_time = layout.start_time(index);
  auto first = clip.samples.begin() + static_cast<std::ptrdiff_t>(index * layout.hop);
  frame.samples.assign(first, first + static_cast<std::ptrdiff_t>(layout.window));
  return frame;
}

std::vector<Frame> frame_signal(const AudioClip& clip, double window_seconds, double hop_seconds) {
  FrameLayout layout = frame_layout(clip.samples.size(), clip.sample_rate, window_seconds, hop_seconds);
  std::vector<Frame> frames;
  frames.reserve(layout.count);
  for (std::size_t i = 0; i < layout.count; ++i) frames.push_back(extract_frame(clip, layout, i));
  return frames;
}

std::vector<double> make_window(WindowKind kind, std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (kind == WindowKind::Hann && length >= 2) {
    const double denom = static_cast<double>(length - 1);
    for (std::size_t n = 0; n < length; ++n) {
      w[n] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom));
    }
    // Exact endpoints and centre regardless of cosine rounding.
    w.front() = w.back() = 0.0;
    if (length % 2 == 1) w[length / 2] = 1.0;
  }
  return w;
}

Frame apply_window(const Frame& frame, WindowKind kind) {
  if (frame.samples.size() < 2) throw std::invalid_argument("frame shorter than 2 samples");
  Frame out = frame;
  if (kind == WindowKind::Rectangular) return out;
  auto w = make_window(kind, frame.samples.size());
  for (std::size_t n = 0; n < w.size(); ++n) out.samples[n] *= w[n];
  return out;
}

const char* to_string(WindowKind kind) {
  return kind == WindowKind::Hann ? "hann" : "rectangular";
}

WindowKind window_kind_from_string(const std::string& name) {
  if (name == "hann") return WindowKind::Hann;
  if (name == "rectangular") return WindowKind::Rectangular;
  throw std::invalid_argument("unknown window kind '" + name + "'");
}

}  // namespace melody
