#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "melody/audio_io.hpp"
#include "melody/spectral.hpp"
#include "melody/tracking.hpp"
#include "melody/twm.hpp"
#include "melody/voicing.hpp"

namespace melody {

enum class TrackingMode { Single, Dual };

struct VoicingConfig {
  bool enabled = false;
  std::string model_path;
  double bias = 0.0;
  std::size_t smooth_frames = 11;
};

struct AnalysisConfig {
  double window_seconds = 0.040;
  double hop_seconds = 0.010;
  int zero_pad_factor = 4;
  WindowKind window = WindowKind::Hann;
  SinusoidOptions spectral;
  TwmParams twm;
  std::size_t top_m = 5;
  TrackingParams tracking;
  TrackingMode mode = TrackingMode::Single;
  FeatureParams features;
  VoicingConfig voicing;

  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what) : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

const std::vector<std::string>& config_keys();

// Sets one dotted key from its text form. Throws ConfigError naming the key.
void set_config_value(AnalysisConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const AnalysisConfig& config, const std::string& key);

// "key = value" lines; '#' starts a comment. Unlisted keys keep their defaults.
AnalysisConfig parse_config(const std::string& text);
AnalysisConfig load_config(const std::string& path);
std::string serialize_config(const AnalysisConfig& config);

// Flat JSON object keyed like the text format, values typed.
nlohmann::json config_to_json(const AnalysisConfig& config);
void apply_json_overrides(AnalysisConfig& config, const nlohmann::json& overrides);

}  // namespace melody
