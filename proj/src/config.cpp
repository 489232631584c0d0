#include "melody/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace melody {

namespace {

enum class ValueType { Number, Integer, Boolean, Text };

struct KeySpec {
  std::string key;
  ValueType type;
  std::string help;
  std::function<std::string(const AnalysisConfig&)> get;
  std::function<void(AnalysisConfig&, const std::string&)> set;
};

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw ConfigError(key, key + ": expected a number, got '" + text + "'");
  }
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw ConfigError(key, key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key, key + ": expected true or false, got '" + text + "'");
}

// `ref` is a generic lambda returning a reference to the field.
template <typename Ref>
KeySpec double_key(std::string key, std::string help, Ref ref) {
  return {key, ValueType::Number, std::move(help),
          [ref](const AnalysisConfig& c) { return format_double(ref(c)); },
          [ref, key](AnalysisConfig& c, const std::string& v) { ref(c) = parse_double(key, v); }};
}

template <typename T, typename Ref>
KeySpec integer_key(std::string key, std::string help, Ref ref) {
  return {key, ValueType::Integer, std::move(help),
          [ref](const AnalysisConfig& c) { return std::to_string(ref(c)); },
          [ref, key](AnalysisConfig& c, const std::string& v) {
            long long n = parse_integer(key, v);
            if (n < 0) throw ConfigError(key, key + ": must be nonnegative");
            ref(c) = static_cast<T>(n);
          }};
}

const std::vector<KeySpec>& specs() {
  static const std::vector<KeySpec> table = [] {
    using C = AnalysisConfig;
    std::vector<KeySpec> t;
    t.push_back(double_key("analysis.window_seconds", "analysis window length (s)",
                                 [](auto& c) -> auto& { return c.window_seconds; }));
    t.push_back(double_key("analysis.hop_seconds", "frame hop (s)", [](auto& c) -> auto& { return c.hop_seconds; }));
    t.push_back(integer_key<int>("analysis.zero_pad_factor", "FFT zero-padding factor",
                                 [](auto& c) -> auto& { return c.zero_pad_factor; }));
    t.push_back({"analysis.window", ValueType::Text, "window function: hann | rectangular",
                 [](const C& c) { return std::string(to_string(c.window)); },
                 [](C& c, const std::string& v) {
                   try {
                     c.window = window_kind_from_string(v);
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError("analysis.window", std::string("analysis.window: ") + e.what());
                   }
                 }});
    t.push_back(double_key("spectral.sinusoidality_threshold", "minimum main-lobe match score [0, 1]",
                                 [](auto& c) -> auto& { return c.spectral.threshold; }));
    t.push_back(double_key("spectral.noise_floor_db", "peaks below this level (dB FS) are ignored",
                                 [](auto& c) -> auto& { return c.spectral.noise_floor_db; }));
    t.push_back(double_key("spectral.max_frequency_hz", "highest sinusoid retained (Hz)",
                                 [](auto& c) -> auto& { return c.spectral.max_frequency; }));
    t.push_back(double_key("twm.p", "frequency-weighting exponent", [](auto& c) -> auto& { return c.twm.p; }));
    t.push_back(double_key("twm.q", "mismatch/amplitude coupling", [](auto& c) -> auto& { return c.twm.q; }));
    t.push_back(double_key("twm.r", "amplitude reward", [](auto& c) -> auto& { return c.twm.r; }));
    t.push_back(double_key("twm.rho", "measured-to-predicted weight", [](auto& c) -> auto& { return c.twm.rho; }));
    t.push_back(double_key("twm.max_harmonic_freq", "highest predicted harmonic (Hz)",
                                 [](auto& c) -> auto& { return c.twm.max_harmonic_freq; }));
    t.push_back(double_key("twm.f0_min", "lowest trial F0 (Hz)", [](auto& c) -> auto& { return c.twm.f0_min; }));
    t.push_back(double_key("twm.f0_max", "highest trial F0 (Hz)", [](auto& c) -> auto& { return c.twm.f0_max; }));
    t.push_back(double_key("twm.resolution_cents", "trial grid step (cents)",
                                 [](auto& c) -> auto& { return c.twm.resolution_cents; }));
    t.push_back(integer_key<std::size_t>("twm.top_m", "candidates kept per frame",
                                         [](auto& c) -> auto& { return c.top_m; }));
    t.push_back({"tracking.mode", ValueType::Text, "single | dual",
                 [](const C& c) { return std::string(c.mode == TrackingMode::Single ? "single" : "dual"); },
                 [](C& c, const std::string& v) {
                   if (v == "single") {
                     c.mode = TrackingMode::Single;
                   } else if (v == "dual") {
                     c.mode = TrackingMode::Dual;
                   } else {
                     throw ConfigError("tracking.mode", "tracking.mode: expected single or dual, got '" + v + "'");
                   }
                 }});
    t.push_back(double_key("tracking.lambda", "smoothness weight",
                                 [](auto& c) -> auto& { return c.tracking.lambda; }));
    t.push_back(double_key("tracking.cap_cents", "jump size at which the smoothness cost saturates",
                                 [](auto& c) -> auto& { return c.tracking.cap_cents; }));
    t.push_back(double_key("tracking.harmonic_relation_tolerance",
                                 "dual mode: cents within which two candidates count as harmonically related",
                                 [](auto& c) -> auto& { return c.tracking.harmonic_relation_tolerance; }));
    t.push_back(integer_key<int>("tracking.max_ratio_denominator",
                                 "dual mode: largest n in excluded m:n ratios (1 = integer multiples only)",
                                 [](auto& c) -> auto& { return c.tracking.max_ratio_denominator; }));
    t.push_back({"voicing.enabled", ValueType::Boolean, "gate the contour with the vocal/non-vocal classifier",
                 [](const C& c) { return std::string(c.voicing.enabled ? "true" : "false"); },
                 [](C& c, const std::string& v) { c.voicing.enabled = parse_bool("voicing.enabled", v); }});
    t.push_back({"voicing.model", ValueType::Text, "voicing model JSON (empty: built-in synthetic model)",
                 [](const C& c) { return c.voicing.model_path; },
                 [](C& c, const std::string& v) { c.voicing.model_path = v; }});
    t.push_back(double_key("voicing.bias", "log-likelihood margin required for 'vocal'",
                                 [](auto& c) -> auto& { return c.voicing.bias; }));
    t.push_back(integer_key<std::size_t>("voicing.smooth_frames", "median filter length (odd)",
                                         [](auto& c) -> auto& { return c.voicing.smooth_frames; }));
    t.push_back(double_key("voicing.band_hz", "harmonic-energy analysis band (Hz)",
                                 [](auto& c) -> auto& { return c.features.band_hz; }));
    t.push_back(double_key("voicing.harmonic_tolerance", "relative harmonic matching tolerance",
                                 [](auto& c) -> auto& { return c.features.harmonic_tolerance; }));
    t.push_back(integer_key<std::size_t>("voicing.instability_half_window", "pitch-instability half window (frames)",
                                         [](auto& c) -> auto& { return c.features.instability_half_window; }));
    return t;
  }();
  return table;
}

const KeySpec& find_spec(const std::string& key) {
  for (const auto& s : specs()) {
    if (s.key == key) return s;
  }
  std::string valid;
  for (const auto& k : config_keys()) valid += (valid.empty() ? "" : ", ") + k;
  throw ConfigError(key, "unknown config key '" + key + "'; valid keys: " + valid);
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void AnalysisConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& what) { throw ConfigError(key, key + ": " + what); };
  if (!(window_seconds > 0)) fail("analysis.window_seconds", "must be positive");
  if (!(hop_seconds > 0)) fail("analysis.hop_seconds", "must be positive");
  if (zero_pad_factor < 1) fail("analysis.zero_pad_factor", "must be >= 1");
  if (!(spectral.threshold >= 0 && spectral.threshold <= 1)) fail("spectral.sinusoidality_threshold", "must be in [0, 1]");
  if (!(spectral.max_frequency > 0)) fail("spectral.max_frequency_hz", "must be positive");
  if (!std::isfinite(spectral.noise_floor_db)) fail("spectral.noise_floor_db", "must be finite");
  try {
    twm.validate();
  } catch (const std::invalid_argument& e) {
    fail("twm", e.what());
  }
  if (top_m < 1) fail("twm.top_m", "must be >= 1");
  try {
    tracking.validate();
  } catch (const std::invalid_argument& e) {
    fail("tracking", e.what());
  }
  if (voicing.smooth_frames < 1 || voicing.smooth_frames % 2 == 0) fail("voicing.smooth_frames", "must be odd");
  if (!std::isfinite(voicing.bias)) fail("voicing.bias", "must be finite");
  if (!(features.band_hz > 0)) fail("voicing.band_hz", "must be positive");
  if (!(features.harmonic_tolerance > 0 && features.harmonic_tolerance < 0.5)) {
    fail("voicing.harmonic_tolerance", "must be in (0, 0.5)");
  }
  if (features.instability_half_window < 1) fail("voicing.instability_half_window", "must be >= 1");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : specs()) k.push_back(s.key);
    return k;
  }();
  return keys;
}

void set_config_value(AnalysisConfig& config, const std::string& key, const std::string& value) {
  find_spec(key).set(config, value);
}

std::string get_config_value(const AnalysisConfig& config, const std::string& key) {
  return find_spec(key).get(config);
}

AnalysisConfig parse_config(const std::string& text) {
  AnalysisConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    }
    set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  config.validate();
  return config;
}

AnalysisConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.key(), path + ": " + e.what());
  }
}

std::string serialize_config(const AnalysisConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& s : specs()) {
    std::string prefix = s.key.substr(0, s.key.find('.'));
    if (prefix != section) {
      if (!section.empty()) out << '\n';
      section = prefix;
    }
    out << "# " << s.help << '\n' << s.key << " = " << s.get(config) << '\n';
  }
  return out.str();
}

nlohmann::json config_to_json(const AnalysisConfig& config) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& s : specs()) {
    const std::string v = s.get(config);
    switch (s.type) {
      case ValueType::Number: doc[s.key] = parse_double(s.key, v); break;
      case ValueType::Integer: doc[s.key] = parse_integer(s.key, v); break;
      case ValueType::Boolean: doc[s.key] = v == "true"; break;
      case ValueType::Text: doc[s.key] = v; break;
    }
  }
  return doc;
}

void apply_json_overrides(AnalysisConfig& config, const nlohmann::json& overrides) {
  if (overrides.is_null()) return;
  if (!overrides.is_object()) throw ConfigError("", "config overrides must be a JSON object");
  AnalysisConfig next = config;
  for (const auto& [key, value] : overrides.items()) {
    const auto& spec = find_spec(key);
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_boolean()) {
      text = value.get<bool>() ? "true" : "false";
    } else if (value.is_number_integer()) {
      text = std::to_string(value.get<long long>());
    } else if (value.is_number()) {
      text = format_double(value.get<double>());
    } else {
      throw ConfigError(key, key + ": unsupported value type");
    }
    spec.set(next, text);
  }
  next.validate();
  config = next;
}

}  // namespace melody
