#include "melody/service.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <list>
#include <mutex>
#include <optional>
#include <random>
#include <unordered_map>

// Uploads are raw WAV bodies; do not let a form Content-Type shrink the limit.
#define CPPHTTPLIB_FORM_URL_ENCODED_PAYLOAD_MAX_LENGTH (std::size_t{1} << 31)
#include "httplib.h"
#include "json.hpp"

#include "melody/audio_io.hpp"
#include "melody/pipeline.hpp"
#include "melody/spectrogram.hpp"
#include "melody/synth.hpp"

namespace melody {

namespace {

using nlohmann::json;

struct Session {
  std::string id;
  const AudioClip clip;
  std::chrono::system_clock::time_point created;

  std::mutex mutex;  // guards config and result
  AnalysisConfig config;
  AnalysisResult result;

  Session(std::string id_, AudioClip clip_) : id(std::move(id_)), clip(std::move(clip_)), created(std::chrono::system_clock::now()) {}
};

class SessionStore {
 public:
  explicit SessionStore(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

  std::shared_ptr<Session> create(AudioClip clip) {
    std::lock_guard lock(mutex_);
    std::string id;
    do {
      id = random_id();
    } while (index_.contains(id));
    auto session = std::make_shared<Session>(id, std::move(clip));
    order_.push_front(session);
    index_[id] = order_.begin();
    while (order_.size() > capacity_) {
      index_.erase(order_.back()->id);
      order_.pop_back();
    }
    return session;
  }

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = index_.find(id);
    if (it == index_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second);  // most recently used first
    return *it->second;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return order_.size();
  }

 private:
  std::string random_id() {
    static constexpr char hex[] = "0123456789abcdef";
    std::string id;
    for (int word = 0; word < 2; ++word) {
      auto bits = rng_();
      for (int i = 0; i < 16; ++i, bits >>= 4) id += hex[bits & 0xf];
    }
    return id;
  }

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<std::shared_ptr<Session>> order_;
  std::unordered_map<std::string, std::list<std::shared_ptr<Session>>::iterator> index_;
  std::mt19937_64 rng_{std::random_device{}()};
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  send_json(res, status, extra);
}

std::string format_number(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("0");
}

// Query parameter as a finite double; nullopt when absent, throws when malformed.
std::optional<double> query_double(const httplib::Request& req, const std::string& name) {
  if (!req.has_param(name)) return std::nullopt;
  const auto text = req.get_param_value(name);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw std::invalid_argument("query parameter '" + name + "' is not a number: " + text);
  }
  return v;
}

json result_json(const AnalysisResult& r) {
  json time = json::array(), f0 = json::array(), salience = json::array(), labels = json::array();
  for (std::size_t t = 0; t < r.contour.size(); ++t) {
    time.push_back(r.contour[t].time);
    f0.push_back(r.contour[t].f0);
    salience.push_back(r.contour[t].salience);
    labels.push_back(t < r.labels.size() && r.labels[t]);
  }
  json candidates = json::array();
  for (const auto& frame : r.diagnostics.candidates) {
    json list = json::array();
    for (const auto& c : frame) list.push_back({{"f0", c.f0}, {"salience", c.salience}});
    candidates.push_back(std::move(list));
  }
  return {{"frames", r.contour.size()},
          {"hop_seconds", r.layout.hop_seconds()},
          {"contour", {{"time", time}, {"f0", f0}, {"salience", salience}}},
          {"labels", labels},
          {"candidates", candidates},
          {"selected_contour", r.diagnostics.selected}};
}

// Frames whose centre lies in [t0, t1].
std::pair<std::size_t, std::size_t> frames_in(const FrameLayout& layout, double t0, double t1) {
  std::size_t first = layout.count, end = 0;
  for (std::size_t i = 0; i < layout.count; ++i) {
    const double c = layout.center_time(i);
    if (c >= t0 && c <= t1) {
      first = std::min(first, i);
      end = i + 1;
    }
  }
  return {first, end};
}

void splice(AnalysisResult& into, const AnalysisResult& from, std::size_t first, std::size_t end) {
  for (std::size_t t = first; t < end; ++t) {
    into.contour[t] = from.contour[t];
    into.raw_contour[t] = from.raw_contour[t];
    into.labels[t] = from.labels[t];
    if (t < into.diagnostics.candidates.size() && t < from.diagnostics.candidates.size()) {
      into.diagnostics.candidates[t] = from.diagnostics.candidates[t];
    }
    if (t < into.diagnostics.features.size() && t < from.diagnostics.features.size()) {
      into.diagnostics.features[t] = from.diagnostics.features[t];
    }
    if (t < into.diagnostics.peak_counts.size() && t < from.diagnostics.peak_counts.size()) {
      into.diagnostics.peak_counts[t] = from.diagnostics.peak_counts[t];
    }
  }
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  SessionStore store;
  httplib::Server server;

  explicit Impl(ServiceOptions o) : options(std::move(o)), store(options.max_sessions) { routes(); }

  std::shared_ptr<Session> session_or_404(const httplib::Request& req, httplib::Response& res) {
    auto session = store.find(req.matches[1]);
    if (!session) send_error(res, 404, "unknown session '" + std::string(req.matches[1]) + "'");
    return session;
  }

  void create_session(const httplib::Request& req, httplib::Response& res) {
    if (req.body.size() > options.max_upload_bytes) {
      send_error(res, 413, "upload exceeds " + std::to_string(options.max_upload_bytes) + " bytes");
      return;
    }
    AudioClip clip;
    try {
      clip = decode_wav({reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()});
    } catch (const WavError& e) {
      send_error(res, 400, e.what());
      return;
    }
    const double duration = clip.duration();
    const int rate = clip.sample_rate;
    AnalysisResult result;
    try {
      result = analyze(clip, options.default_config);
    } catch (const PipelineError& e) {
      send_error(res, 422, e.what(), {{"stage", e.stage()}});
      return;
    }
    auto session = store.create(std::move(clip));
    {
      std::lock_guard lock(session->mutex);
      session->config = options.default_config;
      session->result = std::move(result);
    }
    send_json(res, 201,
              {{"session_id", session->id},
               {"duration_s", duration},
               {"sample_rate", rate},
               {"default_config", config_to_json(options.default_config)}});
  }

  void describe(const httplib::Request& req, httplib::Response& res) {
    auto session = session_or_404(req, res);
    if (!session) return;
    std::lock_guard lock(session->mutex);
    const auto created = std::chrono::duration<double>(session->created.time_since_epoch()).count();
    send_json(res, 200,
              {{"session_id", session->id},
               {"duration_s", session->clip.duration()},
               {"sample_rate", session->clip.sample_rate},
               {"created_unix_s", created},
               {"config", config_to_json(session->config)},
               {"result", result_json(session->result)}});
  }

  void reanalyze(const httplib::Request& req, httplib::Response& res) {
    auto session = session_or_404(req, res);
    if (!session) return;
    json body = json::object();
    if (!req.body.empty()) {
      body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) {
        send_error(res, 400, "request body must be a JSON object");
        return;
      }
    }
    const json overrides = body.value("config", json::object());
    const bool has_region = body.contains("region") && !body["region"].is_null();

    std::lock_guard lock(session->mutex);
    AnalysisConfig config = session->config;
    try {
      apply_json_overrides(config, overrides);
    } catch (const ConfigError& e) {
      json extra = {{"key", e.key()}};
      if (std::find(config_keys().begin(), config_keys().end(), e.key()) == config_keys().end()) {
        extra["valid_keys"] = config_keys();
      }
      send_error(res, 422, e.what(), extra);
      return;
    }

    if (!has_region && overrides.empty()) {
      send_json(res, 200, result_json(session->result));
      return;
    }

    std::size_t first = 0, end = 0;
    if (has_region) {
      const auto& region = body["region"];
      if (!region.is_object() || !region.contains("t0") || !region.contains("t1") || !region["t0"].is_number() ||
          !region["t1"].is_number()) {
        send_error(res, 422, "region must be an object with numeric t0 and t1");
        return;
      }
      const double t0 = region["t0"].get<double>(), t1 = region["t1"].get<double>();
      const double duration = session->clip.duration();
      if (!(t0 >= 0) || !(t1 > t0) || t0 >= duration) {
        send_error(res, 422, "region needs 0 <= t0 < t1 and t0 inside the clip (" + format_number(duration) + " s)");
        return;
      }
      if (config.window_seconds != session->config.window_seconds || config.hop_seconds != session->config.hop_seconds) {
        send_error(res, 422, "a region re-run cannot change analysis.window_seconds or analysis.hop_seconds");
        return;
      }
      std::tie(first, end) = frames_in(session->result.layout, t0, t1);
      if (first >= end) {
        send_error(res, 422, "region contains no analysis frames");
        return;
      }
    }

    AnalysisResult fresh;
    try {
      fresh = analyze(session->clip, config);
    } catch (const PipelineError& e) {
      send_error(res, 422, e.what(), {{"stage", e.stage()}});
      return;
    }
    if (has_region) {
      AnalysisResult merged = session->result;
      splice(merged, fresh, first, end);
      session->result = std::move(merged);
    } else {
      session->result = std::move(fresh);
    }
    session->config = config;
    auto out = result_json(session->result);
    if (has_region) out["region_frames"] = {first, end};
    send_json(res, 200, out);
  }

  void spectrogram(const httplib::Request& req, httplib::Response& res) {
    auto session = session_or_404(req, res);
    if (!session) return;
    SpectrogramOptions opts;
    SpectrogramImage image;
    try {
      opts.fmin = query_double(req, "fmin").value_or(opts.fmin);
      opts.fmax = query_double(req, "fmax").value_or(opts.fmax);
      opts.t0 = query_double(req, "t0").value_or(opts.t0);
      opts.t1 = query_double(req, "t1").value_or(opts.t1);
      opts.height = static_cast<int>(query_double(req, "height").value_or(opts.height));
      if (req.has_param("t1") && !(opts.t1 > opts.t0)) throw std::invalid_argument("t1 must be greater than t0");
      AnalysisConfig config;
      {
        std::lock_guard lock(session->mutex);
        config = session->config;
      }
      image = render_spectrogram(session->clip, config, opts);
    } catch (const std::invalid_argument& e) {
      send_error(res, 422, e.what());
      return;
    }
    const auto png = encode_png(image);
    res.status = 200;
    res.set_header("X-Time-Origin", format_number(image.time_origin));
    res.set_header("X-Seconds-Per-Pixel", format_number(image.seconds_per_pixel));
    res.set_header("X-First-Frame", std::to_string(image.first_frame));
    res.set_header("X-Freq-Min", format_number(image.fmin));
    res.set_header("X-Freq-Max", format_number(image.fmax));
    res.set_header("X-Freq-Scale", "log");
    res.set_header("Access-Control-Expose-Headers",
                   "X-Time-Origin, X-Seconds-Per-Pixel, X-First-Frame, X-Freq-Min, X-Freq-Max, X-Freq-Scale");
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }

  void audio(const httplib::Request& req, httplib::Response& res) {
    auto session = session_or_404(req, res);
    if (!session) return;
    const auto which = req.has_param("which") ? req.get_param_value("which") : std::string("original");
    std::vector<std::uint8_t> wav;
    if (which == "original") {
      wav = encode_wav(session->clip);
    } else if (which == "synth") {
      SynthMode mode;
      try {
        mode = synth_mode_from_string(req.has_param("mode") ? req.get_param_value("mode") : "sine");
      } catch (const std::invalid_argument& e) {
        send_error(res, 422, e.what());
        return;
      }
      PitchContour contour;
      {
        std::lock_guard lock(session->mutex);
        contour = session->result.contour;
      }
      const int rate = std::max(session->clip.sample_rate, 8000);
      AudioClip synth = contour.empty() ? AudioClip{std::vector<double>(session->clip.samples.size(), 0.0), rate}
                                        : synthesize_contour(contour, rate, mode);
      wav = encode_wav(synth);
    } else {
      send_error(res, 422, "which must be 'original' or 'synth'");
      return;
    }
    res.status = 200;
    res.set_content(std::string(wav.begin(), wav.end()), "audio/wav");
  }

  void routes() {
    server.set_payload_max_length(options.max_upload_bytes);
    const std::string id = "([0-9a-f]+)";
    server.Post("/api/sessions", [this](const auto& req, auto& res) { create_session(req, res); });
    server.Get("/api/sessions/" + id, [this](const auto& req, auto& res) { describe(req, res); });
    server.Post("/api/sessions/" + id + "/analyze", [this](const auto& req, auto& res) { reanalyze(req, res); });
    server.Get("/api/sessions/" + id + "/spectrogram", [this](const auto& req, auto& res) { spectrogram(req, res); });
    server.Get("/api/sessions/" + id + "/audio", [this](const auto& req, auto& res) { audio(req, res); });

    std::error_code ec;
    if (!options.static_dir.empty() && std::filesystem::is_directory(options.static_dir, ec)) {
      server.set_mount_point("/", options.static_dir.string());
    } else {
      server.Get("/", [](const auto&, auto& res) {
        res.set_content("melody service: UI assets not installed; see /api/sessions\n", "text/plain");
      });
    }
    server.set_exception_handler([](const auto&, auto& res, std::exception_ptr ep) {
      std::string what = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      send_error(res, 500, what);
    });
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Service::run() { return impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

std::size_t Service::session_count() const { return impl_->store.size(); }

}  // namespace melody
