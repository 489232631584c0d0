#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

#include "melody/config.hpp"

namespace melody {

struct ServiceOptions {
  std::size_t max_sessions = 16;
  std::size_t max_upload_bytes = std::size_t{50} << 20;
  // Served at "/" when set and present on disk.
  std::filesystem::path static_dir;
  AnalysisConfig default_config;
};

// HTTP front end over analyze/synthesize with an in-memory LRU session store.
//
//   POST /api/sessions                   WAV body -> 201 {session_id, duration_s, sample_rate, default_config}
//   GET  /api/sessions/{id}              current config and result
//   POST /api/sessions/{id}/analyze      {"config": {...}, "region": {"t0", "t1"}} -> contour, labels, candidates
//   GET  /api/sessions/{id}/spectrogram  ?fmin&fmax&t0&t1&height -> PNG, axis mapping in X-* headers
//   GET  /api/sessions/{id}/audio        ?which=original|synth&mode=sine|harmonic -> WAV
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds to host:port (0 picks a free port). Returns the port, or -1 on failure.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  bool run();
  void stop();

  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace melody
