#include "melody/pipeline.hpp"

#include <algorithm>
#include <mutex>
#include <thread>

namespace melody {

namespace {

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what());
  }
}

}  // namespace

std::vector<FrameAnalysis> analyze_frames(const AudioClip& clip, const FrameLayout& layout,
                                          const AnalysisConfig& config) {
  std::vector<FrameAnalysis> frames(layout.count);
  if (layout.count == 0) return frames;
  const WindowDescriptor window(config.window, layout.window, config.zero_pad_factor);
  const auto taper = make_window(config.window, layout.window);

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> buf(layout.window);
    for (std::size_t i = begin; i < end; ++i) {
      const double* src = clip.samples.data() + i * layout.hop;
      for (std::size_t n = 0; n < layout.window; ++n) buf[n] = src[n] * taper[n];
      auto spectrum = compute_spectrum(buf, clip.sample_rate, config.zero_pad_factor, i);
      frames[i].peaks = detect_sinusoids(spectrum, window, config.spectral);
      frames[i].peaks.start_time = layout.start_time(i);
      frames[i].candidates = multi_f0(frames[i].peaks, config.twm, config.top_m);
    }
  };

  const std::size_t threads =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(1, layout.count / 64));
  if (threads <= 1) {
    work(0, layout.count);
    return frames;
  }
  std::vector<std::jthread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t chunk = (layout.count + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk, end = std::min(layout.count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return frames;
}

namespace {

Lattice make_lattice(const std::vector<FrameAnalysis>& frames, const FrameLayout& layout) {
  Lattice lattice(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    lattice[i].time = layout.center_time(i);
    lattice[i].candidates = frames[i].candidates;
  }
  return lattice;
}

std::vector<FramePeaks> peaks_of(const std::vector<FrameAnalysis>& frames) {
  std::vector<FramePeaks> peaks;
  peaks.reserve(frames.size());
  for (const auto& f : frames) peaks.push_back(f.peaks);
  return peaks;
}

std::shared_ptr<const VoicingModel> resolve_model(const AnalysisConfig& config, const AnalyzeOptions& options) {
  if (options.voicing_model) return options.voicing_model;
  if (!config.voicing.model_path.empty()) {
    return std::make_shared<const VoicingModel>(load_voicing_model(config.voicing.model_path));
  }
  return builtin_voicing_model();
}

}  // namespace

AnalysisResult analyze(const AudioClip& clip, const AnalysisConfig& config, const AnalyzeOptions& options) {
  run_stage("config", [&] {
    config.validate();
    return 0;
  });
  AnalysisResult result;
  result.layout = run_stage("audio_io", [&] {
    return frame_layout(clip.samples.size(), clip.sample_rate, config.window_seconds, config.hop_seconds);
  });
  const auto frames = run_stage("spectral", [&] { return analyze_frames(clip, result.layout, config); });
  const auto lattice = make_lattice(frames, result.layout);
  const auto peaks = peaks_of(frames);

  run_stage("tracking", [&] {
    if (config.mode == TrackingMode::Single) {
      result.raw_contour = track_single(lattice, config.tracking);
    } else {
      auto pair = track_dual(lattice, config.tracking);
      auto fa = voicing_features(pair.first, peaks, config.features);
      auto fb = voicing_features(pair.second, peaks, config.features);
      result.diagnostics.selected = select_voice_contour_index(pair, fa, fb);
      result.raw_contour = result.diagnostics.selected == 0 ? pair.first : pair.second;
      if (!options.lean) result.diagnostics.dual = std::move(pair);
    }
    return 0;
  });

  const auto features = run_stage("voicing", [&] { return voicing_features(result.raw_contour, peaks, config.features); });
  run_stage("voicing", [&] {
    if (config.voicing.enabled) {
      auto model = resolve_model(config, options);
      result.labels = classify_frames(features, *model, config.voicing.smooth_frames, config.voicing.bias);
    } else {
      result.labels.resize(result.raw_contour.size());
      for (std::size_t t = 0; t < result.raw_contour.size(); ++t) result.labels[t] = result.raw_contour[t].voiced();
    }
    return 0;
  });

  result.contour = result.raw_contour;
  for (std::size_t t = 0; t < result.contour.size(); ++t) {
    if (!result.labels[t]) result.contour[t] = {result.contour[t].time, 0.0, 0.0};
  }

  if (!options.lean) {
    auto& d = result.diagnostics;
    d.features = features;
    d.candidates.reserve(frames.size());
    d.peak_counts.reserve(frames.size());
    for (const auto& f : frames) {
      d.candidates.push_back(f.candidates);
      d.peak_counts.push_back(f.peaks.peaks.size());
    }
  }
  return result;
}

LabelledFeatures labelled_features(const std::vector<synthetic::Item>& items, const AnalysisConfig& config) {
  AnalysisConfig front = config;
  front.voicing.enabled = false;
  LabelledFeatures data;
  for (const auto& item : items) {
    auto result = analyze(item.clip, front, AnalyzeOptions{});
    const auto& truth = item.truth;
    for (std::size_t t = 0; t < result.raw_contour.size(); ++t) {
      // Truth shares the default frame grid; fall back to nearest time otherwise.
      const double time = result.raw_contour[t].time;
      auto it = std::min_element(truth.begin(), truth.end(), [&](const ContourPoint& a, const ContourPoint& b) {
        return std::abs(a.time - time) < std::abs(b.time - time);
      });
      if (it == truth.end()) continue;
      data.features.push_back(result.diagnostics.features[t]);
      data.vocal.push_back(it->voiced());
    }
  }
  return data;
}

VoicingModel train_voicing_model(const LabelledFeatures& data, const VoicingTrainingOptions& options) {
  std::vector<std::vector<double>> vocal, nonvocal;
  for (std::size_t i = 0; i < data.features.size(); ++i) {
    (data.vocal[i] ? vocal : nonvocal).push_back(feature_vector(data.features[i], options.feature_names));
  }
  VoicingModel model;
  model.feature_names = options.feature_names;
  try {
    model.vocal = train_gmm(vocal, options.gmm).model;
  } catch (const GmmError& e) {
    throw GmmError(e.kind(), std::string("vocal class: ") + e.what());
  }
  try {
    model.nonvocal = train_gmm(nonvocal, options.gmm).model;
  } catch (const GmmError& e) {
    throw GmmError(e.kind(), std::string("non-vocal class: ") + e.what());
  }
  return model;
}

std::shared_ptr<const VoicingModel> builtin_voicing_model() {
  static const std::shared_ptr<const VoicingModel> model = [] {
    std::vector<synthetic::Item> items;
    for (std::uint64_t k = 0; k < 4; ++k) items.push_back(synthetic::voicing_scene(9000 + k));
    return std::make_shared<const VoicingModel>(train_voicing_model(labelled_features(items, AnalysisConfig{})));
  }();
  return model;
}

}  // namespace melody
