#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "melody/audio_io.hpp"
#include "melody/config.hpp"
#include "melody/spectral.hpp"
#include "melody/synthetic.hpp"
#include "melody/tracking.hpp"
#include "melody/twm.hpp"
#include "melody/voicing.hpp"

namespace melody {

// An error raised while running one stage of the analysis.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct FrameAnalysis {
  FramePeaks peaks;
  std::vector<F0Candidate> candidates;
};

struct Diagnostics {
  std::vector<std::vector<F0Candidate>> candidates;
  std::vector<VoicingFeatures> features;
  std::vector<std::size_t> peak_counts;
  // Dual mode only: both tracked contours and which one was kept.
  std::optional<std::pair<PitchContour, PitchContour>> dual;
  int selected = 0;
};

struct AnalysisResult {
  FrameLayout layout;
  PitchContour contour;      // after voicing
  PitchContour raw_contour;  // tracker output before voicing
  std::vector<bool> labels;  // vocal per frame
  Diagnostics diagnostics;   // empty when run lean
};

struct AnalyzeOptions {
  bool lean = false;
  // Overrides config.voicing.model_path when set.
  std::shared_ptr<const VoicingModel> voicing_model;
};

// Spectral and multi-F0 stages for every frame; frames run in parallel.
std::vector<FrameAnalysis> analyze_frames(const AudioClip& clip, const FrameLayout& layout,
                                          const AnalysisConfig& config);

AnalysisResult analyze(const AudioClip& clip, const AnalysisConfig& config, const AnalyzeOptions& options = {});

// Model trained once per process from the synthetic corpus.
std::shared_ptr<const VoicingModel> builtin_voicing_model();

struct VoicingTrainingOptions {
  std::vector<std::string> feature_names = default_feature_names();
  GmmTrainOptions gmm;
};

// Frame features of `items` labelled by their ground truth.
struct LabelledFeatures {
  std::vector<VoicingFeatures> features;
  std::vector<bool> vocal;
};

LabelledFeatures labelled_features(const std::vector<synthetic::Item>& items, const AnalysisConfig& config);

VoicingModel train_voicing_model(const LabelledFeatures& data, const VoicingTrainingOptions& options = {});

}  // namespace melody
