#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "melody/spectral.hpp"
#include "melody/tracking.hpp"

namespace melody {

// Share of sinusoidal energy below band_hz that sits within `tolerance`
// (relative) of an integer multiple of f0.
double harmonic_energy(const FramePeaks& peaks, double f0, double band_hz, double tolerance = 0.03);

// Standard deviation, in cents, of the voiced F0s within +-half_window frames
// around frame_index, measured against their geometric mean. Zero when fewer
// than three voiced frames fall in the window.
double pitch_instability(const PitchContour& contour, std::size_t frame_index, std::size_t half_window = 10);

struct FeatureParams {
  double band_hz = 5000.0;
  double harmonic_tolerance = 0.03;
  std::size_t instability_half_window = 10;
};

// Features for every frame of `contour`; peaks must be on the same frame grid.
std::vector<VoicingFeatures> voicing_features(const PitchContour& contour, const std::vector<FramePeaks>& peaks,
                                              const FeatureParams& params = {});

inline const std::vector<std::string>& default_feature_names() {
  static const std::vector<std::string> names{"harmonic_energy", "instability_cents"};
  return names;
}

// Projects features onto the named dimensions.
std::vector<double> feature_vector(const VoicingFeatures& features, const std::vector<std::string>& names);

class GmmError : public std::runtime_error {
 public:
  enum class Kind { TooFewSamples, Degenerate, Invalid };
  GmmError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct GaussianComponent {
  double weight = 0.0;
  std::vector<double> mean;
  std::vector<double> variance;  // diagonal
};

class GmmModel {
 public:
  GmmModel() = default;
  explicit GmmModel(std::vector<GaussianComponent> components);

  const std::vector<GaussianComponent>& components() const { return components_; }
  std::size_t dimension() const { return components_.empty() ? 0 : components_.front().mean.size(); }

  double log_density(const std::vector<double>& x) const;

 private:
  std::vector<GaussianComponent> components_;
};

struct GmmTrainOptions {
  std::size_t components = 4;
  std::size_t max_iters = 200;
  std::uint64_t seed = 1;
  double variance_floor = 1e-6;
  double tolerance = 1e-6;  // per-sample log-likelihood gain that ends training
};

struct GmmTrainResult {
  GmmModel model;
  // Total data log-likelihood before each M-step, then after the last one.
  std::vector<double> log_likelihood;
};

GmmTrainResult train_gmm(const std::vector<std::vector<double>>& samples, const GmmTrainOptions& options = {});

struct VoicingModel {
  std::vector<std::string> feature_names = default_feature_names();
  GmmModel vocal;
  GmmModel nonvocal;
};

constexpr int kVoicingModelVersion = 1;

nlohmann::json to_json(const VoicingModel& model);
VoicingModel voicing_model_from_json(const nlohmann::json& doc);
void save_voicing_model(const VoicingModel& model, const std::filesystem::path& path);
VoicingModel load_voicing_model(const std::filesystem::path& path);

// Recursive majority vote over an odd window with edge replication: labels
// before the current frame are taken from the smoothed output.
std::vector<bool> median_smooth(const std::vector<bool>& labels, std::size_t width);

// Vocal where log p(x | vocal) > log p(x | nonvocal) + bias, then median smoothed.
std::vector<bool> classify_frames(const std::vector<std::vector<double>>& features, const GmmModel& vocal,
                                  const GmmModel& nonvocal, std::size_t smooth_frames = 11, double bias = 0.0);

std::vector<bool> classify_frames(const std::vector<VoicingFeatures>& features, const VoicingModel& model,
                                  std::size_t smooth_frames = 11, double bias = 0.0);

}  // namespace melody
