#include "melody/voicing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

namespace melody {

double harmonic_energy(const FramePeaks& frame, double f0, double band_hz, double tolerance) {
  if (!(f0 > 0)) throw std::invalid_argument("f0 must be positive");
  double total = 0.0, harmonic = 0.0;
  for (const auto& pk : frame.peaks) {
    if (pk.frequency > band_hz) break;
    const double energy = pk.amplitude * pk.amplitude;
    total += energy;
    const double n = std::max(1.0, std::round(pk.frequency / f0));
    if (std::abs(pk.frequency - n * f0) <= tolerance * n * f0) harmonic += energy;
  }
  return total > 0 ? std::clamp(harmonic / total, 0.0, 1.0) : 0.0;
}

double pitch_instability(const PitchContour& contour, std::size_t frame_index, std::size_t half_window) {
  if (half_window < 1) throw std::invalid_argument("half_window must be >= 1");
  if (frame_index >= contour.size()) return 0.0;
  const std::size_t first = frame_index >= half_window ? frame_index - half_window : 0;
  const std::size_t last = std::min(contour.size() - 1, frame_index + half_window);

  // Logs relative to the first voiced F0, so a constant window is exactly zero.
  double ref = 0.0;
  std::vector<double> logs;
  for (std::size_t t = first; t <= last; ++t) {
    if (!contour[t].voiced()) continue;
    if (ref == 0.0) ref = contour[t].f0;
    logs.push_back(std::log2(contour[t].f0 / ref));
  }
  if (logs.size() < 3) return 0.0;
  double centre = 0.0;
  for (double v : logs) centre += v;
  centre /= static_cast<double>(logs.size());
  double var = 0.0;
  for (double v : logs) var += (1200.0 * (v - centre)) * (1200.0 * (v - centre));
  return std::sqrt(var / static_cast<double>(logs.size()));
}

std::vector<VoicingFeatures> voicing_features(const PitchContour& contour, const std::vector<FramePeaks>& peaks,
                                              const FeatureParams& params) {
  if (peaks.size() != contour.size()) throw std::invalid_argument("peaks and contour frame counts differ");
  std::vector<VoicingFeatures> out(contour.size());
  for (std::size_t t = 0; t < contour.size(); ++t) {
    if (!contour[t].voiced()) continue;
    out[t].harmonic_energy = harmonic_energy(peaks[t], contour[t].f0, params.band_hz, params.harmonic_tolerance);
    out[t].instability = pitch_instability(contour, t, params.instability_half_window);
  }
  return out;
}

std::vector<double> feature_vector(const VoicingFeatures& features, const std::vector<std::string>& names) {
  std::vector<double> v;
  v.reserve(names.size());
  for (const auto& name : names) {
    if (name == "harmonic_energy") {
      v.push_back(features.harmonic_energy);
    } else if (name == "instability_cents") {
      v.push_back(features.instability);
    } else {
      throw std::invalid_argument("unknown voicing feature '" + name + "'");
    }
  }
  return v;
}

// --- GMM ---

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double log_sum_exp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

double component_log_density(const GaussianComponent& c, const std::vector<double>& x) {
  double acc = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - c.mean[d];
    acc += kLog2Pi + std::log(c.variance[d]) + diff * diff / c.variance[d];
  }
  return -0.5 * acc;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

// k-means++ seeding followed by a few Lloyd iterations.
std::vector<std::vector<double>> kmeans(const std::vector<std::vector<double>>& x, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> centres;
  centres.push_back(x[std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng)]);
  std::vector<double> dist(x.size());
  while (centres.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centres) best = std::min(best, squared_distance(x[i], c));
      dist[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      while (pick + 1 < x.size() && u >= dist[pick]) u -= dist[pick++];
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(rng);
    }
    centres.push_back(x[pick]);
  }

  std::vector<std::size_t> assign(x.size());
  for (int iter = 0; iter < 20; ++iter) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c) {
        if (squared_distance(x[i], centres[c]) < squared_distance(x[i], centres[best])) best = c;
      }
      assign[i] = best;
    }
    std::vector<std::vector<double>> sums(k, std::vector<double>(x[0].size(), 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      ++counts[assign[i]];
      for (std::size_t d = 0; d < x[i].size(); ++d) sums[assign[i]][d] += x[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // keep an orphaned centre where it is
      for (auto& v : sums[c]) v /= static_cast<double>(counts[c]);
      centres[c] = sums[c];
    }
  }
  return centres;
}

}  // namespace

GmmModel::GmmModel(std::vector<GaussianComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw GmmError(GmmError::Kind::Invalid, "GMM needs at least one component");
  const std::size_t dim = components_.front().mean.size();
  double weight_sum = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != dim || c.variance.size() != dim || dim == 0) {
      throw GmmError(GmmError::Kind::Invalid, "GMM component dimensions disagree");
    }
    if (!(c.weight >= 0)) throw GmmError(GmmError::Kind::Invalid, "negative GMM weight");
    for (double v : c.variance) {
      if (!(v > 0)) throw GmmError(GmmError::Kind::Invalid, "GMM variances must be positive");
    }
    weight_sum += c.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) throw GmmError(GmmError::Kind::Invalid, "GMM weights must sum to 1");
}

double GmmModel::log_density(const std::vector<double>& x) const {
  if (x.size() != dimension()) throw std::invalid_argument("feature dimension mismatch");
  std::vector<double> terms;
  terms.reserve(components_.size());
  for (const auto& c : components_) {
    if (c.weight > 0) terms.push_back(std::log(c.weight) + component_log_density(c, x));
  }
  return log_sum_exp(terms);
}

GmmTrainResult train_gmm(const std::vector<std::vector<double>>& x, const GmmTrainOptions& options) {
  using K = GmmError::Kind;
  const std::size_t k = options.components;
  if (k < 1) throw GmmError(K::Invalid, "need at least one component");
  if (x.size() < 10 * k) {
    throw GmmError(K::TooFewSamples, "need at least " + std::to_string(10 * k) + " samples for " +
                                         std::to_string(k) + " components, got " + std::to_string(x.size()));
  }
  const std::size_t dim = x[0].size();
  if (dim == 0) throw GmmError(K::Invalid, "empty feature vectors");
  for (const auto& v : x) {
    if (v.size() != dim) throw GmmError(K::Invalid, "feature vectors differ in length");
  }
  if (std::all_of(x.begin(), x.end(), [&](const auto& v) { return v == x[0]; })) {
    throw GmmError(K::Degenerate, "all training samples are identical");
  }

  const double n = static_cast<double>(x.size());
  std::vector<GaussianComponent> comps(k);
  {
    // Start every component at its k-means centre with the global variance.
    std::vector<double> mean(dim, 0.0), var(dim, 0.0);
    for (const auto& v : x)
      for (std::size_t d = 0; d < dim; ++d) mean[d] += v[d] / n;
    for (const auto& v : x)
      for (std::size_t d = 0; d < dim; ++d) var[d] += (v[d] - mean[d]) * (v[d] - mean[d]) / n;
    for (auto& s : var) s = std::max(s, options.variance_floor);
    auto centres = kmeans(x, k, options.seed);
    for (std::size_t c = 0; c < k; ++c) comps[c] = {1.0 / static_cast<double>(k), centres[c], var};
  }

  GmmTrainResult result;
  std::vector<std::vector<double>> resp(x.size(), std::vector<double>(k));
  std::vector<double> terms(k);

  auto e_step = [&]() {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        terms[c] = comps[c].weight > 0 ? std::log(comps[c].weight) + component_log_density(comps[c], x[i])
                                       : -std::numeric_limits<double>::infinity();
      }
      const double lse = log_sum_exp(terms);
      total += lse;
      for (std::size_t c = 0; c < k; ++c) resp[i][c] = std::exp(terms[c] - lse);
    }
    return total;
  };

  double ll = e_step();
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    result.log_likelihood.push_back(ll);
    for (std::size_t c = 0; c < k; ++c) {
      double nk = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) nk += resp[i][c];
      comps[c].weight = nk / n;
      if (nk < 1e-10) continue;  // starved component keeps its shape
      std::vector<double> mean(dim, 0.0), var(dim, 0.0);
      for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t d = 0; d < dim; ++d) mean[d] += resp[i][c] * x[i][d];
      for (auto& m : mean) m /= nk;
      for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t d = 0; d < dim; ++d) var[d] += resp[i][c] * (x[i][d] - mean[d]) * (x[i][d] - mean[d]);
      for (auto& v : var) v = std::max(v / nk, options.variance_floor);
      comps[c].mean = std::move(mean);
      comps[c].variance = std::move(var);
    }
    double weight_sum = 0.0;
    for (const auto& c : comps) weight_sum += c.weight;
    for (auto& c : comps) c.weight /= weight_sum;

    const double next = e_step();
    const double gain = (next - ll) / n;
    ll = next;
    if (gain < options.tolerance) break;
  }
  result.log_likelihood.push_back(ll);
  result.model = GmmModel(std::move(comps));
  return result;
}

// --- persistence ---

namespace {

nlohmann::json gmm_to_json(const GmmModel& model) {
  nlohmann::json weights = nlohmann::json::array(), means = nlohmann::json::array(),
                 variances = nlohmann::json::array();
  for (const auto& c : model.components()) {
    weights.push_back(c.weight);
    means.push_back(c.mean);
    variances.push_back(c.variance);
  }
  return {{"weights", weights}, {"means", means}, {"variances", variances}};
}

GmmModel gmm_from_json(const nlohmann::json& doc, const std::string& name) {
  try {
    auto weights = doc.at("weights").get<std::vector<double>>();
    auto means = doc.at("means").get<std::vector<std::vector<double>>>();
    auto variances = doc.at("variances").get<std::vector<std::vector<double>>>();
    if (weights.size() != means.size() || weights.size() != variances.size()) {
      throw GmmError(GmmError::Kind::Invalid, "component arrays differ in length");
    }
    std::vector<GaussianComponent> comps;
    for (std::size_t c = 0; c < weights.size(); ++c) comps.push_back({weights[c], means[c], variances[c]});
    return GmmModel(std::move(comps));
  } catch (const nlohmann::json::exception& e) {
    throw GmmError(GmmError::Kind::Invalid, "class '" + name + "': " + e.what());
  } catch (const GmmError& e) {
    throw GmmError(GmmError::Kind::Invalid, "class '" + name + "': " + e.what());
  }
}

}  // namespace

nlohmann::json to_json(const VoicingModel& model) {
  return {{"version", kVoicingModelVersion},
          {"feature_names", model.feature_names},
          {"classes", {{"vocal", gmm_to_json(model.vocal)}, {"nonvocal", gmm_to_json(model.nonvocal)}}}};
}

VoicingModel voicing_model_from_json(const nlohmann::json& doc) {
  using K = GmmError::Kind;
  if (!doc.is_object() || !doc.contains("version") || !doc["version"].is_number_integer()) {
    throw GmmError(K::Invalid, "voicing model lacks an integer version");
  }
  const int version = doc["version"].get<int>();
  if (version != kVoicingModelVersion) {
    throw GmmError(K::Invalid, "unsupported voicing model version " + std::to_string(version));
  }
  VoicingModel model;
  try {
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw GmmError(K::Invalid, std::string("feature_names: ") + e.what());
  }
  feature_vector(VoicingFeatures{}, model.feature_names);  // rejects unknown names
  if (!doc.contains("classes")) throw GmmError(K::Invalid, "voicing model lacks classes");
  model.vocal = gmm_from_json(doc["classes"].value("vocal", nlohmann::json::object()), "vocal");
  model.nonvocal = gmm_from_json(doc["classes"].value("nonvocal", nlohmann::json::object()), "nonvocal");
  if (model.vocal.dimension() != model.feature_names.size() ||
      model.nonvocal.dimension() != model.feature_names.size()) {
    throw GmmError(K::Invalid, "model dimension does not match feature_names");
  }
  return model;
}

void save_voicing_model(const VoicingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(model).dump(2) << '\n';
}

VoicingModel load_voicing_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw GmmError(GmmError::Kind::Invalid, path.string() + ": " + e.what());
  }
  return voicing_model_from_json(doc);
}

// --- classification ---

std::vector<bool> median_smooth(const std::vector<bool>& labels, std::size_t width) {
  if (width % 2 == 0) throw std::invalid_argument("smoothing width must be odd");
  if (width <= 1 || labels.empty()) return labels;
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(width / 2);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(labels.size());
  // Recursive form: the trailing half of each window reads already-smoothed
  // labels, so an isolated dip between two runs is filled in one pass. The
  // leading half+1 entries are raw and still form a majority, so no label
  // absent from the raw window can appear.
  std::vector<bool> out(labels.size());
  auto at = [&](std::ptrdiff_t j, std::ptrdiff_t t) {
    const auto k = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, n - 1));
    return j >= 0 && j < t ? static_cast<bool>(out[k]) : static_cast<bool>(labels[k]);
  };
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    std::ptrdiff_t votes = 0;
    for (std::ptrdiff_t j = t - half; j <= t + half; ++j) votes += at(j, t);
    out[static_cast<std::size_t>(t)] = votes > half;
  }
  return out;
}

std::vector<bool> classify_frames(const std::vector<std::vector<double>>& features, const GmmModel& vocal,
                                  const GmmModel& nonvocal, std::size_t smooth_frames, double bias) {
  if (vocal.dimension() != nonvocal.dimension()) throw std::invalid_argument("models disagree on feature space");
  std::vector<bool> raw(features.size());
  for (std::size_t t = 0; t < features.size(); ++t) {
    raw[t] = vocal.log_density(features[t]) > nonvocal.log_density(features[t]) + bias;
  }
  return median_smooth(raw, smooth_frames);
}

std::vector<bool> classify_frames(const std::vector<VoicingFeatures>& features, const VoicingModel& model,
                                  std::size_t smooth_frames, double bias) {
  std::vector<std::vector<double>> vectors;
  vectors.reserve(features.size());
  for (const auto& f : features) vectors.push_back(feature_vector(f, model.feature_names));
  return classify_frames(vectors, model.vocal, model.nonvocal, smooth_frames, bias);
}

}  // namespace melody
