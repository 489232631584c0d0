#include "melody/twm.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

namespace melody {

void TwmParams::validate() const {
  if (p < 0 || q < 0 || r < 0 || rho < 0) throw std::invalid_argument("TWM weights must be nonnegative");
  if (!(f0_min > 0) || f0_min > f0_max) throw std::invalid_argument("invalid F0 search range");
  if (!(resolution_cents > 0)) throw std::invalid_argument("grid resolution must be positive");
  if (!(max_harmonic_freq > 0)) throw std::invalid_argument("max harmonic frequency must be positive");
}

std::vector<double> generate_trial_grid(const TwmParams& params) {
  params.validate();
  const double span_cents = 1200.0 * std::log2(params.f0_max / params.f0_min);
  const auto steps = static_cast<std::size_t>(std::floor(span_cents / params.resolution_cents + 1e-9));
  std::vector<double> grid;
  grid.reserve(steps + 2);
  for (std::size_t i = 0; i <= steps; ++i) {
    grid.push_back(params.f0_min * std::exp2(static_cast<double>(i) * params.resolution_cents / 1200.0));
  }
  // Land exactly on f0_max: snap a rounding-level overshoot, append otherwise.
  const double last_gap = 1200.0 * std::log2(params.f0_max / grid.back());
  if (last_gap < 1e-6) {
    grid.back() = params.f0_max;
  } else {
    grid.push_back(params.f0_max);
  }
  return grid;
}

namespace {

double weighted_term(double distance, double freq, double relative_amp, const TwmParams& params) {
  double weight = params.p == 0.5 ? 1.0 / std::sqrt(freq) : std::pow(freq, -params.p);
  double mismatch = distance * weight;
  return mismatch + relative_amp * (params.q * mismatch - params.r) + params.r;
}

}  // namespace

double twm_error(const FramePeaks& frame, double trial_f0, const TwmParams& params) {
  if (!(trial_f0 > 0)) throw std::invalid_argument("trial F0 must be positive");
  // Measured peaks past the harmonic cap have no predicted partner; leave them out.
  const auto& all = frame.peaks;
  const auto cut = std::upper_bound(all.begin(), all.end(), params.max_harmonic_freq,
                                    [](double f, const SpectralPeak& pk) { return f < pk.frequency; });
  const std::span<const SpectralPeak> peaks(all.begin(), cut);
  if (peaks.empty()) return params.no_evidence_error;

  double amp_max = 0.0;
  double top_freq = 0.0;
  for (const auto& pk : peaks) {
    amp_max = std::max(amp_max, pk.amplitude);
    top_freq = std::max(top_freq, pk.frequency);
  }
  if (!(amp_max > 0)) return params.no_evidence_error;

  // Predict harmonics across the measured range (not beyond the cap).
  const auto harmonics = std::max<long>(1, std::lround(top_freq / trial_f0));

  // Peaks are sorted by frequency, so nearest-peak search is a merge walk.
  double ptm = 0.0;
  std::size_t k = 0;
  for (long n = 1; n <= harmonics; ++n) {
    const double fn = static_cast<double>(n) * trial_f0;
    while (k + 1 < peaks.size() && std::abs(peaks[k + 1].frequency - fn) <= std::abs(peaks[k].frequency - fn)) ++k;
    const double delta = std::abs(peaks[k].frequency - fn);
    ptm += weighted_term(delta, fn, peaks[k].amplitude / amp_max, params);
  }
  ptm /= static_cast<double>(harmonics);

  double mtp = 0.0;
  for (const auto& pk : peaks) {
    double n = std::clamp(std::round(pk.frequency / trial_f0), 1.0, static_cast<double>(harmonics));
    const double delta = std::abs(pk.frequency - n * trial_f0);
    mtp += weighted_term(delta, pk.frequency, pk.amplitude / amp_max, params);
  }
  mtp /= static_cast<double>(peaks.size());

  return std::max(0.0, ptm + params.rho * mtp);
}

namespace {

// Minimizes the error over log-frequency in [lo, hi].
F0Candidate golden_section(const FramePeaks& peaks, const TwmParams& params, double lo, double hi,
                           double start_f0, double start_err) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = std::log(lo), b = std::log(hi);
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = twm_error(peaks, std::exp(c), params);
  double fd = twm_error(peaks, std::exp(d), params);
  // Stop at ~0.01 cent.
  const double tol = 0.01 / 1200.0 * std::log(2.0);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = twm_error(peaks, std::exp(c), params);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = twm_error(peaks, std::exp(d), params);
    }
  }
  double x = fc <= fd ? c : d;
  double fx = std::min(fc, fd);
  // Never return something worse than the grid point we started from.
  if (start_err <= fx) return {start_f0, start_err, 0.0};
  return {std::exp(x), fx, 0.0};
}

}  // namespace

std::vector<F0Candidate> multi_f0(const FramePeaks& peaks, const TwmParams& params, std::size_t top_m) {
  if (top_m == 0) throw std::invalid_argument("top_m must be >= 1");
  if (peaks.peaks.empty()) return {};
  const auto grid = generate_trial_grid(params);
  std::vector<double> errors(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) errors[i] = twm_error(peaks, grid[i], params);

  struct Minimum {
    std::size_t first, last;
  };
  std::vector<Minimum> minima;
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    // A plateau counts once, at its first index.
    bool left_ok = i == 0 || errors[i] < errors[i - 1];
    std::size_t j = i;
    while (j + 1 < n && errors[j + 1] == errors[i]) ++j;
    bool right_ok = j + 1 == n || errors[i] < errors[j + 1];
    if (left_ok && right_ok) minima.push_back({i, j});
    i = j;
  }

  // Refinement stays within one grid step of its minimum; refining the deepest
  // 2 * top_m is plenty to fill top_m.
  std::stable_sort(minima.begin(), minima.end(),
                   [&](const Minimum& a, const Minimum& b) { return errors[a.first] < errors[b.first]; });
  if (minima.size() > 2 * top_m) minima.resize(2 * top_m);

  std::vector<F0Candidate> candidates;
  for (const auto& m : minima) {
    double lo = grid[m.first == 0 ? 0 : m.first - 1];
    double hi = grid[m.last + 1 == n ? m.last : m.last + 1];
    candidates.push_back(hi > lo ? golden_section(peaks, params, lo, hi, grid[m.first], errors[m.first])
                                 : F0Candidate{grid[m.first], errors[m.first], 0.0});
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const F0Candidate& a, const F0Candidate& b) { return a.twm_error < b.twm_error; });
  if (candidates.size() > top_m) candidates.resize(top_m);

  const double worst = candidates.empty() ? 0.0 : candidates.back().twm_error;
  for (auto& c : candidates) c.salience = worst > 0 ? -(c.twm_error / worst) : 0.0;
  return candidates;
}

}  // namespace melody
