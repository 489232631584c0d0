#pragma once

#include <cstddef>
#include <vector>

#include "melody/spectral.hpp"

namespace melody {

struct TwmParams {
  double p = 0.5;    // frequency-weighting exponent
  double q = 1.4;    // mismatch/amplitude coupling
  double r = 0.5;    // amplitude reward
  double rho = 0.33; // weight of the measured-to-predicted term
  double max_harmonic_freq = 5000.0;
  double f0_min = 70.0;
  double f0_max = 1120.0;
  double resolution_cents = 10.0;
  // Error reported for a frame without any measured peaks.
  double no_evidence_error = 1.0e6;

  void validate() const;
};

struct F0Candidate {
  double f0 = 0.0;
  double twm_error = 0.0;
  double salience = 0.0;  // -(twm_error / worst candidate error in the frame)

  // Normalized error in [0, 1]; the tracker's measurement cost.
  double cost() const { return -salience; }
};

std::vector<double> generate_trial_grid(const TwmParams& params);

// Two-way mismatch between the measured peaks and the harmonic series of
// trial_f0. Each per-partial term is offset by the amplitude reward r so the
// total is nonnegative and a perfectly matched equal-amplitude series scores 0.
double twm_error(const FramePeaks& peaks, double trial_f0, const TwmParams& params);

// Local minima of the error over the trial grid, refined by golden-section
// search, best top_m first.
std::vector<F0Candidate> multi_f0(const FramePeaks& peaks, const TwmParams& params, std::size_t top_m = 5);

}  // namespace melody
