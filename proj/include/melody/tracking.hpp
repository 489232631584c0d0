#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "melody/twm.hpp"

namespace melody {

struct TrackingParams {
  double lambda = 0.4;       // smoothness weight
  double cap_cents = 400.0;  // jumps at or beyond this cost the maximum
  // Dual mode: candidate pairs whose frequency ratio lies within this many
  // cents of m:n (m <= 4, n <= max_ratio_denominator) are not tracked together.
  double harmonic_relation_tolerance = 30.0;
  int max_ratio_denominator = 1;

  void validate() const;
};

// One analysis frame of the candidate lattice. Candidates are ranked by salience.
struct LatticeFrame {
  double time = 0.0;
  std::vector<F0Candidate> candidates;
};

using Lattice = std::vector<LatticeFrame>;

// A per-frame pitch estimate. Times are frame centres; f0 == 0 means unvoiced.
struct ContourPoint {
  double time = 0.0;
  double f0 = 0.0;
  double salience = 0.0;

  bool voiced() const { return f0 > 0.0; }
};

using PitchContour = std::vector<ContourPoint>;

double smoothness_cost(double f_prev, double f_cur, const TrackingParams& params);

// Chosen candidate index per frame; -1 for frames without candidates.
using TrackPath = std::vector<int>;

// Objective minimized by track_single for a given path.
double path_cost(const Lattice& lattice, const TrackPath& path, const TrackingParams& params);

TrackPath best_single_path(const Lattice& lattice, const TrackingParams& params);
PitchContour track_single(const Lattice& lattice, const TrackingParams& params);

// Dual-mode state for one frame: the candidate followed by contour A and the
// one followed by contour B. A frame with no admissible pair falls back to
// single states (a only, b = -1); an empty frame uses (-1, -1).
struct PairState {
  int a = -1;
  int b = -1;

  friend bool operator==(const PairState&, const PairState&) = default;
};

using PairPath = std::vector<PairState>;

bool harmonically_related(double f_a, double f_b, const TrackingParams& params);

// States the dual tracker may occupy in one frame, in tie-break order.
std::vector<PairState> pair_states(const LatticeFrame& frame, const TrackingParams& params);

double pair_path_cost(const Lattice& lattice, const PairPath& path, const TrackingParams& params);

PairPath best_pair_path(const Lattice& lattice, const TrackingParams& params);

std::pair<PitchContour, PitchContour> track_dual(const Lattice& lattice, const TrackingParams& params);

// Per-frame singing-voice evidence along a contour. Unvoiced frames carry zeros.
struct VoicingFeatures {
  double harmonic_energy = 0.0;  // [0, 1]
  double instability = 0.0;      // cents
};

// Picks the contour that looks more like a voice: higher harmonic energy and
// more pitch instability, each contour mean z-normalized across the pair.
// Ties go to A. Returns 0 for contour A, 1 for contour B.
int select_voice_contour_index(const std::pair<PitchContour, PitchContour>& contours,
                               const std::vector<VoicingFeatures>& features_a,
                               const std::vector<VoicingFeatures>& features_b);

PitchContour select_voice_contour(const std::pair<PitchContour, PitchContour>& contours,
                                  const std::vector<VoicingFeatures>& features_a,
                                  const std::vector<VoicingFeatures>& features_b);

}  // namespace melody
