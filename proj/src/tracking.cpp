#include "melody/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace melody {

void TrackingParams::validate() const {
  if (!(lambda >= 0)) throw std::invalid_argument("lambda must be nonnegative");
  if (!(cap_cents > 0)) throw std::invalid_argument("cap_cents must be positive");
  if (!(harmonic_relation_tolerance >= 0)) throw std::invalid_argument("harmonic tolerance must be nonnegative");
  if (max_ratio_denominator < 1 || max_ratio_denominator > 4) {
    throw std::invalid_argument("max_ratio_denominator must be in 1..4");
  }
}

double smoothness_cost(double f_prev, double f_cur, const TrackingParams& params) {
  if (!(f_prev > 0) || !(f_cur > 0)) throw std::invalid_argument("frequencies must be positive");
  const double cents = std::abs(1200.0 * std::log2(f_cur / f_prev));
  return std::min(cents, params.cap_cents) / params.cap_cents;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double meas(const LatticeFrame& frame, int index) {
  return index < 0 ? 0.0 : frame.candidates[static_cast<std::size_t>(index)].cost();
}

double freq(const LatticeFrame& frame, int index) {
  return frame.candidates[static_cast<std::size_t>(index)].f0;
}

double transition(const LatticeFrame& prev, int i, const LatticeFrame& cur, int j, const TrackingParams& params) {
  if (i < 0 || j < 0) return 0.0;
  return params.lambda * smoothness_cost(freq(prev, i), freq(cur, j), params);
}

double pair_transition(const LatticeFrame& prev, const PairState& a, const LatticeFrame& cur, const PairState& b,
                       const TrackingParams& params) {
  return transition(prev, a.a, cur, b.a, params) + transition(prev, a.b, cur, b.b, params);
}

double pair_meas(const LatticeFrame& frame, const PairState& s) {
  return meas(frame, s.a) + meas(frame, s.b);
}

ContourPoint point_for(const LatticeFrame& frame, int index) {
  if (index < 0) return {frame.time, 0.0, 0.0};
  const auto& c = frame.candidates[static_cast<std::size_t>(index)];
  return {frame.time, c.f0, c.salience};
}

}  // namespace

double path_cost(const Lattice& lattice, const TrackPath& path, const TrackingParams& params) {
  if (path.size() != lattice.size()) throw std::invalid_argument("path length does not match lattice");
  double total = 0.0;
  for (std::size_t t = 0; t < lattice.size(); ++t) {
    if (t > 0) total = total + transition(lattice[t - 1], path[t - 1], lattice[t], path[t], params);
    total = total + meas(lattice[t], path[t]);
  }
  return total;
}

TrackPath best_single_path(const Lattice& lattice, const TrackingParams& params) {
  params.validate();
  const std::size_t frames = lattice.size();
  if (frames == 0) return {};

  // Each frame has max(1, candidates) states; state 0 of an empty frame is the placeholder.
  auto states = [&](std::size_t t) { return std::max<std::size_t>(1, lattice[t].candidates.size()); };
  auto index_of = [&](std::size_t t, std::size_t s) { return lattice[t].candidates.empty() ? -1 : static_cast<int>(s); };

  std::vector<std::vector<double>> cost(frames);
  std::vector<std::vector<std::size_t>> back(frames);
  cost[0].resize(states(0));
  for (std::size_t s = 0; s < states(0); ++s) cost[0][s] = meas(lattice[0], index_of(0, s));

  for (std::size_t t = 1; t < frames; ++t) {
    cost[t].assign(states(t), kInf);
    back[t].assign(states(t), 0);
    for (std::size_t s = 0; s < states(t); ++s) {
      const int j = index_of(t, s);
      double best = kInf;
      std::size_t arg = 0;
      for (std::size_t r = 0; r < states(t - 1); ++r) {
        double c = cost[t - 1][r] + transition(lattice[t - 1], index_of(t - 1, r), lattice[t], j, params);
        if (c < best) {
          best = c;
          arg = r;
        }
      }
      cost[t][s] = best + meas(lattice[t], j);
      back[t][s] = arg;
    }
  }

  std::size_t s = static_cast<std::size_t>(
      std::min_element(cost.back().begin(), cost.back().end()) - cost.back().begin());
  TrackPath path(frames);
  for (std::size_t t = frames; t-- > 0;) {
    path[t] = index_of(t, s);
    if (t > 0) s = back[t][s];
  }
  return path;
}

PitchContour track_single(const Lattice& lattice, const TrackingParams& params) {
  const auto path = best_single_path(lattice, params);
  PitchContour contour;
  contour.reserve(path.size());
  for (std::size_t t = 0; t < path.size(); ++t) contour.push_back(point_for(lattice[t], path[t]));
  return contour;
}

bool harmonically_related(double f_a, double f_b, const TrackingParams& params) {
  const double lo = std::min(f_a, f_b), hi = std::max(f_a, f_b);
  const double cents = 1200.0 * std::log2(hi / lo);
  for (int m = 1; m <= 4; ++m) {
    for (int n = 1; n <= params.max_ratio_denominator && n <= m; ++n) {
      const double target = 1200.0 * std::log2(static_cast<double>(m) / n);
      if (std::abs(cents - target) <= params.harmonic_relation_tolerance) return true;
    }
  }
  return false;
}

std::vector<PairState> pair_states(const LatticeFrame& frame, const TrackingParams& params) {
  const int n = static_cast<int>(frame.candidates.size());
  if (n == 0) return {PairState{}};
  std::vector<PairState> states;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || harmonically_related(freq(frame, i), freq(frame, j), params)) continue;
      states.push_back(PairState{i, j});
    }
  }
  if (states.empty()) {
    for (int i = 0; i < n; ++i) states.push_back(PairState{i, -1});
  }
  return states;
}

double pair_path_cost(const Lattice& lattice, const PairPath& path, const TrackingParams& params) {
  if (path.size() != lattice.size()) throw std::invalid_argument("path length does not match lattice");
  double total = 0.0;
  for (std::size_t t = 0; t < lattice.size(); ++t) {
    if (t > 0) total = total + pair_transition(lattice[t - 1], path[t - 1], lattice[t], path[t], params);
    total = total + pair_meas(lattice[t], path[t]);
  }
  return total;
}

PairPath best_pair_path(const Lattice& lattice, const TrackingParams& params) {
  params.validate();
  const std::size_t frames = lattice.size();
  if (frames == 0) return {};

  std::vector<std::vector<PairState>> states(frames);
  for (std::size_t t = 0; t < frames; ++t) states[t] = pair_states(lattice[t], params);

  std::vector<std::vector<double>> cost(frames);
  std::vector<std::vector<std::size_t>> back(frames);
  cost[0].resize(states[0].size());
  for (std::size_t s = 0; s < states[0].size(); ++s) cost[0][s] = pair_meas(lattice[0], states[0][s]);

  for (std::size_t t = 1; t < frames; ++t) {
    cost[t].assign(states[t].size(), kInf);
    back[t].assign(states[t].size(), 0);
    for (std::size_t s = 0; s < states[t].size(); ++s) {
      double best = kInf;
      std::size_t arg = 0;
      for (std::size_t r = 0; r < states[t - 1].size(); ++r) {
        double c = cost[t - 1][r] + pair_transition(lattice[t - 1], states[t - 1][r], lattice[t], states[t][s], params);
        if (c < best) {
          best = c;
          arg = r;
        }
      }
      cost[t][s] = best + pair_meas(lattice[t], states[t][s]);
      back[t][s] = arg;
    }
  }

  std::size_t s = static_cast<std::size_t>(
      std::min_element(cost.back().begin(), cost.back().end()) - cost.back().begin());
  PairPath path(frames);
  for (std::size_t t = frames; t-- > 0;) {
    path[t] = states[t][s];
    if (t > 0) s = back[t][s];
  }
  return path;
}

std::pair<PitchContour, PitchContour> track_dual(const Lattice& lattice, const TrackingParams& params) {
  const auto path = best_pair_path(lattice, params);
  std::pair<PitchContour, PitchContour> out;
  out.first.reserve(path.size());
  out.second.reserve(path.size());
  for (std::size_t t = 0; t < path.size(); ++t) {
    out.first.push_back(point_for(lattice[t], path[t].a));
    out.second.push_back(point_for(lattice[t], path[t].b));
  }
  return out;
}

int select_voice_contour_index(const std::pair<PitchContour, PitchContour>& contours,
                               const std::vector<VoicingFeatures>& features_a,
                               const std::vector<VoicingFeatures>& features_b) {
  const auto& [a, b] = contours;
  if (a.size() != b.size() || features_a.size() != a.size() || features_b.size() != b.size()) {
    throw std::invalid_argument("contours and features must share the frame grid");
  }
  auto voiced_count = [](const PitchContour& c) {
    return std::count_if(c.begin(), c.end(), [](const ContourPoint& p) { return p.voiced(); });
  };
  const auto na = voiced_count(a), nb = voiced_count(b);
  if (na == 0 && nb == 0) return 0;
  if (nb == 0) return 0;
  if (na == 0) return 1;

  auto mean_of = [](const PitchContour& c, const std::vector<VoicingFeatures>& f, auto field) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < c.size(); ++t) {
      if (c[t].voiced()) sum += field(f[t]), ++n;
    }
    return sum / static_cast<double>(n);
  };
  // Two values z-normalized across the pair become +1/-1, or 0/0 when equal.
  auto zscores = [&](auto field) {
    const double ma = mean_of(a, features_a, field), mb = mean_of(b, features_b, field);
    const double m = 0.5 * (ma + mb), sd = 0.5 * std::abs(ma - mb);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(m)))) return std::pair{0.0, 0.0};
    return std::pair{(ma - m) / sd, (mb - m) / sd};
  };
  const auto [energy_a, energy_b] = zscores([](const VoicingFeatures& f) { return f.harmonic_energy; });
  const auto [unstable_a, unstable_b] = zscores([](const VoicingFeatures& f) { return f.instability; });
  return (energy_b + unstable_b) > (energy_a + unstable_a) ? 1 : 0;
}

PitchContour select_voice_contour(const std::pair<PitchContour, PitchContour>& contours,
                                  const std::vector<VoicingFeatures>& features_a,
                                  const std::vector<VoicingFeatures>& features_b) {
  return select_voice_contour_index(contours, features_a, features_b) == 0 ? contours.first : contours.second;
}

}  // namespace melody
