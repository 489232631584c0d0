#include "melody/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace melody {

namespace {

std::size_t nearest_frame(const PitchContour& contour, double t) {
  auto it = std::lower_bound(contour.begin(), contour.end(), t,
                             [](const ContourPoint& p, double v) { return p.time < v; });
  if (it == contour.begin()) return 0;
  if (it == contour.end()) return contour.size() - 1;
  auto prev = std::prev(it);
  return static_cast<std::size_t>((t - prev->time) <= (it->time - t) ? prev - contour.begin()
                                                                     : it - contour.begin());
}

}  // namespace

MelodyMetrics evaluate(const PitchContour& estimate, const PitchContour& reference, double tolerance_cents) {
  if (reference.empty()) throw std::invalid_argument("reference contour is empty");
  MelodyMetrics m;

  std::size_t ref_voiced = 0, ref_unvoiced = 0, recalled = 0, false_alarms = 0, pitch_ok = 0, chroma_ok = 0,
              correct = 0;
  const double spacing = reference.size() > 1 ? reference[1].time - reference[0].time : 0.01;
  for (const auto& ref : reference) {
    ContourPoint est{ref.time, 0.0, 0.0};
    if (!estimate.empty()) {
      est = estimate[nearest_frame(estimate, ref.time)];
      if (std::abs(est.time - ref.time) > 0.25 * spacing) m.grid_mismatch = true;
    }
    if (ref.voiced()) {
      ++ref_voiced;
      bool pitch_hit = false;
      if (est.voiced()) {
        ++recalled;
        const double cents = 1200.0 * std::log2(est.f0 / ref.f0);
        pitch_hit = std::abs(cents) <= tolerance_cents;
        // Fold into (-600, 600].
        double folded = std::fmod(cents, 1200.0);
        if (folded > 600.0) folded -= 1200.0;
        if (folded <= -600.0) folded += 1200.0;
        if (pitch_hit) ++pitch_ok;
        if (std::abs(folded) <= tolerance_cents) ++chroma_ok;
      }
      if (pitch_hit) ++correct;
    } else {
      ++ref_unvoiced;
      if (est.voiced()) {
        ++false_alarms;
      } else {
        ++correct;
      }
    }
  }

  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  m.voicing_recall = ratio(recalled, ref_voiced);
  m.voicing_false_alarm = ratio(false_alarms, ref_unvoiced);
  m.raw_pitch_accuracy = ratio(pitch_ok, ref_voiced);
  m.raw_chroma_accuracy = ratio(chroma_ok, ref_voiced);
  m.overall_accuracy = ratio(correct, reference.size());
  return m;
}

nlohmann::json to_json(const MelodyMetrics& m) {
  return {{"voicing_recall", m.voicing_recall},
          {"voicing_false_alarm", m.voicing_false_alarm},
          {"raw_pitch_accuracy", m.raw_pitch_accuracy},
          {"raw_chroma_accuracy", m.raw_chroma_accuracy},
          {"overall_accuracy", m.overall_accuracy}};
}

PitchContour read_contour(std::istream& in, const std::string& source) {
  PitchContour contour;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    std::istringstream fields(line);
    double time = 0.0, f0 = 0.0;
    std::string extra;
    if (!(fields >> time >> f0) || (fields >> extra)) {
      throw ContourFormatError(source + ":" + std::to_string(line_no) + ": expected 'time<TAB>f0', got '" + line + "'");
    }
    if (!std::isfinite(time) || !std::isfinite(f0)) {
      throw ContourFormatError(source + ":" + std::to_string(line_no) + ": non-finite value");
    }
    if (f0 < 0) throw ContourFormatError(source + ":" + std::to_string(line_no) + ": negative f0");
    if (!contour.empty() && time <= contour.back().time) {
      throw ContourFormatError(source + ":" + std::to_string(line_no) + ": times must increase");
    }
    contour.push_back({time, f0, 0.0});
  }
  return contour;
}

PitchContour read_contour(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContourFormatError("cannot open " + path.string());
  return read_contour(in, path.string());
}

void write_contour(std::ostream& out, const PitchContour& contour) {
  out << std::fixed;
  for (const auto& p : contour) {
    out << std::setprecision(6) << p.time << '\t' << std::setprecision(2) << (p.voiced() ? p.f0 : 0.0) << '\n';
  }
}

void write_contour(const std::filesystem::path& path, const PitchContour& contour) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_contour(out, contour);
}

}  // namespace melody
