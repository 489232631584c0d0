#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "melody/tracking.hpp"

namespace melody {

struct MelodyMetrics {
  double voicing_recall = 0.0;
  double voicing_false_alarm = 0.0;
  double raw_pitch_accuracy = 0.0;
  double raw_chroma_accuracy = 0.0;
  double overall_accuracy = 0.0;
  // Set when the estimate's frame times do not line up with the reference's.
  bool grid_mismatch = false;
};

// Scores `estimate` on the reference frame grid. Each reference frame takes
// the nearest estimate frame; estimate frames past the reference are ignored.
MelodyMetrics evaluate(const PitchContour& estimate, const PitchContour& reference, double tolerance_cents = 50.0);

nlohmann::json to_json(const MelodyMetrics& metrics);

class ContourFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Interchange format: one "time<TAB>f0" line per frame, f0 0.00 for unvoiced.
PitchContour read_contour(std::istream& in, const std::string& source = "<stream>");
PitchContour read_contour(const std::filesystem::path& path);
void write_contour(std::ostream& out, const PitchContour& contour);
void write_contour(const std::filesystem::path& path, const PitchContour& contour);

}  // namespace melody
