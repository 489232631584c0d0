#include <cmath>

#include "doctest.h"
#include "melody/eval.hpp"
#include "melody/pipeline.hpp"

using namespace melody;

namespace {

std::size_t voiced_count(const PitchContour& c) {
  std::size_t n = 0;
  for (const auto& p : c) n += p.voiced();
  return n;
}

bool same(const PitchContour& a, const PitchContour& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].time != b[i].time || a[i].f0 != b[i].f0 || a[i].salience != b[i].salience) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("silence is unvoiced everywhere") {
  auto item = synthetic::silence(1.0, 16000);
  auto r = analyze(item.clip, AnalysisConfig{});
  REQUIRE(!r.contour.empty());
  CHECK(voiced_count(r.contour) == 0);
  CHECK(r.contour.size() == r.layout.count);
}

TEST_CASE("vibrato tone alone") {
  auto item = synthetic::vibrato_tone();
  auto r = analyze(item.clip, AnalysisConfig{});
  REQUIRE(r.contour.size() == item.truth.size());
  auto m = evaluate(r.contour, item.truth);
  CHECK(m.raw_pitch_accuracy >= 0.98);
  CHECK(!m.grid_mismatch);
  CHECK(r.diagnostics.candidates.size() == r.contour.size());
}

TEST_CASE("vibrato tone with drone, dual mode") {
  auto item = synthetic::vibrato_with_drone();
  AnalysisConfig cfg;
  cfg.mode = TrackingMode::Dual;
  auto r = analyze(item.clip, cfg);
  CHECK(evaluate(r.contour, item.truth).raw_pitch_accuracy >= 0.90);
  REQUIRE(r.diagnostics.dual.has_value());
  const auto& kept = r.diagnostics.selected == 0 ? r.diagnostics.dual->first : r.diagnostics.dual->second;
  CHECK(same(kept, r.raw_contour));
}

TEST_CASE("property: identical input gives bit-identical output") {
  auto item = synthetic::vibrato_with_drone(1.0, 22050);
  for (auto mode : {TrackingMode::Single, TrackingMode::Dual}) {
    AnalysisConfig cfg;
    cfg.mode = mode;
    CHECK(same(analyze(item.clip, cfg).contour, analyze(item.clip, cfg).contour));
  }
}

TEST_CASE("property: enabling voicing only removes voiced frames") {
  for (std::uint64_t seed : {1u, 2u}) {
    auto item = synthetic::voicing_scene(seed, 6.0);
    AnalysisConfig off;
    AnalysisConfig on = off;
    on.voicing.enabled = true;
    auto a = analyze(item.clip, off);
    auto b = analyze(item.clip, on);
    REQUIRE(a.contour.size() == b.contour.size());
    std::size_t dropped = 0;
    for (std::size_t t = 0; t < a.contour.size(); ++t) {
      if (b.contour[t].voiced()) CHECK(a.contour[t].voiced());
      dropped += a.contour[t].voiced() && !b.contour[t].voiced();
    }
    CHECK(dropped > 0);
  }
}

TEST_CASE("lean runs keep the contour and drop diagnostics") {
  auto item = synthetic::vibrato_tone(0.5, 16000);
  AnalysisConfig cfg;
  cfg.mode = TrackingMode::Dual;
  auto full = analyze(item.clip, cfg);
  auto lean = analyze(item.clip, cfg, {.lean = true});
  CHECK(same(full.contour, lean.contour));
  CHECK(lean.diagnostics.candidates.empty());
  CHECK(!lean.diagnostics.dual.has_value());
}

TEST_CASE("errors carry their stage") {
  auto item = synthetic::vibrato_tone(0.3, 16000);
  auto stage_of = [&](const AnalysisConfig& cfg) {
    try {
      analyze(item.clip, cfg);
    } catch (const PipelineError& e) {
      return e.stage();
    }
    return std::string("<none>");
  };
  AnalysisConfig bad;
  bad.tracking.lambda = -1;
  CHECK(stage_of(bad) == "config");

  AnalysisConfig missing;
  missing.voicing.enabled = true;
  missing.voicing.model_path = "/nonexistent/model.json";
  CHECK(stage_of(missing) == "voicing");
}

TEST_CASE("a trained model round-trips through the voicing stage") {
  auto data = labelled_features({synthetic::voicing_scene(40, 6.0)}, AnalysisConfig{});
  REQUIRE(data.features.size() == data.vocal.size());
  auto model = std::make_shared<const VoicingModel>(train_voicing_model(data, {.gmm = {.components = 2}}));
  auto item = synthetic::voicing_scene(41, 6.0);
  AnalysisConfig cfg;
  cfg.voicing.enabled = true;
  auto r = analyze(item.clip, cfg, {.voicing_model = model});
  CHECK(r.labels.size() == r.contour.size());
}
