#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "melody/eval.hpp"

using namespace melody;

namespace {

PitchContour contour(const std::vector<double>& f0s, double hop = 0.01) {
  PitchContour c;
  for (std::size_t i = 0; i < f0s.size(); ++i) c.push_back({hop * static_cast<double>(i), f0s[i], 0.0});
  return c;
}

PitchContour random_contour(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> cents(0, 4800);
  std::bernoulli_distribution voiced(0.7);
  std::vector<double> f(n);
  for (auto& v : f) v = voiced(rng) ? 55.0 * std::exp2(cents(rng) / 1200.0) : 0.0;
  return contour(f);
}

}  // namespace

TEST_CASE("identity scores perfectly") {
  auto ref = contour({220, 0, 230, 240, 0});
  auto m = evaluate(ref, ref);
  CHECK(m.voicing_recall == 1.0);
  CHECK(m.voicing_false_alarm == 0.0);
  CHECK(m.raw_pitch_accuracy == 1.0);
  CHECK(m.raw_chroma_accuracy == 1.0);
  CHECK(m.overall_accuracy == 1.0);
  CHECK(!m.grid_mismatch);
}

TEST_CASE("octave errors count for chroma only") {
  auto ref = contour({220, 0, 230, 240});
  auto est = contour({440, 0, 460, 480});
  auto m = evaluate(est, ref);
  CHECK(m.raw_pitch_accuracy == 0.0);
  CHECK(m.raw_chroma_accuracy == 1.0);
  CHECK(m.voicing_recall == 1.0);
}

TEST_CASE("four-frame worked example") {
  auto ref = contour({220, 220, 0, 330});
  auto est = contour({220, 233.1, 100, 330});
  auto m = evaluate(est, ref, 50.0);
  CHECK(m.voicing_recall == 1.0);
  CHECK(m.voicing_false_alarm == 1.0);
  CHECK(m.raw_pitch_accuracy == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.raw_chroma_accuracy == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  // Frames 0 and 3 are right; frame 1 misses the pitch and frame 2 the voicing.
  CHECK(m.overall_accuracy == 0.5);
}

TEST_CASE("tolerance edge and no unvoiced reference frames") {
  auto ref = contour({100, 100});
  auto est = contour({100 * std::exp2(49.9 / 1200), 100 * std::exp2(50.1 / 1200)});
  auto m = evaluate(est, ref);
  CHECK(m.raw_pitch_accuracy == 0.5);
  CHECK(m.voicing_false_alarm == 0.0);
  CHECK_THROWS(evaluate(est, {}));
}

TEST_CASE("nearest-frame alignment and grid mismatch") {
  auto ref = contour({200, 200, 200, 200});
  auto est = contour({200, 200}, 0.02);  // frames at 0 and 0.02
  auto m = evaluate(est, ref);
  CHECK(m.grid_mismatch);
  CHECK(m.raw_pitch_accuracy == 1.0);
  // Estimate frames beyond the reference are ignored.
  auto longer = contour({200, 200, 200, 200, 999, 999});
  auto m2 = evaluate(longer, ref);
  CHECK(m2.overall_accuracy == 1.0);
}

TEST_CASE("property: metrics in range, chroma at least pitch") {
  std::mt19937_64 rng(1000);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + rng() % 50;
    auto m = evaluate(random_contour(rng, n), random_contour(rng, n));
    for (double v : {m.voicing_recall, m.voicing_false_alarm, m.raw_pitch_accuracy, m.raw_chroma_accuracy,
                     m.overall_accuracy}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(m.raw_chroma_accuracy >= m.raw_pitch_accuracy);
  }
}

TEST_CASE("property: global transposition of both contours changes nothing") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> k(0.3, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    auto ref = random_contour(rng, 30);
    auto est = ref;
    std::uniform_real_distribution<double> wobble(-80, 80);
    for (auto& p : est)
      if (p.voiced()) p.f0 *= std::exp2(wobble(rng) / 1200.0);
    const auto base = evaluate(est, ref);
    const double c = k(rng);
    for (auto* side : {&ref, &est})
      for (auto& p : *side) p.f0 *= c;
    const auto moved = evaluate(est, ref);
    CHECK(moved.raw_pitch_accuracy == doctest::Approx(base.raw_pitch_accuracy));
    CHECK(moved.raw_chroma_accuracy == doctest::Approx(base.raw_chroma_accuracy));
    CHECK(moved.overall_accuracy == doctest::Approx(base.overall_accuracy));
    CHECK(moved.voicing_recall == base.voicing_recall);
  }
}

TEST_CASE("metrics JSON") {
  auto j = to_json(evaluate(contour({100}), contour({100})));
  for (const char* key : {"voicing_recall", "voicing_false_alarm", "raw_pitch_accuracy", "raw_chroma_accuracy",
                          "overall_accuracy"}) {
    CHECK(j.contains(key));
  }
}

TEST_CASE("contour TSV round trip") {
  auto c = contour({220.123, 0, 331.5});
  std::stringstream ss;
  write_contour(ss, c);
  const auto text = ss.str();
  CHECK(text.find("0.000000\t220.12\n") == 0);
  CHECK(text.find("0.010000\t0.00\n") != std::string::npos);
  auto back = read_contour(ss);
  REQUIRE(back.size() == 3);
  CHECK(back[1].f0 == 0.0);
  CHECK(back[2].f0 == doctest::Approx(331.5).epsilon(1e-6));

  auto path = std::filesystem::temp_directory_path() / "melody_eval_test.tsv";
  write_contour(path, c);
  CHECK(read_contour(path).size() == 3);
  std::filesystem::remove(path);
}

TEST_CASE("contour TSV errors name the source and line") {
  auto bad = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_contour(in, "x.tsv");
    } catch (const ContourFormatError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(bad("0.0\t100\n0.01\t-5\n").find("x.tsv:2") != std::string::npos);
  CHECK(bad("0.0 100 extra\n").find("x.tsv:1") != std::string::npos);
  CHECK(!bad("0.02\t100\n0.01\t100\n").empty());
  CHECK(!bad("0.0\tnan\n").empty());
  CHECK_THROWS_AS(read_contour(std::filesystem::path("/nonexistent/c.tsv")), ContourFormatError);
}
