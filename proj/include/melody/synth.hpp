#pragma once

#include "melody/audio_io.hpp"
#include "melody/tracking.hpp"

namespace melody {

enum class SynthMode { Sine, Harmonic };

SynthMode synth_mode_from_string(const std::string& name);

inline constexpr double kSynthFadeSeconds = 0.005;

// Renders a contour with a phase-continuous oscillator. Frequency is linearly
// interpolated between adjacent voiced frames; unvoiced stretches are silent
// with raised-cosine fades at the boundaries. The clip runs from 0 to one
// frame spacing past the last contour time.
AudioClip synthesize_contour(const PitchContour& contour, int sample_rate, SynthMode mode = SynthMode::Sine,
                             double amplitude = 0.5);

}  // namespace melody
