#pragma once

#include <array>
#include <span>
#include <vector>

namespace gaitmag {

/// One biquad: b0 b1 b2 / 1 a1 a2 (a0 normalized to one).
struct Biquad {
  double b0, b1, b2, a1, a2;
};

/// Elliptic low-pass for fs = 300 Hz with a 15 Hz passband edge: order 4 as
/// two second-order sections, 0.2 dB ripple and 40 dB stopband per pass,
/// gain normalized to exactly one at DC. Applied forward and backward the
/// ripple doubles to 0.4 dB and the stopband to 80 dB.
inline constexpr double kLowpassSampleRate = 300.0;
inline constexpr double kLowpassCutoff = 15.0;
inline constexpr std::array<Biquad, 2> kEllipticLowpass{{
    {0.012642817195080111, -0.0090823549235613359, 0.012642817195080111, -1.6450268747338035,
     0.69526666971533813},
    {1.0, -1.6629815231198821, 1.0, -1.7871631977400564, 0.89585799970537361},
}};

/// Causal cascade, transposed direct form II, zero initial state.
std::vector<double> sos_filter(std::span<const Biquad> sections, std::span<const double> x);

/// Zero-phase forward-backward filtering. The signal is extended by odd
/// reflection on both ends and each pass starts from the steady state of its
/// first input sample, so constant signals pass through unchanged.
std::vector<double> sos_filtfilt(std::span<const Biquad> sections, std::span<const double> x);

/// |H(e^{jw})| of a single causal pass at frequency `hz`.
double sos_gain(std::span<const Biquad> sections, double hz, double fs);

}  // namespace gaitmag
