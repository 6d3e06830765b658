#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "ssacl/audio.hpp"

namespace ssacl {

/// The six artificial noise colors used for augmentation.
enum class NoiseColor { white, pink, brown, blue, violet, grey };

constexpr std::array<NoiseColor, 6> kAllNoiseColors = {
    NoiseColor::white, NoiseColor::pink,   NoiseColor::brown,
    NoiseColor::blue,  NoiseColor::violet, NoiseColor::grey};

const char* to_string(NoiseColor c);
NoiseColor noise_color_from_string(const std::string& s);

/// Power-spectral-density exponent: PSD(f) proportional to f^alpha.
/// white 0, pink -1, brown -2, blue +1, violet +2. Grey has no exponent
/// (inverse A-weighting shape) and is rejected here.
int psd_exponent(NoiseColor c);

/// Standard A-weighting curve in dB (0 dB at 1 kHz).
double a_weighting_db(double f_hz);

/// Unit-RMS colored noise, deterministic for a fixed seed. Synthesis shapes
/// a Gaussian spectrum by |H(f)| = f^(alpha/2) on a power-of-two grid and
/// truncates to n_samples; the DC bin is zeroed for every color. Grey noise
/// uses the inverse A-weighting magnitude, clamped at +20 dB.
Waveform generate_colored_noise(NoiseColor color, std::size_t n_samples, int sample_rate,
                                std::uint64_t seed);

}  // namespace ssacl
