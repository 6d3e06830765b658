#include "ssacl/noise.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "ssacl/errors.hpp"
#include "ssacl/fft.hpp"
#include "ssacl/rng.hpp"

namespace ssacl {

const char* to_string(NoiseColor c) {
  switch (c) {
    case NoiseColor::white: return "white";
    case NoiseColor::pink: return "pink";
    case NoiseColor::brown: return "brown";
    case NoiseColor::blue: return "blue";
    case NoiseColor::violet: return "violet";
    case NoiseColor::grey: return "grey";
  }
  return "?";
}

NoiseColor noise_color_from_string(const std::string& s) {
  for (const NoiseColor c : kAllNoiseColors) {
    if (s == to_string(c)) return c;
  }
  throw ConfigError("unknown noise color: " + s);
}

int psd_exponent(NoiseColor c) {
  switch (c) {
    case NoiseColor::white: return 0;
    case NoiseColor::pink: return -1;
    case NoiseColor::brown: return -2;
    case NoiseColor::blue: return 1;
    case NoiseColor::violet: return 2;
    case NoiseColor::grey: break;
  }
  throw ConfigError("psd_exponent: grey noise has no power-law exponent");
}

double a_weighting_db(double f_hz) {
  const double f2 = f_hz * f_hz;
  const double r = (12194.0 * 12194.0 * f2 * f2) /
                   ((f2 + 20.6 * 20.6) * std::sqrt((f2 + 107.7 * 107.7) * (f2 + 737.9 * 737.9)) *
                    (f2 + 12194.0 * 12194.0));
  return 20.0 * std::log10(r) + 2.0;
}

Waveform generate_colored_noise(NoiseColor color, std::size_t n_samples, int sample_rate,
                                std::uint64_t seed) {
  if (n_samples < 2) throw ConfigError("generate_colored_noise: need n_samples >= 2");
  if (sample_rate <= 0) throw ConfigError("generate_colored_noise: sample_rate must be positive");

  const std::size_t n_fft = next_pow2(n_samples);
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(n_fft);

  Rng rng(seed);
  std::vector<std::complex<double>> spec(n_fft, {0.0, 0.0});

  const bool grey = color == NoiseColor::grey;
  const double half_alpha = grey ? 0.0 : 0.5 * psd_exponent(color);
  constexpr double kGreyClampMag = 10.0;  // +20 dB

  // Hermitian spectrum with Gaussian coefficients: the inverse transform is
  // real white noise shaped by the magnitude law. DC stays zero (keeps the
  // negative exponents finite and the mean at zero).
  for (std::size_t k = 1; k < n_fft / 2; ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    double m;
    if (grey) {
      m = std::min(std::pow(10.0, -a_weighting_db(f) / 20.0), kGreyClampMag);
    } else {
      m = std::pow(f, half_alpha);
    }
    const std::complex<double> g(rng.gaussian(), rng.gaussian());
    spec[k] = g * m;
    spec[n_fft - k] = std::conj(spec[k]);
  }
  {
    // Nyquist bin must be real.
    const double f = static_cast<double>(n_fft / 2) * bin_hz;
    const double m = grey ? std::min(std::pow(10.0, -a_weighting_db(f) / 20.0), kGreyClampMag)
                          : std::pow(f, half_alpha);
    spec[n_fft / 2] = std::complex<double>(rng.gaussian() * m, 0.0);
  }

  fft_inplace(spec, true);

  Waveform out;
  out.sample_rate = sample_rate;
  out.samples.resize(n_samples);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double v = spec[i].real();
    out.samples[i] = static_cast<float>(v);
    acc += v * v;
  }
  const double r = std::sqrt(acc / static_cast<double>(n_samples));
  if (r == 0.0) throw DegenerateSignalError("generate_colored_noise: degenerate spectrum");
  const double g = 1.0 / r;
  for (auto& s : out.samples) s = static_cast<float>(s * g);
  return out;
}

}  // namespace ssacl
