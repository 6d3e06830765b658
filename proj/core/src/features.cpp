#include "ssacl/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include <Eigen/Dense>

#include "ssacl/errors.hpp"
#include "ssacl/fft.hpp"
#include "ssacl/parallel.hpp"
#include "ssacl/rng.hpp"

namespace ssacl {

namespace {

constexpr std::array<char, 8> kCacheMagic = {'S', 'S', 'A', 'C', 'L', 'F', '1', '\0'};

/// Index reflection without edge repetition, generalized to any length >= 1.
std::size_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  std::int64_t j = i % period;
  if (j < 0) j += period;
  if (j >= n) j = period - j;
  return static_cast<std::size_t>(j);
}

}  // namespace

void FeatureConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("features: sample_rate must be positive");
  if (nfft < 2 || !is_pow2(static_cast<std::size_t>(nfft)))
    throw ConfigError("features: nfft must be a power of two >= 2, got " + std::to_string(nfft));
  if (hop <= 0 || hop > nfft) throw ConfigError("features: hop must be in (0, nfft]");
  if (n_mels < 1) throw ConfigError("features: n_mels must be >= 1");
  if (!(fmin < fmax) || fmax > sample_rate / 2.0)
    throw ConfigError("features: need fmin < fmax <= sample_rate/2");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Spectrogram stft_magnitude(const Waveform& w, const FeatureConfig& cfg) {
  cfg.validate();
  if (w.sample_rate != cfg.sample_rate) {
    throw ConfigError("stft_magnitude: waveform rate " + std::to_string(w.sample_rate) +
                      " does not match config rate " + std::to_string(cfg.sample_rate));
  }
  const std::int64_t n = static_cast<std::int64_t>(w.samples.size());
  if (n == 0) throw ConfigError("stft_magnitude: empty waveform");

  const int nfft = cfg.nfft;
  const int hop = cfg.hop;
  const int pad = nfft / 2;
  const int n_frames = static_cast<int>((n + hop - 1) / hop);
  const int n_bins = nfft / 2 + 1;

  // Periodic Hann window.
  std::vector<double> window(static_cast<std::size_t>(nfft));
  for (int i = 0; i < nfft; ++i) {
    window[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / nfft);
  }

  Spectrogram out;
  out.n_bins = n_bins;
  out.n_frames = n_frames;
  out.mag.assign(static_cast<std::size_t>(n_bins) * n_frames, 0.0f);

  parallel_for(static_cast<std::size_t>(n_frames), [&](std::size_t t) {
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(nfft));
    const std::int64_t start = static_cast<std::int64_t>(t) * hop - pad;
    for (int i = 0; i < nfft; ++i) {
      const double s = w.samples[reflect_index(start + i, n)];
      buf[static_cast<std::size_t>(i)] = std::complex<double>(s * window[static_cast<std::size_t>(i)], 0.0);
    }
    fft_inplace(buf, false);
    for (int k = 0; k < n_bins; ++k) {
      out.mag[static_cast<std::size_t>(k) * n_frames + t] = static_cast<float>(std::abs(buf[static_cast<std::size_t>(k)]));
    }
  });
  return out;
}

MelFilterbank build_mel_filterbank(const FeatureConfig& cfg) {
  cfg.validate();
  const int n_bins = cfg.nfft / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.fmin);
  const double mel_hi = hz_to_mel(cfg.fmax);

  // n_mels + 2 points: edges shared between neighboring triangles.
  std::vector<double> centers_hz(static_cast<std::size_t>(cfg.n_mels) + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1);
    centers_hz[static_cast<std::size_t>(i)] = mel_to_hz(mel);
  }

  MelFilterbank fb;
  fb.n_mels = cfg.n_mels;
  fb.n_bins = n_bins;
  fb.weights.assign(static_cast<std::size_t>(cfg.n_mels) * n_bins, 0.0f);

  const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.nfft;
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = centers_hz[static_cast<std::size_t>(m)];
    const double mid = centers_hz[static_cast<std::size_t>(m) + 1];
    const double hi = centers_hz[static_cast<std::size_t>(m) + 2];
    bool any_positive = false;
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double v = 0.0;
      if (f > lo && f < hi) {
        v = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      }
      if (v > 0.0) any_positive = true;
      fb.weights[static_cast<std::size_t>(m) * n_bins + k] = static_cast<float>(v);
    }
    if (!any_positive) {
      throw ConfigError("build_mel_filterbank: filter " + std::to_string(m) +
                        " spans no FFT bin; increase nfft or widen [fmin, fmax]");
    }
  }
  return fb;
}

MelSpectrogram log_mel(const Waveform& w, const FeatureConfig& cfg) {
  return log_mel(w, cfg, build_mel_filterbank(cfg));
}

MelSpectrogram log_mel(const Waveform& w, const FeatureConfig& cfg, const MelFilterbank& fb) {
  const Spectrogram spec = stft_magnitude(w, cfg);

  using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const MatF> mag(spec.mag.data(), spec.n_bins, spec.n_frames);
  Eigen::Map<const MatF> weights(fb.weights.data(), fb.n_mels, fb.n_bins);

  MatF power = mag.array().square().matrix();
  MatF mel_power = weights * power;

  MelSpectrogram out;
  out.n_mels = fb.n_mels;
  out.n_frames = spec.n_frames;
  out.frame_rate = static_cast<double>(cfg.sample_rate) / cfg.hop;
  out.values.resize(static_cast<std::size_t>(fb.n_mels) * spec.n_frames);

  constexpr float kEps = 1e-10f;
  float peak = -std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const float db = 10.0f * std::log10(mel_power.data()[i] + kEps);
    out.values[i] = db;
    peak = std::max(peak, db);
  }
  const float floor = peak + static_cast<float>(cfg.db_floor);
  for (auto& v : out.values) v = std::max(v, floor);
  return out;
}

void write_feature_cache(const MelSpectrogram& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_feature_cache: cannot open " + path.string());
  os.write(kCacheMagic.data(), kCacheMagic.size());
  const std::uint32_t mels = static_cast<std::uint32_t>(m.n_mels);
  const std::uint32_t frames = static_cast<std::uint32_t>(m.n_frames);
  std::array<unsigned char, 8> dims{};
  for (int i = 0; i < 4; ++i) dims[static_cast<std::size_t>(i)] = static_cast<unsigned char>(mels >> (8 * i));
  for (int i = 0; i < 4; ++i) dims[static_cast<std::size_t>(4 + i)] = static_cast<unsigned char>(frames >> (8 * i));
  os.write(reinterpret_cast<const char*>(dims.data()), 8);
  os.write(reinterpret_cast<const char*>(m.values.data()),
           static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!os) throw IoError("write_feature_cache: write failed: " + path.string());
}

MelSpectrogram read_feature_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_feature_cache: cannot open " + path.string());
  std::array<char, 8> magic{};
  std::array<unsigned char, 8> dims{};
  in.read(magic.data(), 8);
  in.read(reinterpret_cast<char*>(dims.data()), 8);
  if (!in || std::memcmp(magic.data(), kCacheMagic.data(), 8) != 0) {
    throw FormatError("read_feature_cache: bad magic in " + path.string());
  }
  std::uint32_t mels = 0, frames = 0;
  for (int i = 0; i < 4; ++i) mels |= static_cast<std::uint32_t>(dims[static_cast<std::size_t>(i)]) << (8 * i);
  for (int i = 0; i < 4; ++i) frames |= static_cast<std::uint32_t>(dims[static_cast<std::size_t>(4 + i)]) << (8 * i);

  MelSpectrogram m;
  m.n_mels = static_cast<int>(mels);
  m.n_frames = static_cast<int>(frames);
  m.values.resize(static_cast<std::size_t>(mels) * frames);
  in.read(reinterpret_cast<char*>(m.values.data()), static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!in) throw FormatError("read_feature_cache: truncated payload in " + path.string());
  return m;
}

}  // namespace ssacl
