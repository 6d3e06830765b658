#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "ssacl/audio.hpp"

namespace ssacl {

/// Log-mel front-end parameters. Defaults give (128, 480) features for a
/// 5-second clip at 22,050 Hz.
struct FeatureConfig {
  int nfft = 1024;
  int hop = 230;
  int n_mels = 128;
  double fmin = 50.0;
  double fmax = 10000.0;
  int sample_rate = 22050;
  double db_floor = -80.0;  // clamp, relative to the per-clip maximum

  void validate() const;
};

/// One-sided STFT magnitudes, (nfft/2 + 1) x n_frames, row-major.
struct Spectrogram {
  int n_bins = 0;
  int n_frames = 0;
  std::vector<float> mag;

  float at(int bin, int frame) const { return mag[static_cast<std::size_t>(bin) * n_frames + frame]; }
};

/// Triangular mel filters, n_mels x (nfft/2 + 1), row-major.
struct MelFilterbank {
  int n_mels = 0;
  int n_bins = 0;
  std::vector<float> weights;

  float at(int mel, int bin) const { return weights[static_cast<std::size_t>(mel) * n_bins + bin]; }
};

/// dB-scale mel spectrogram, n_mels x n_frames, row-major.
struct MelSpectrogram {
  int n_mels = 0;
  int n_frames = 0;
  std::vector<float> values;
  double frame_rate = 0.0;

  float at(int mel, int frame) const { return values[static_cast<std::size_t>(mel) * n_frames + frame]; }
};

/// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Centered STFT: the clip is reflect-padded by nfft/2 on both ends, framed
/// with hop `cfg.hop`, Hann-windowed. n_frames = ceil(len / hop). Throws
/// ConfigError on a sample-rate mismatch.
Spectrogram stft_magnitude(const Waveform& w, const FeatureConfig& cfg);

/// 128 (or cfg.n_mels) triangular filters with centers equally spaced on the
/// mel scale between fmin and fmax; peak-normalized to height 1.
MelFilterbank build_mel_filterbank(const FeatureConfig& cfg);

/// Full front end: power mel spectrogram in dB (10*log10(power + 1e-10)),
/// clamped below at per-clip max + db_floor.
MelSpectrogram log_mel(const Waveform& w, const FeatureConfig& cfg);

/// Same, with a prebuilt filterbank (shared read-only across workers).
MelSpectrogram log_mel(const Waveform& w, const FeatureConfig& cfg, const MelFilterbank& fb);

/// Feature-cache files: 16-byte header (magic "SSACLF1\0", u32 n_mels,
/// u32 n_frames, little-endian) followed by row-major 32-bit floats.
void write_feature_cache(const MelSpectrogram& m, const std::filesystem::path& path);
MelSpectrogram read_feature_cache(const std::filesystem::path& path);

}  // namespace ssacl
