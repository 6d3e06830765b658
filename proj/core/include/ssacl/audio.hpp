#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace ssacl {

/// Mono audio: samples in nominal [-1, 1] plus their sample rate.
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 0;

  std::size_t size() const { return samples.size(); }
  double seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Root-mean-square amplitude, accumulated in double.
double rms(const Waveform& w);

/// Loads a RIFF/WAVE file. 16-bit PCM and 32-bit IEEE float payloads are
/// accepted; multichannel audio is mixed down to mono by channel averaging.
/// Throws IoError for a missing file, FormatError for unsupported encodings
/// and for an empty data payload.
Waveform load_wav(const std::filesystem::path& path);

/// Writes a 32-bit float mono WAV file.
void save_wav(const Waveform& w, const std::filesystem::path& path);

/// Band-limited resampling (windowed-sinc, polyphase evaluation). Output
/// length is round(n * target_rate / source_rate).
Waveform resample(const Waveform& w, int target_rate);

/// Scales the waveform to unit RMS. Throws DegenerateSignalError on an
/// all-zero input.
Waveform normalize_energy(const Waveform& w);

/// Forces the waveform to `target_len` samples. When padding, the source is
/// placed at `offset` inside a zero buffer; when cropping, the window
/// [offset, offset + target_len) is extracted. Throws OutOfRangeError when
/// the offset does not fit.
Waveform pad_or_crop(const Waveform& w, std::size_t target_len, std::size_t offset);

}  // namespace ssacl
