#include "ssacl/audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ssacl/errors.hpp"
#include "ssacl/rng.hpp"

namespace ssacl {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatIeeeFloat = 3;

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void write_u32le(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

void write_u16le(std::ostream& os, std::uint16_t v) {
  const std::array<char, 2> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  os.write(b.data(), 2);
}

}  // namespace

double rms(const Waveform& w) {
  double acc = 0.0;
  for (const float s : w.samples) acc += static_cast<double>(s) * static_cast<double>(s);
  return w.samples.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(w.samples.size()));
}

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_wav: cannot open file: " + path.string());

  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("load_wav: not a RIFF/WAVE file: " + path.string());
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t chunk_size = read_u32le(hdr + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      throw FormatError("load_wav: truncated chunk in " + path.string());
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError("load_wav: short fmt chunk in " + path.string());
      const unsigned char* f = bytes.data() + body;
      format = read_u16le(f);
      channels = read_u16le(f + 2);
      sample_rate = read_u32le(f + 4);
      bits = read_u16le(f + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) {
    throw FormatError("load_wav: missing fmt or data chunk: " + path.string());
  }
  if (channels == 0 || sample_rate == 0) {
    throw FormatError("load_wav: invalid fmt chunk: " + path.string());
  }

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatIeeeFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw FormatError("load_wav: unsupported encoding (format " + std::to_string(format) + ", " +
                      std::to_string(bits) + "-bit) in " + path.string() +
                      "; only 16-bit PCM and 32-bit float are supported");
  }

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t frame_size = bytes_per_sample * channels;
  const std::size_t n_frames = data_size / frame_size;
  if (n_frames == 0) throw FormatError("load_wav: zero-length data payload: " + path.string());

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  w.samples.resize(n_frames);
  const double inv_ch = 1.0 / channels;
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * frame_size + c * bytes_per_sample;
      if (pcm16) {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        acc += static_cast<double>(v);
      }
    }
    w.samples[i] = static_cast<float>(acc * inv_ch);
  }
  return w;
}

void save_wav(const Waveform& w, const std::filesystem::path& path) {
  if (w.sample_rate <= 0) throw ConfigError("save_wav: sample_rate must be positive");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_wav: cannot open for writing: " + path.string());

  const std::uint32_t data_size = static_cast<std::uint32_t>(w.samples.size() * 4);
  os.write("RIFF", 4);
  write_u32le(os, 4 + (8 + 16) + (8 + 4) + (8 + data_size));
  os.write("WAVE", 4);

  os.write("fmt ", 4);
  write_u32le(os, 16);
  write_u16le(os, kFormatIeeeFloat);
  write_u16le(os, 1);  // mono
  write_u32le(os, static_cast<std::uint32_t>(w.sample_rate));
  write_u32le(os, static_cast<std::uint32_t>(w.sample_rate) * 4);
  write_u16le(os, 4);
  write_u16le(os, 32);

  // Non-PCM formats carry a fact chunk with the frame count.
  os.write("fact", 4);
  write_u32le(os, 4);
  write_u32le(os, static_cast<std::uint32_t>(w.samples.size()));

  os.write("data", 4);
  write_u32le(os, data_size);
  os.write(reinterpret_cast<const char*>(w.samples.data()), data_size);
  if (!os) throw IoError("save_wav: write failed: " + path.string());
}

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw ConfigError("resample: target_rate must be positive");
  if (w.sample_rate <= 0) throw ConfigError("resample: source sample_rate must be positive");
  if (target_rate == w.sample_rate) return w;

  const std::size_t n_in = w.samples.size();
  const std::size_t n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in) * target_rate / w.sample_rate));

  // Windowed-sinc interpolation. When downsampling the cutoff shrinks to the
  // output Nyquist; taps scale up to keep the transition band usable.
  const double ratio = static_cast<double>(target_rate) / w.sample_rate;
  const double cutoff = 0.97 * std::min(1.0, ratio);
  const int half_taps = ratio >= 1.0 ? 32 : static_cast<int>(std::ceil(32.0 / ratio));

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);

  const double step = static_cast<double>(w.sample_rate) / target_rate;
  for (std::size_t n = 0; n < n_out; ++n) {
    const double t = static_cast<double>(n) * step;
    const auto k0 = static_cast<std::int64_t>(std::floor(t)) - half_taps + 1;
    const auto k1 = static_cast<std::int64_t>(std::floor(t)) + half_taps;
    double acc = 0.0;
    for (std::int64_t k = k0; k <= k1; ++k) {
      if (k < 0 || k >= static_cast<std::int64_t>(n_in)) continue;
      const double x = t - static_cast<double>(k);
      const double px = kPi * cutoff * x;
      const double sinc = px == 0.0 ? 1.0 : std::sin(px) / px;
      // Hann window over the tap span.
      const double win = 0.5 + 0.5 * std::cos(kPi * x / half_taps);
      acc += static_cast<double>(w.samples[static_cast<std::size_t>(k)]) * cutoff * sinc * win;
    }
    out.samples[n] = static_cast<float>(acc);
  }
  return out;
}

Waveform normalize_energy(const Waveform& w) {
  const double r = rms(w);
  if (r == 0.0) throw DegenerateSignalError("normalize_energy: all-zero signal");
  Waveform out = w;
  const double g = 1.0 / r;
  for (auto& s : out.samples) s = static_cast<float>(s * g);
  return out;
}

Waveform pad_or_crop(const Waveform& w, std::size_t target_len, std::size_t offset) {
  const std::size_t n = w.samples.size();
  Waveform out;
  out.sample_rate = w.sample_rate;
  if (target_len < n) {
    if (offset + target_len > n) {
      throw OutOfRangeError("pad_or_crop: crop window [" + std::to_string(offset) + ", " +
                            std::to_string(offset + target_len) + ") exceeds length " + std::to_string(n));
    }
    out.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                       w.samples.begin() + static_cast<std::ptrdiff_t>(offset + target_len));
  } else {
    if (offset + n > target_len) {
      throw OutOfRangeError("pad_or_crop: source of length " + std::to_string(n) + " at offset " +
                            std::to_string(offset) + " exceeds target " + std::to_string(target_len));
    }
    out.samples.assign(target_len, 0.0f);
    std::copy(w.samples.begin(), w.samples.end(), out.samples.begin() + static_cast<std::ptrdiff_t>(offset));
  }
  return out;
}

}  // namespace ssacl
