#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ssacl/audio.hpp"
#include "ssacl/noise.hpp"
#include "ssacl/rng.hpp"

namespace ssacl {

/// Mixing parameters. Source SNR is drawn per item from
/// [source_snr_min_db, source_snr_max_db]; the artificial noise is kept at
/// least noise_snr_min_db below the source mixture.
struct MixParams {
  double source_snr_min_db = -5.0;
  double source_snr_max_db = 20.0;
  double noise_snr_min_db = 6.0;
  double noise_snr_max_db = 30.0;
  std::size_t target_len = 110250;  // 5 s at 22,050 Hz

  void validate() const;
};

/// Per-clip record of every random choice made while augmenting, sufficient
/// to reconstruct the mixture exactly.
struct MixProvenance {
  std::size_t signal_offset = 0;
  bool mixing_applied = false;      // false in offset-only (no-mixing) mode
  std::size_t interferer_index = 0; // into the other half
  std::size_t interferer_offset = 0;
  double source_snr_db = 0.0;
  double source_gain = 0.0;
  NoiseColor noise_color = NoiseColor::white;
  std::uint64_t noise_seed = 0;
  double noise_snr_db = 0.0;
  double noise_gain = 0.0;
  double normalization_gain = 1.0;
};

/// The two batch halves and their augmented counterparts.
struct MixedBatch {
  std::vector<Waveform> half_a, half_b;
  std::vector<Waveform> half_a_aug, half_b_aug;
  std::vector<MixProvenance> provenance_a, provenance_b;
};

/// signal + g * interferer with g chosen so the component RMS ratio equals
/// snr_db exactly. Lengths and rates must match; a zero-RMS interferer (or
/// signal) raises DegenerateSignalError.
Waveform mix_at_snr(const Waveform& signal, const Waveform& interferer, double snr_db);

/// Places a short clip at a uniformly random offset inside a zero buffer of
/// target_len, or crops a uniformly random window from a longer clip.
/// `offset_out`, when given, receives the chosen placement.
Waveform random_offset(const Waveform& w, std::size_t target_len, Rng& rng,
                       std::size_t* offset_out = nullptr);

/// The batch-split mixing strategy: concatenate labeled and unlabeled clips,
/// shuffle, split in half, and augment each half against the other
/// (offset both sides, mix at a random source SNR, add colored noise at a
/// random noise SNR, re-normalize to unit RMS).
MixedBatch batch_split_mix(const std::vector<Waveform>& labeled,
                           const std::vector<Waveform>& unlabeled, const MixParams& params,
                           Rng& rng);

/// Ablation variant: same shuffle/split, but augmentation is the random
/// offset alone (no interferer, no noise). Output is still unit-RMS.
MixedBatch batch_split_offset_only(const std::vector<Waveform>& labeled,
                                   const std::vector<Waveform>& unlabeled,
                                   const MixParams& params, Rng& rng);

/// One JSON object per augmented clip (offsets, snr_db, noise_color,
/// noise_snr_db, ...), half_a first.
void write_provenance_jsonl(const MixedBatch& batch, std::ostream& os);

}  // namespace ssacl
