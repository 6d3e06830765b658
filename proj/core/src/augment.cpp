#include "ssacl/augment.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "ssacl/errors.hpp"

namespace ssacl {

namespace {

Waveform mix_at_snr_impl(const Waveform& signal, const Waveform& interferer, double snr_db,
                         double* gain_out) {
  if (signal.samples.size() != interferer.samples.size()) {
    throw ConfigError("mix_at_snr: length mismatch (" + std::to_string(signal.samples.size()) +
                      " vs " + std::to_string(interferer.samples.size()) + ")");
  }
  if (signal.sample_rate != interferer.sample_rate) {
    throw ConfigError("mix_at_snr: sample-rate mismatch");
  }
  const double rs = rms(signal);
  const double ri = rms(interferer);
  if (ri == 0.0) throw DegenerateSignalError("mix_at_snr: interferer has zero RMS");
  if (rs == 0.0) throw DegenerateSignalError("mix_at_snr: signal has zero RMS");

  const double g = (rs / ri) * std::pow(10.0, -snr_db / 20.0);
  if (gain_out != nullptr) *gain_out = g;

  Waveform out;
  out.sample_rate = signal.sample_rate;
  out.samples.resize(signal.samples.size());
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] = static_cast<float>(static_cast<double>(signal.samples[i]) +
                                       g * static_cast<double>(interferer.samples[i]));
  }
  return out;
}

/// Random placement that avoids an all-zero crop window: redraw a few times,
/// then fall back to a window containing the loudest sample. Padding cannot
/// lose content, so the fallback only triggers when cropping.
Waveform placed_nonzero(const Waveform& w, std::size_t target_len, Rng& rng,
                        std::size_t* offset_out) {
  Waveform out = random_offset(w, target_len, rng, offset_out);
  if (w.samples.size() <= target_len) return out;
  for (int attempt = 0; attempt < 8 && rms(out) == 0.0; ++attempt) {
    out = random_offset(w, target_len, rng, offset_out);
  }
  if (rms(out) != 0.0) return out;
  std::size_t peak = 0;
  for (std::size_t i = 1; i < w.samples.size(); ++i) {
    if (std::fabs(w.samples[i]) > std::fabs(w.samples[peak])) peak = i;
  }
  const std::size_t max_off = w.samples.size() - target_len;
  const std::size_t off = std::min(peak >= target_len / 2 ? peak - target_len / 2 : 0, max_off);
  if (offset_out != nullptr) *offset_out = off;
  return pad_or_crop(w, target_len, off);
}

struct SplitHalves {
  std::vector<Waveform> a, b;
};

SplitHalves shuffle_and_split(const std::vector<Waveform>& labeled,
                              const std::vector<Waveform>& unlabeled, Rng& rng) {
  const std::size_t total = labeled.size() + unlabeled.size();
  if (total < 2) throw ConfigError("batch_split_mix: need at least 2 clips, got " + std::to_string(total));

  std::vector<const Waveform*> pool;
  pool.reserve(total);
  for (const auto& w : labeled) pool.push_back(&w);
  for (const auto& w : unlabeled) pool.push_back(&w);
  rng.shuffle(pool);

  SplitHalves halves;
  const std::size_t n_a = (total + 1) / 2;
  halves.a.reserve(n_a);
  halves.b.reserve(total - n_a);
  for (std::size_t i = 0; i < total; ++i) {
    (i < n_a ? halves.a : halves.b).push_back(*pool[i]);
  }
  return halves;
}

Waveform finalize_unit_rms(Waveform w, double* norm_gain) {
  const double r = rms(w);
  if (r == 0.0) throw DegenerateSignalError("augment: all-zero clip after augmentation");
  const double g = 1.0 / r;
  for (auto& s : w.samples) s = static_cast<float>(s * g);
  if (norm_gain != nullptr) *norm_gain = g;
  return w;
}

/// Augments `own[i]` against `other[i mod |other|]`. Draw order per item:
/// signal offset, interferer offset, source SNR, noise color, noise seed,
/// noise SNR.
void augment_half(const std::vector<Waveform>& own, const std::vector<Waveform>& other,
                  const MixParams& params, Rng& rng, std::vector<Waveform>& aug_out,
                  std::vector<MixProvenance>& prov_out) {
  aug_out.reserve(own.size());
  prov_out.reserve(own.size());
  for (std::size_t i = 0; i < own.size(); ++i) {
    MixProvenance prov;
    prov.mixing_applied = true;

    const Waveform placed_signal = placed_nonzero(own[i], params.target_len, rng, &prov.signal_offset);

    prov.interferer_index = other.empty() ? 0 : i % other.size();
    const Waveform& interferer = other.empty() ? own[i] : other[prov.interferer_index];
    const Waveform placed_intf =
        placed_nonzero(interferer, params.target_len, rng, &prov.interferer_offset);

    prov.source_snr_db = rng.uniform(params.source_snr_min_db, params.source_snr_max_db);
    Waveform mixed = mix_at_snr_impl(placed_signal, placed_intf, prov.source_snr_db, &prov.source_gain);

    prov.noise_color = kAllNoiseColors[static_cast<std::size_t>(rng.uniform_int(0, 5))];
    prov.noise_seed = rng.next_u64();
    prov.noise_snr_db = rng.uniform(params.noise_snr_min_db, params.noise_snr_max_db);
    const Waveform noise =
        generate_colored_noise(prov.noise_color, params.target_len, own[i].sample_rate, prov.noise_seed);
    mixed = mix_at_snr_impl(mixed, noise, prov.noise_snr_db, &prov.noise_gain);

    aug_out.push_back(finalize_unit_rms(std::move(mixed), &prov.normalization_gain));
    prov_out.push_back(prov);
  }
}

}  // namespace

void MixParams::validate() const {
  if (source_snr_min_db > source_snr_max_db)
    throw ConfigError("MixParams: source SNR range is inverted");
  if (!(noise_snr_min_db < noise_snr_max_db))
    throw ConfigError("MixParams: noise SNR range is empty or inverted");
  if (target_len == 0) throw ConfigError("MixParams: target_len must be positive");
}

Waveform mix_at_snr(const Waveform& signal, const Waveform& interferer, double snr_db) {
  return mix_at_snr_impl(signal, interferer, snr_db, nullptr);
}

Waveform random_offset(const Waveform& w, std::size_t target_len, Rng& rng,
                       std::size_t* offset_out) {
  const std::size_t n = w.samples.size();
  std::size_t offset;
  if (n <= target_len) {
    offset = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(target_len - n)));
  } else {
    offset = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n - target_len)));
  }
  if (offset_out != nullptr) *offset_out = offset;
  return pad_or_crop(w, target_len, offset);
}

MixedBatch batch_split_mix(const std::vector<Waveform>& labeled,
                           const std::vector<Waveform>& unlabeled, const MixParams& params,
                           Rng& rng) {
  params.validate();
  SplitHalves halves = shuffle_and_split(labeled, unlabeled, rng);

  MixedBatch batch;
  batch.half_a = std::move(halves.a);
  batch.half_b = std::move(halves.b);
  augment_half(batch.half_a, batch.half_b, params, rng, batch.half_a_aug, batch.provenance_a);
  augment_half(batch.half_b, batch.half_a, params, rng, batch.half_b_aug, batch.provenance_b);
  return batch;
}

MixedBatch batch_split_offset_only(const std::vector<Waveform>& labeled,
                                   const std::vector<Waveform>& unlabeled,
                                   const MixParams& params, Rng& rng) {
  params.validate();
  SplitHalves halves = shuffle_and_split(labeled, unlabeled, rng);

  MixedBatch batch;
  batch.half_a = std::move(halves.a);
  batch.half_b = std::move(halves.b);
  for (const auto* half : {&batch.half_a, &batch.half_b}) {
    auto& aug = half == &batch.half_a ? batch.half_a_aug : batch.half_b_aug;
    auto& prov = half == &batch.half_a ? batch.provenance_a : batch.provenance_b;
    for (const Waveform& w : *half) {
      MixProvenance p;
      Waveform placed = placed_nonzero(w, params.target_len, rng, &p.signal_offset);
      aug.push_back(finalize_unit_rms(std::move(placed), &p.normalization_gain));
      prov.push_back(p);
    }
  }
  return batch;
}

void write_provenance_jsonl(const MixedBatch& batch, std::ostream& os) {
  const auto dump_half = [&os](const std::vector<MixProvenance>& provs, const char* half) {
    for (std::size_t i = 0; i < provs.size(); ++i) {
      const MixProvenance& p = provs[i];
      nlohmann::ordered_json j;
      j["half"] = half;
      j["index"] = i;
      j["signal_offset"] = p.signal_offset;
      if (p.mixing_applied) {
        j["interferer_index"] = p.interferer_index;
        j["interferer_offset"] = p.interferer_offset;
        j["snr_db"] = p.source_snr_db;
        j["noise_color"] = to_string(p.noise_color);
        j["noise_snr_db"] = p.noise_snr_db;
        j["noise_seed"] = p.noise_seed;
      }
      os << j.dump() << '\n';
    }
  };
  dump_half(batch.provenance_a, "a");
  dump_half(batch.provenance_b, "b");
}

}  // namespace ssacl
