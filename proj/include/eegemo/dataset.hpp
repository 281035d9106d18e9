#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "eegemo/electrodes.hpp"

namespace eegemo {

// One subject-song session: 12 channel series in microvolts plus per-sample
// continuous arousal/valence annotations in [-1, 1]. Immutable after
// construction/validation; safe to share across threads.
struct Recording {
  std::string subject_id;
  std::string song_id;
  double sample_rate_hz = 0.0;
  std::array<std::vector<double>, kNumElectrodes> channels;  // canonical order
  std::vector<double> arousal;
  std::vector<double> valence;

  std::size_t n_samples() const { return arousal.size(); }
  const std::vector<double>& channel(Electrode e) const {
    return channels[static_cast<std::size_t>(e)];
  }

  // Enforces the Recording invariants; throws ValidationError naming the
  // offending field. `where` prefixes diagnostics (usually the file path).
  void validate(const std::string& where) const;
};

struct ManifestEntry {
  std::string subject;
  std::string song;
  std::string path;  // relative to the manifest file
};

struct DatasetManifest {
  double sample_rate_hz = 0.0;
  std::vector<ManifestEntry> entries;
};

// Session CSV: header `t,Fp1,...,Pz,arousal,valence`, one row per sample at
// 1/rate spacing. Columns may appear in any order but the set is fixed.
Recording load_recording(const std::string& path, double expected_rate);
void write_recording(const std::string& path, const Recording& rec);

DatasetManifest load_manifest(const std::string& path);
void write_manifest(const std::string& path, const DatasetManifest& manifest);

// Loads every session listed in a manifest, stamping subject/song ids.
std::vector<Recording> load_dataset(const std::string& manifest_path);

// Per-class sinusoid signature used by the synthetic generator.
struct ClassSignature {
  double freq_hz = 0.0;
  double amplitude = 1.0;
};

// Synthetic sessions with class-dependent spectral structure: annotations
// alternate between the two classes in fixed-length segments, and the target
// channels carry the active class's sinusoid on top of Gaussian noise.
struct SyntheticSpec {
  int n_subjects = 12;
  int songs_per_subject = 1;
  double duration_s = 30.0;
  double sample_rate_hz = 250.0;
  double noise_sigma = 0.5;
  double segment_s = 5.0;
  double annotation_magnitude = 0.8;
  std::vector<Electrode> target_channels = {Electrode::Fp1, Electrode::Fp2,
                                            Electrode::F3, Electrode::F4};
  std::array<ClassSignature, 2> class_signatures = {{{6.0, 1.0}, {10.0, 1.0}}};

  void validate() const;
};

// Pure function of (spec, seed): repeated calls return identical recordings.
std::vector<Recording> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Generates a synthetic dataset and writes it out: one CSV per session under
// out_dir/<subject>/<song>.csv plus out_dir/manifest.json. Returns the number
// of sessions written; byte-identical for a fixed (spec, seed).
std::size_t write_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed,
                                    const std::string& out_dir);

// Class active at sample index i under the given spec (0 or 1).
int synthetic_class_at(const SyntheticSpec& spec, std::size_t sample_index);

}  // namespace eegemo
