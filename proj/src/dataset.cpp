#include "eegemo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "eegemo/rng.hpp"
#include "eegemo/util.hpp"

namespace eegemo {

namespace {

constexpr double kTimeTolerance = 1e-6;  // seconds

std::string pad2(int v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

}  // namespace

void Recording::validate(const std::string& where) const {
  if (!(sample_rate_hz > 0.0)) {
    throw ValidationError(where + ": sample_rate_hz must be positive");
  }
  const std::size_t n = arousal.size();
  if (n == 0) throw ValidationError(where + ": recording is empty");
  if (valence.size() != n) {
    throw ValidationError(where + ": length mismatch between annotation columns");
  }
  for (std::size_t c = 0; c < kNumElectrodes; ++c) {
    if (channels[c].size() != n) {
      throw ValidationError(where + ": length mismatch in channel " +
                            std::string(electrode_names()[c]));
    }
    for (double v : channels[c]) {
      if (!std::isfinite(v)) {
        throw ValidationError(where + ": non-finite value in channel " +
                              std::string(electrode_names()[c]));
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(arousal[i]) || !std::isfinite(valence[i])) {
      throw ValidationError(where + ": non-finite annotation value");
    }
    if (arousal[i] < -1.0 || arousal[i] > 1.0 || valence[i] < -1.0 || valence[i] > 1.0) {
      throw ValidationError(where + ": annotation out of range at sample " +
                            std::to_string(i));
    }
  }
}

Recording load_recording(const std::string& path, double expected_rate) {
  if (!(expected_rate > 0.0)) throw ValidationError(path + ": expected rate must be positive");
  std::istringstream in(read_text_file(path));

  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  const auto header = split_csv_line(line);

  // Resolve the column layout. The column set is fixed; order is free.
  int t_col = -1, arousal_col = -1, valence_col = -1;
  std::array<int, kNumElectrodes> chan_col;
  chan_col.fill(-1);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    int* slot = nullptr;
    if (name == "t") slot = &t_col;
    else if (name == "arousal") slot = &arousal_col;
    else if (name == "valence") slot = &valence_col;
    else slot = &chan_col[static_cast<std::size_t>(parse_electrode(name))];
    if (*slot != -1) throw ValidationError(path + ": duplicate column '" + name + "'");
    *slot = static_cast<int>(c);
  }
  if (t_col < 0) throw ValidationError(path + ": missing column 't'");
  if (arousal_col < 0) throw ValidationError(path + ": missing column 'arousal'");
  if (valence_col < 0) throw ValidationError(path + ": missing column 'valence'");
  for (std::size_t c = 0; c < kNumElectrodes; ++c) {
    if (chan_col[c] < 0) {
      throw ValidationError(path + ": missing channel " + std::string(electrode_names()[c]));
    }
  }

  Recording rec;
  rec.sample_rate_hz = expected_rate;
  const double dt = 1.0 / expected_rate;

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ValidationError(path + ": length mismatch at row " + std::to_string(row) +
                            " (expected " + std::to_string(header.size()) + " columns, got " +
                            std::to_string(fields.size()) + ")");
    }
    const std::string ctx = path + " row " + std::to_string(row);
    const double t = parse_double(fields[static_cast<std::size_t>(t_col)], ctx);
    if (std::abs(t - static_cast<double>(row) * dt) > kTimeTolerance) {
      throw ValidationError(path + ": sample rate mismatch at row " + std::to_string(row) +
                            " (t=" + format_double(t) + ", expected " +
                            format_double(static_cast<double>(row) * dt) + ")");
    }
    for (std::size_t c = 0; c < kNumElectrodes; ++c) {
      rec.channels[c].push_back(parse_double(fields[static_cast<std::size_t>(chan_col[c])], ctx));
    }
    rec.arousal.push_back(parse_double(fields[static_cast<std::size_t>(arousal_col)], ctx));
    rec.valence.push_back(parse_double(fields[static_cast<std::size_t>(valence_col)], ctx));
    ++row;
  }

  rec.validate(path);
  return rec;
}

void write_recording(const std::string& path, const Recording& rec) {
  std::ostringstream out;
  out << "t";
  for (auto name : electrode_names()) out << ',' << name;
  out << ",arousal,valence\n";
  const double dt = 1.0 / rec.sample_rate_hz;
  for (std::size_t i = 0; i < rec.n_samples(); ++i) {
    out << format_double(static_cast<double>(i) * dt);
    for (std::size_t c = 0; c < kNumElectrodes; ++c) {
      out << ',' << format_double(rec.channels[c][i]);
    }
    out << ',' << format_double(rec.arousal[i]) << ',' << format_double(rec.valence[i]) << '\n';
  }
  write_text_file(path, out.str());
}

DatasetManifest load_manifest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
  DatasetManifest m;
  try {
    m.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    for (const auto& e : j.at("recordings")) {
      m.entries.push_back({e.at("subject").get<std::string>(),
                           e.at("song").get<std::string>(),
                           e.at("path").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (!(m.sample_rate_hz > 0.0)) throw ValidationError(path + ": sample_rate_hz must be positive");
  if (m.entries.empty()) throw ValidationError(path + ": manifest lists no recordings");
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : m.entries) {
    if (!seen.insert({e.subject, e.song}).second) {
      throw ValidationError(path + ": duplicate (subject, song) pair " + e.subject + "/" + e.song);
    }
  }
  return m;
}

void write_manifest(const std::string& path, const DatasetManifest& manifest) {
  nlohmann::ordered_json j;
  j["sample_rate_hz"] = manifest.sample_rate_hz;
  j["recordings"] = nlohmann::ordered_json::array();
  for (const auto& e : manifest.entries) {
    j["recordings"].push_back({{"subject", e.subject}, {"song", e.song}, {"path", e.path}});
  }
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<Recording> load_dataset(const std::string& manifest_path) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const auto base = std::filesystem::path(manifest_path).parent_path();
  std::vector<Recording> recs;
  recs.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    Recording rec = load_recording((base / e.path).string(), manifest.sample_rate_hz);
    rec.subject_id = e.subject;
    rec.song_id = e.song;
    recs.push_back(std::move(rec));
  }
  return recs;
}

void SyntheticSpec::validate() const {
  if (n_subjects < 1) throw ConfigError("synthetic spec: n_subjects must be >= 1");
  if (songs_per_subject < 1) throw ConfigError("synthetic spec: songs_per_subject must be >= 1");
  if (!(duration_s > 0.0)) throw ConfigError("synthetic spec: duration_s must be positive");
  if (!(sample_rate_hz > 0.0)) throw ConfigError("synthetic spec: sample_rate_hz must be positive");
  if (noise_sigma < 0.0) throw ConfigError("synthetic spec: noise_sigma must be >= 0");
  if (!(segment_s > 0.0)) throw ConfigError("synthetic spec: segment_s must be positive");
  if (!(annotation_magnitude > 0.0) || annotation_magnitude > 1.0) {
    throw ConfigError("synthetic spec: annotation_magnitude must be in (0, 1]");
  }
  for (const auto& sig : class_signatures) {
    if (!(sig.freq_hz > 0.0)) throw ConfigError("synthetic spec: signature frequency must be positive");
    if (sig.freq_hz >= sample_rate_hz / 2.0) {
      throw ConfigError("synthetic spec: signature frequency " + format_double(sig.freq_hz) +
                            " Hz is at or above Nyquist (" + format_double(sample_rate_hz / 2.0) + " Hz)");
    }
    if (sig.amplitude < 0.0) throw ConfigError("synthetic spec: signature amplitude must be >= 0");
  }
}

int synthetic_class_at(const SyntheticSpec& spec, std::size_t sample_index) {
  const auto seg_samples = static_cast<std::size_t>(
      std::llround(spec.segment_s * spec.sample_rate_hz));
  return static_cast<int>((sample_index / std::max<std::size_t>(seg_samples, 1)) % 2);
}

std::vector<Recording> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate_hz));
  if (n == 0) throw ConfigError("synthetic spec: zero-length duration");

  std::array<bool, kNumElectrodes> is_target{};
  for (Electrode e : spec.target_channels) is_target[static_cast<std::size_t>(e)] = true;

  std::vector<Recording> recs;
  recs.reserve(static_cast<std::size_t>(spec.n_subjects * spec.songs_per_subject));
  for (int s = 0; s < spec.n_subjects; ++s) {
    for (int g = 0; g < spec.songs_per_subject; ++g) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(g)));
      Recording rec;
      rec.subject_id = "S" + pad2(s + 1);
      rec.song_id = "song" + pad2(g + 1);
      rec.sample_rate_hz = spec.sample_rate_hz;
      rec.arousal.resize(n);
      rec.valence.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double a = synthetic_class_at(spec, i) == 1 ? spec.annotation_magnitude
                                                          : -spec.annotation_magnitude;
        rec.arousal[i] = a;
        rec.valence[i] = a;
      }
      for (std::size_t c = 0; c < kNumElectrodes; ++c) {
        auto& series = rec.channels[c];
        series.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          double v = 0.0;
          if (is_target[c]) {
            const auto& sig = spec.class_signatures[static_cast<std::size_t>(
                synthetic_class_at(spec, i))];
            const double t = static_cast<double>(i) / spec.sample_rate_hz;
            v = sig.amplitude * std::sin(2.0 * std::numbers::pi * sig.freq_hz * t);
          }
          if (spec.noise_sigma > 0.0) v += spec.noise_sigma * rng.gaussian();
          series[i] = v;
        }
      }
      recs.push_back(std::move(rec));
    }
  }
  return recs;
}

std::size_t write_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed,
                                    const std::string& out_dir) {
  const std::vector<Recording> recs = generate_synthetic(spec, seed);
  DatasetManifest manifest;
  manifest.sample_rate_hz = spec.sample_rate_hz;
  const std::filesystem::path base(out_dir);
  for (const auto& rec : recs) {
    const std::string rel = rec.subject_id + "/" + rec.song_id + ".csv";
    write_recording((base / rel).string(), rec);
    manifest.entries.push_back({rec.subject_id, rec.song_id, rel});
  }
  write_manifest((base / "manifest.json").string(), manifest);
  return recs.size();
}

}  // namespace eegemo
