#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "doctest.h"
#include "eegemo/dataset.hpp"
#include "eegemo/util.hpp"
#include "temp_dir.hpp"

using namespace eegemo;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.n_subjects = 2;
  spec.songs_per_subject = 1;
  spec.duration_s = 2.0;
  spec.sample_rate_hz = 50.0;
  spec.segment_s = 0.5;
  spec.noise_sigma = 0.3;
  spec.class_signatures = {{{6.0, 1.0}, {10.0, 1.0}}};
  return spec;
}

bool recordings_equal(const Recording& a, const Recording& b) {
  if (a.subject_id != b.subject_id || a.song_id != b.song_id) return false;
  if (a.sample_rate_hz != b.sample_rate_hz) return false;
  if (a.arousal != b.arousal || a.valence != b.valence) return false;
  for (std::size_t c = 0; c < kNumElectrodes; ++c)
    if (a.channels[c] != b.channels[c]) return false;
  return true;
}

}  // namespace

TEST_CASE("electrode label set is closed and canonically ordered") {
  const auto& names = electrode_names();
  REQUIRE(names.size() == 12);
  CHECK(names[0] == "Fp1");
  CHECK(names[11] == "Pz");
  for (std::size_t i = 0; i < kNumElectrodes; ++i)
    CHECK(parse_electrode(names[i]) == static_cast<Electrode>(i));
  CHECK_THROWS_AS(parse_electrode("Cz"), ValidationError);
  CHECK_THROWS_AS(parse_electrode("fp1"), ValidationError);
  CHECK_THROWS_AS(parse_electrode(""), ValidationError);

  const auto& rank = electrode_alpha_ranks();
  CHECK(rank[static_cast<int>(Electrode::C3)] == 0);   // "C3" sorts first
  CHECK(rank[static_cast<int>(Electrode::T4)] == 11);  // "T4" sorts last
}

TEST_CASE("synthetic generation is a pure function of spec and seed") {
  SyntheticSpec spec = small_spec();
  spec.n_subjects = 12;
  spec.songs_per_subject = 2;
  const auto a = generate_synthetic(spec, 7);
  const auto b = generate_synthetic(spec, 7);
  const auto c = generate_synthetic(spec, 8);

  REQUIRE(a.size() == 24);
  std::set<std::string> subjects;
  for (const auto& rec : a) subjects.insert(rec.subject_id);
  CHECK(subjects.size() == 12);

  for (std::size_t i = 0; i < a.size(); ++i) CHECK(recordings_equal(a[i], b[i]));
  CHECK_FALSE(recordings_equal(a[0], c[0]));

  for (const auto& rec : a) {
    CHECK(rec.n_samples() == 100);
    CHECK_NOTHROW(rec.validate("synthetic"));
  }
}

TEST_CASE("noiseless synthetic carries the exact class sinusoid on target channels") {
  SyntheticSpec spec = small_spec();
  spec.noise_sigma = 0.0;
  spec.target_channels = {Electrode::Fp1};
  spec.segment_s = 0.5;
  const auto recs = generate_synthetic(spec, 3);
  const Recording& rec = recs.front();
  for (std::size_t i = 0; i < rec.n_samples(); ++i) {
    const int cls = synthetic_class_at(spec, i);
    const double t = static_cast<double>(i) / spec.sample_rate_hz;
    const double f = spec.class_signatures[static_cast<std::size_t>(cls)].freq_hz;
    CHECK(rec.channel(Electrode::Fp1)[i] == std::sin(2.0 * std::numbers::pi * f * t));
    CHECK(rec.channel(Electrode::C3)[i] == 0.0);  // non-target, no noise
    const double want = cls == 1 ? spec.annotation_magnitude : -spec.annotation_magnitude;
    CHECK(rec.arousal[i] == want);
    CHECK(rec.valence[i] == want);
  }
}

TEST_CASE("class segments alternate at segment_s boundaries") {
  SyntheticSpec spec = small_spec();
  spec.segment_s = 0.5;  // 25 samples at 50 Hz
  CHECK(synthetic_class_at(spec, 0) == 0);
  CHECK(synthetic_class_at(spec, 24) == 0);
  CHECK(synthetic_class_at(spec, 25) == 1);
  CHECK(synthetic_class_at(spec, 49) == 1);
  CHECK(synthetic_class_at(spec, 50) == 0);
}

TEST_CASE("recording CSV round trip is bit exact") {
  testutil::TempDir tmp("dataset");
  const auto recs = generate_synthetic(small_spec(), 11);
  const std::string path = tmp.str("rec.csv");
  write_recording(path, recs[0]);
  Recording loaded = load_recording(path, small_spec().sample_rate_hz);
  loaded.subject_id = recs[0].subject_id;  // ids come from the manifest, not the file
  loaded.song_id = recs[0].song_id;
  CHECK(recordings_equal(loaded, recs[0]));

  const std::string bytes = read_text_file(path);
  write_recording(path, loaded);
  CHECK(read_text_file(path) == bytes);
}

TEST_CASE("loader diagnoses malformed session files") {
  testutil::TempDir tmp("badcsv");
  const std::string header = "t,Fp1,Fp2,F3,F4,F7,F8,Fz,C3,C4,T3,T4,Pz,arousal,valence";
  auto row = [](double t, double v, double a) {
    std::string s = format_double(t);
    for (int c = 0; c < 12; ++c) s += "," + format_double(v);
    s += "," + format_double(a) + "," + format_double(a);
    return s;
  };

  SUBCASE("missing channel column") {
    const std::string hdr = "t,Fp1,Fp2,F3,F4,F7,F8,Fz,C3,C4,T3,Pz,arousal,valence";
    std::string body = "0,1,1,1,1,1,1,1,1,1,1,1,0.5,0.5";
    write_text_file(tmp.str("a.csv"), hdr + "\n" + body + "\n");
    try {
      load_recording(tmp.str("a.csv"), 250.0);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("T4") != std::string::npos);
    }
  }
  SUBCASE("annotation out of range") {
    write_text_file(tmp.str("b.csv"),
                    header + "\n" + row(0.0, 1.0, 0.5) + "\n" + row(0.004, 1.0, 1.5) + "\n");
    try {
      load_recording(tmp.str("b.csv"), 250.0);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("out of range") != std::string::npos);
    }
  }
  SUBCASE("non-finite sample") {
    write_text_file(tmp.str("c.csv"), header + "\n0,nan,1,1,1,1,1,1,1,1,1,1,1,0.5,0.5\n");
    CHECK_THROWS_AS(load_recording(tmp.str("c.csv"), 250.0), ValidationError);
  }
  SUBCASE("ragged row") {
    write_text_file(tmp.str("d.csv"), header + "\n0,1,1,1\n");
    CHECK_THROWS_AS(load_recording(tmp.str("d.csv"), 250.0), ValidationError);
  }
  SUBCASE("sample rate mismatch") {
    write_text_file(tmp.str("e.csv"),
                    header + "\n" + row(0.0, 1.0, 0.5) + "\n" + row(0.5, 1.0, 0.5) + "\n");
    CHECK_THROWS_AS(load_recording(tmp.str("e.csv"), 250.0), ValidationError);
  }
  SUBCASE("duplicate column") {
    const std::string hdr = header + ",Fp1";
    write_text_file(tmp.str("f.csv"), hdr + "\n" + row(0.0, 1.0, 0.5) + ",1\n");
    CHECK_THROWS_AS(load_recording(tmp.str("f.csv"), 250.0), ValidationError);
  }
}

TEST_CASE("manifest round trip and full dataset write/load") {
  testutil::TempDir tmp("manifest");
  SyntheticSpec spec = small_spec();
  const std::size_t n = write_synthetic_dataset(spec, 5, tmp.str());
  CHECK(n == 2);

  const DatasetManifest m = load_manifest(tmp.str("manifest.json"));
  CHECK(m.sample_rate_hz == spec.sample_rate_hz);
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].subject == "S01");
  CHECK(m.entries[0].path == "S01/song01.csv");

  const auto loaded = load_dataset(tmp.str("manifest.json"));
  const auto direct = generate_synthetic(spec, 5);
  REQUIRE(loaded.size() == direct.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) CHECK(recordings_equal(loaded[i], direct[i]));

  // Rewriting the dataset must reproduce the same bytes.
  const std::string before = read_text_file(tmp.str("S02/song01.csv"));
  write_synthetic_dataset(spec, 5, tmp.str());
  CHECK(read_text_file(tmp.str("S02/song01.csv")) == before);
}

TEST_CASE("manifest validation rejects duplicates and empties") {
  testutil::TempDir tmp("badmanifest");
  write_text_file(tmp.str("dup.json"),
                  R"({"sample_rate_hz": 250.0, "entries": [
                      {"subject": "S01", "song": "a", "path": "x.csv"},
                      {"subject": "S01", "song": "a", "path": "y.csv"}]})");
  CHECK_THROWS_AS(load_manifest(tmp.str("dup.json")), ValidationError);

  write_text_file(tmp.str("empty.json"), R"({"sample_rate_hz": 250.0, "entries": []})");
  CHECK_THROWS_AS(load_manifest(tmp.str("empty.json")), ValidationError);

  write_text_file(tmp.str("garbled.json"), "{not json");
  CHECK_THROWS_AS(load_manifest(tmp.str("garbled.json")), ValidationError);
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec = small_spec();
  spec.n_subjects = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);

  spec = small_spec();
  spec.class_signatures[1].freq_hz = 25.0;  // Nyquist at 50 Hz
  CHECK_THROWS_AS(spec.validate(), ConfigError);

  spec = small_spec();
  spec.duration_s = 0.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);

  CHECK_NOTHROW(SyntheticSpec{}.validate());
}
