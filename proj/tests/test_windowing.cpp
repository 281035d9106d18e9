#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "eegemo/dataset.hpp"
#include "eegemo/util.hpp"
#include "eegemo/windowing.hpp"

using namespace eegemo;

namespace {

Recording annotated_recording(const std::vector<double>& annotation, double rate = 250.0) {
  Recording rec;
  rec.subject_id = "S01";
  rec.song_id = "song01";
  rec.sample_rate_hz = rate;
  rec.arousal = annotation;
  rec.valence = annotation;
  for (std::size_t c = 0; c < kNumElectrodes; ++c) {
    rec.channels[c].resize(annotation.size());
    for (std::size_t i = 0; i < annotation.size(); ++i)
      rec.channels[c][i] = static_cast<double>(c) + 0.001 * static_cast<double>(i);
  }
  return rec;
}

}  // namespace

TEST_CASE("window spec validation") {
  WindowSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.overlap_s = 4.0;  // stride would be zero
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = WindowSpec{};
  spec.window_s = 0.5;  // below the 1..10 s range
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = WindowSpec{};
  spec.window_s = 11.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = WindowSpec{};
  spec.overlap_s = -1.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("segment counts follow floor((N - L)/stride) + 1") {
  WindowSpec spec;

  SUBCASE("30 s at 250 Hz, 4 s windows, no overlap -> 7") {
    CHECK(segment(7500, 250.0, spec).size() == 7);
  }
  SUBCASE("30 s at 250 Hz, 4 s windows, 1 s overlap -> 9") {
    spec.overlap_s = 1.0;
    CHECK(segment(7500, 250.0, spec).size() == 9);
  }
  SUBCASE("too short errors") {
    CHECK_THROWS_AS(segment(999, 250.0, spec), ValidationError);
    CHECK(segment(1000, 250.0, spec).size() == 1);
  }
  SUBCASE("formula holds on a grid and spans are well formed") {
    for (std::size_t n : {1000u, 1234u, 2500u, 5000u, 7500u}) {
      for (double w : {1.0, 2.0, 4.0, 10.0}) {
        for (double ov : {0.0, 0.5, 1.0}) {
          if (ov >= w) continue;
          WindowSpec s;
          s.window_s = w;
          s.overlap_s = ov;
          const auto L = static_cast<std::size_t>(std::llround(w * 250.0));
          const auto stride = static_cast<std::size_t>(std::llround((w - ov) * 250.0));
          if (L > n) continue;
          const auto spans = segment(n, 250.0, s);
          CHECK(spans.size() == (n - L) / stride + 1);
          for (std::size_t i = 0; i < spans.size(); ++i) {
            CHECK(spans[i].end - spans[i].start == L);
            CHECK(spans[i].start == i * stride);
            CHECK(spans[i].end <= n);
          }
        }
      }
    }
  }
}

TEST_CASE("majority vote over binarized samples") {
  CHECK(majority_label(std::vector<double>{1.0, 1.0, 0.0}, 0.0) == 1);
  CHECK(majority_label(std::vector<double>{-0.2, -0.4, 0.3}, 0.0) == 0);
  CHECK_FALSE(majority_label(std::vector<double>{0.5, -0.5}, 0.0).has_value());
  // Binarization is strict: value > threshold.
  CHECK(majority_label(std::vector<double>{0.0, 0.0, 0.1}, 0.0) == 0);
  CHECK(majority_label(std::vector<double>{0.2, 0.3, 0.1}, 0.15) == 1);
}

TEST_CASE("build_instances attaches labels and provenance") {
  SUBCASE("constant annotation labels every window 1/1") {
    const Recording rec = annotated_recording(std::vector<double>(2000, 0.8));
    WindowSpec spec;
    spec.window_s = 1.0;
    const InstanceSet set = build_instances({rec}, spec);
    CHECK(set.instances.size() == 8);
    CHECK(set.ties_dropped == 0);
    for (const auto& inst : set.instances) {
      CHECK(inst.arousal == 1);
      CHECK(inst.valence == 1);
      CHECK(inst.subject_id == "S01");
      CHECK(inst.input.shape == std::vector<std::size_t>{12, 250, 1});
    }
  }

  SUBCASE("instance rows mirror the source channels") {
    const Recording rec = annotated_recording(std::vector<double>(1000, -0.5));
    WindowSpec spec;
    spec.window_s = 2.0;
    const InstanceSet set = build_instances({rec}, spec);
    REQUIRE(set.instances.size() == 2);
    const WindowInstance& w1 = set.instances[1];
    CHECK(w1.start_sample == 500);
    CHECK(w1.arousal == 0);
    for (std::size_t c = 0; c < kNumElectrodes; ++c)
      for (std::size_t i = 0; i < 500; ++i)
        CHECK(w1.input.at3(c, i, 0) == rec.channels[c][500 + i]);
  }

  SUBCASE("exact ties are dropped and tallied") {
    std::vector<double> ann(500, 0.5);
    for (std::size_t i = 250; i < 500; ++i) ann[i] = -0.5;
    const Recording rec = annotated_recording(ann);
    WindowSpec spec;
    spec.window_s = 2.0;  // one window, split 250/250
    const InstanceSet set = build_instances({rec}, spec);
    CHECK(set.instances.empty());
    CHECK(set.ties_dropped == 1);
  }

  SUBCASE("subject provenance survives across recordings") {
    SyntheticSpec sspec;
    sspec.n_subjects = 12;
    sspec.duration_s = 2.0;
    sspec.sample_rate_hz = 50.0;
    sspec.segment_s = 2.0;
    const auto recs = generate_synthetic(sspec, 2);
    WindowSpec spec;
    spec.window_s = 1.0;
    const InstanceSet set = build_instances(recs, spec);
    std::set<std::string> subjects;
    for (const auto& inst : set.instances) subjects.insert(inst.subject_id);
    CHECK(subjects.size() == 12);
  }

  SUBCASE("windows inside a class segment carry that class") {
    SyntheticSpec sspec;
    sspec.n_subjects = 1;
    sspec.duration_s = 20.0;
    sspec.sample_rate_hz = 50.0;
    sspec.segment_s = 5.0;
    const auto recs = generate_synthetic(sspec, 4);
    WindowSpec spec;
    spec.window_s = 1.0;
    const InstanceSet set = build_instances(recs, spec);
    CHECK(set.instances.size() == 20);
    for (const auto& inst : set.instances) {
      const int cls = synthetic_class_at(sspec, inst.start_sample);
      CHECK(synthetic_class_at(sspec, inst.start_sample + 49) == cls);  // fully inside
      CHECK(inst.arousal == cls);
      CHECK(inst.valence == cls);
    }
  }

  SUBCASE("deterministic: identical inputs give identical instances") {
    const Recording rec = annotated_recording(std::vector<double>(1500, 0.3));
    WindowSpec spec;
    spec.window_s = 1.0;
    spec.overlap_s = 0.5;
    const InstanceSet a = build_instances({rec}, spec);
    const InstanceSet b = build_instances({rec}, spec);
    REQUIRE(a.instances.size() == b.instances.size());
    for (std::size_t i = 0; i < a.instances.size(); ++i) {
      CHECK(a.instances[i].input.data == b.instances[i].input.data);
      CHECK(a.instances[i].start_sample == b.instances[i].start_sample);
    }
  }
}

TEST_CASE("no-overlap windows never overlap") {
  const Recording rec = annotated_recording(std::vector<double>(3000, 0.4));
  WindowSpec spec;
  spec.window_s = 1.5;
  const auto spans = segment(rec, spec);
  for (std::size_t i = 1; i < spans.size(); ++i) CHECK(spans[i].start >= spans[i - 1].end);
}

TEST_CASE("target parsing") {
  CHECK(parse_target("arousal") == Target::arousal);
  CHECK(parse_target("valence") == Target::valence);
  CHECK(target_name(Target::arousal) == "arousal");
  CHECK(target_name(Target::valence) == "valence");
  CHECK_THROWS_AS(parse_target("dominance"), ConfigError);

  WindowInstance inst;
  inst.arousal = 1;
  inst.valence = 0;
  CHECK(label_of(inst, Target::arousal) == 1);
  CHECK(label_of(inst, Target::valence) == 0);
}
