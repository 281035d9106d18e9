#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegemo/dataset.hpp"
#include "eegemo/tensor.hpp"

namespace eegemo {

struct WindowSpec {
  double window_s = 4.0;
  double overlap_s = 0.0;
  double binarize_threshold = 0.0;
  // Ties are always dropped (and tallied); kept as a field so config echoes
  // are explicit about it.
  std::string tie_policy = "drop";

  double stride_s() const { return window_s - overlap_s; }
  void validate() const;
};

// One labeled training example. `input` starts as the canonical 12 x L
// window; the ordering stage may permute rows or re-layout it as a 4x5xL
// grid. Labels: arousal 0=low/1=high, valence 0=negative/1=positive.
struct WindowInstance {
  Tensor input;
  int arousal = 0;
  int valence = 0;
  std::string subject_id;
  std::string song_id;
  std::size_t start_sample = 0;
  int repeat_index = 0;  // tags random-ordering repeats
};

struct WindowSpan {
  std::size_t start;  // inclusive
  std::size_t end;    // exclusive
};

// Fixed-stride segmentation; trailing samples that do not fill a window are
// discarded. Throws if the recording is shorter than one window.
std::vector<WindowSpan> segment(std::size_t n_samples, double sample_rate_hz,
                                const WindowSpec& spec);
std::vector<WindowSpan> segment(const Recording& rec, const WindowSpec& spec);

// Majority vote over per-sample binarized annotations (value > threshold).
// nullopt signals an exact tie.
std::optional<int> majority_label(std::span<const double> values, double threshold);

// Which annotation a model predicts; arousal and valence get separate models.
enum class Target { arousal, valence };

Target parse_target(const std::string& name);
std::string target_name(Target t);

inline int label_of(const WindowInstance& inst, Target t) {
  return t == Target::arousal ? inst.arousal : inst.valence;
}

struct InstanceSet {
  std::vector<WindowInstance> instances;
  std::size_t ties_dropped = 0;
};

// Segments every recording and attaches both labels; windows where either
// vote ties are dropped and tallied. Inputs are expected to be standardized.
InstanceSet build_instances(const std::vector<Recording>& recs, const WindowSpec& spec);

}  // namespace eegemo
