#include "eegemo/windowing.hpp"

#include <cmath>

#include "eegemo/util.hpp"

namespace eegemo {

void WindowSpec::validate() const {
  if (!(window_s >= 1.0 && window_s <= 10.0)) {
    throw ValidationError("window_s must be in [1, 10] seconds");
  }
  if (overlap_s < 0.0) throw ValidationError("overlap_s must be >= 0");
  if (!(overlap_s < window_s)) throw ValidationError("overlap_s must be below window_s");
  if (tie_policy != "drop") throw ValidationError("unsupported tie_policy '" + tie_policy + "'");
}

std::vector<WindowSpan> segment(std::size_t n_samples, double sample_rate_hz,
                                const WindowSpec& spec) {
  spec.validate();
  const auto len = static_cast<std::size_t>(std::llround(spec.window_s * sample_rate_hz));
  const auto stride = static_cast<std::size_t>(std::llround(spec.stride_s() * sample_rate_hz));
  if (len == 0 || stride == 0) throw ValidationError("window or stride rounds to zero samples");
  if (n_samples < len) {
    throw ValidationError("recording of " + std::to_string(n_samples) +
                          " samples is shorter than one window (" + std::to_string(len) + ")");
  }
  const std::size_t count = (n_samples - len) / stride + 1;
  std::vector<WindowSpan> spans;
  spans.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    spans.push_back({w * stride, w * stride + len});
  }
  return spans;
}

std::vector<WindowSpan> segment(const Recording& rec, const WindowSpec& spec) {
  return segment(rec.n_samples(), rec.sample_rate_hz, spec);
}

std::optional<int> majority_label(std::span<const double> values, double threshold) {
  if (values.empty()) throw ValidationError("majority_label: empty sample range");
  std::size_t high = 0;
  for (double v : values) {
    if (v > threshold) ++high;
  }
  const std::size_t low = values.size() - high;
  if (high == low) return std::nullopt;
  return high > low ? 1 : 0;
}

InstanceSet build_instances(const std::vector<Recording>& recs, const WindowSpec& spec) {
  InstanceSet out;
  for (const auto& rec : recs) {
    const auto spans = segment(rec, spec);
    for (const auto& span : spans) {
      const std::size_t len = span.end - span.start;
      const auto vote_a = majority_label(
          std::span<const double>(rec.arousal.data() + span.start, len), spec.binarize_threshold);
      const auto vote_v = majority_label(
          std::span<const double>(rec.valence.data() + span.start, len), spec.binarize_threshold);
      if (!vote_a || !vote_v) {
        ++out.ties_dropped;
        continue;
      }
      WindowInstance inst;
      inst.input = Tensor({kNumElectrodes, len, 1});
      for (std::size_t c = 0; c < kNumElectrodes; ++c) {
        const double* src = rec.channels[c].data() + span.start;
        double* dst = inst.input.data.data() + c * len;
        for (std::size_t i = 0; i < len; ++i) dst[i] = src[i];
      }
      inst.arousal = *vote_a;
      inst.valence = *vote_v;
      inst.subject_id = rec.subject_id;
      inst.song_id = rec.song_id;
      inst.start_sample = span.start;
      out.instances.push_back(std::move(inst));
    }
  }
  return out;
}

Target parse_target(const std::string& name) {
  if (name == "arousal") return Target::arousal;
  if (name == "valence") return Target::valence;
  throw ConfigError("unknown target '" + name + "' (expected arousal or valence)");
}

std::string target_name(Target t) {
  return t == Target::arousal ? "arousal" : "valence";
}

}  // namespace eegemo
