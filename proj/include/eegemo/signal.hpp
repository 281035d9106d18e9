#pragma once

#include <array>
#include <complex>
#include <vector>

#include "eegemo/dataset.hpp"

namespace eegemo {

// Butterworth bandpass of the given prototype order (a 4th-order design has
// 2*order poles after the bandpass transform), applied forward-backward for
// zero phase.
struct FilterSpec {
  double low_cut_hz = 0.5;
  double high_cut_hz = 60.0;
  int order = 4;

  void validate(double sample_rate_hz) const;
};

// One second-order section, normalized so a0 == 1.
struct BiquadSection {
  double b0, b1, b2;
  double a1, a2;
};

using SosFilter = std::vector<BiquadSection>;

SosFilter design_butter_bandpass(const FilterSpec& spec, double sample_rate_hz);

// Complex frequency response of the cascade at `freq_hz`.
std::complex<double> sos_response(const SosFilter& sos, double freq_hz, double sample_rate_hz);

// Single forward pass with the given initial state scale (direct form II
// transposed). Mostly a building block for filtfilt.
std::vector<double> sos_filter(const SosFilter& sos, const std::vector<double>& x);

// Zero-phase filtering: odd-reflection padding of 3x the filter state length
// at each end, forward pass, backward pass, unpad. Throws ValidationError if
// the series is too short to pad.
std::vector<double> filtfilt(const SosFilter& sos, const std::vector<double>& x);

// Number of padding samples filtfilt needs on each side.
std::size_t filtfilt_padlen(const SosFilter& sos);

// Filters every channel of a recording; annotations are untouched.
Recording bandpass(const Recording& rec, const FilterSpec& spec);

// Per-electrode mean and population standard deviation.
struct ChannelStats {
  std::array<double, kNumElectrodes> mean{};
  std::array<double, kNumElectrodes> stddev{};
};

// Pooled over all samples of all given recordings. Throws on an empty list
// or a zero-variance channel.
ChannelStats compute_stats(const std::vector<Recording>& recs);

// z-scores every channel with the given stats; annotations untouched.
Recording standardize(const Recording& rec, const ChannelStats& stats);

// Where standardization statistics come from when running an experiment:
// pooled over the fold's training windows only, pooled over the whole
// dataset, or per source recording.
enum class StatsScope { train_only, global, per_recording };

}  // namespace eegemo
