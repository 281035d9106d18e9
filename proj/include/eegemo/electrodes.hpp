#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace eegemo {

// The twelve frontal-area electrodes of the recording montage (10-20 system,
// Cz reference). This set is closed: any other label is a parse error.
enum class Electrode : int {
  Fp1 = 0, Fp2, F3, F4, F7, F8, Fz, C3, C4, T3, T4, Pz
};

inline constexpr std::size_t kNumElectrodes = 12;

// Canonical channel order, also the session CSV column order.
const std::array<std::string_view, kNumElectrodes>& electrode_names();

std::string_view electrode_name(Electrode e);

// Throws ValidationError for anything outside the closed set.
Electrode parse_electrode(std::string_view name);

// Rank of each electrode (indexed canonically) under plain string comparison
// of the label names. Used for deterministic tie-breaking of orderings.
const std::array<int, kNumElectrodes>& electrode_alpha_ranks();

}  // namespace eegemo
