#include "eegemo/electrodes.hpp"

#include <algorithm>
#include <numeric>

#include "eegemo/util.hpp"

namespace eegemo {

const std::array<std::string_view, kNumElectrodes>& electrode_names() {
  static const std::array<std::string_view, kNumElectrodes> names = {
      "Fp1", "Fp2", "F3", "F4", "F7", "F8", "Fz", "C3", "C4", "T3", "T4", "Pz"};
  return names;
}

std::string_view electrode_name(Electrode e) {
  return electrode_names()[static_cast<std::size_t>(e)];
}

Electrode parse_electrode(std::string_view name) {
  const auto& names = electrode_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<Electrode>(i);
  }
  throw ValidationError("unknown electrode label '" + std::string(name) + "'");
}

const std::array<int, kNumElectrodes>& electrode_alpha_ranks() {
  static const std::array<int, kNumElectrodes> ranks = [] {
    const auto& names = electrode_names();
    std::array<int, kNumElectrodes> order{};
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return names[a] < names[b]; });
    std::array<int, kNumElectrodes> rank{};
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r);
    return rank;
  }();
  return ranks;
}

}  // namespace eegemo
