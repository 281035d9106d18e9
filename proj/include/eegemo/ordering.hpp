#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegemo/dataset.hpp"
#include "eegemo/windowing.hpp"

namespace eegemo {

// Pearson correlation coefficient between two equally long series.
// Throws on length mismatch, fewer than two samples, or zero variance.
double pcc(std::span<const double> x, std::span<const double> y);

// 12x12 symmetric matrix of channel correlations, canonical electrode order.
struct CorrelationMatrix {
  std::array<std::array<double, kNumElectrodes>, kNumElectrodes> values{};

  double at(Electrode a, Electrode b) const {
    return values[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  }
};

// Entry (a,b) is the PCC over the channels' series concatenated across the
// given recordings. Intended to be fed training-partition data only.
CorrelationMatrix correlation_matrix(const std::vector<Recording>& recs);

// Same, over the channel rows of windowed instances (concatenated in order).
CorrelationMatrix correlation_matrix(const std::vector<const WindowInstance*>& instances);

enum class PathObjective { maximize, minimize };

// Exact Hamiltonian-path optimization over a symmetric non-negative weight
// matrix by subset DP (n <= 20). Among equal-weight optima the
// lexicographically smallest sequence under `tie_rank` is returned; the
// reported weight is re-accumulated left to right along the returned path.
struct OptimalPath {
  std::vector<int> order;
  double weight = 0.0;
};
OptimalPath optimal_adjacency_path(const std::vector<std::vector<double>>& weights,
                                   PathObjective objective,
                                   const std::vector<int>& tie_rank);

// Electrode ordering that optimizes the summed |PCC| between consecutive
// electrodes; ties broken toward alphabetically smaller label sequences.
std::vector<Electrode> order_by_adjacent_pcc(const CorrelationMatrix& m,
                                             PathObjective objective);

// Top-view scalp grid used by the physical-3d layout. Empty cells are
// zero-filled in tensors.
struct GridLayout {
  static constexpr int kRows = 4;
  static constexpr int kCols = 5;
  // -1 marks an empty cell; otherwise a canonical electrode index.
  std::array<std::array<int, kCols>, kRows> cell;
};
const GridLayout& physical_grid();

enum class OrderingKind { given, random, physical3d, max_adjacent_pcc, min_adjacent_pcc };

struct OrderingStrategy {
  OrderingKind kind = OrderingKind::given;
  int n_repeats = 20;           // random only
  std::uint64_t seed = 0;       // random only
  std::size_t time_decimation = 1;  // physical3d only: keep every d-th sample

  void validate() const;
};

OrderingKind parse_ordering_kind(const std::string& name);
std::string ordering_kind_name(OrderingKind k);

// Everything a strategy needs beyond the instances themselves. Correlation
// strategies require `corr` (from training data); `random` uses permutations
// drawn once per repeat.
struct OrderingContext {
  std::optional<CorrelationMatrix> corr;
  std::vector<std::vector<Electrode>> random_orders;  // one per repeat
};

// Draws the per-repeat random electrode orders for a strategy (seeded).
std::vector<std::vector<Electrode>> draw_random_orders(int n_repeats, std::uint64_t seed);

// Resolves the electrode order used by a 2D strategy for one repeat.
std::vector<Electrode> resolve_order(const OrderingStrategy& strategy,
                                     const OrderingContext& ctx, int repeat_index);

// Applies a strategy to one instance. 2D strategies permute the electrode
// rows; physical3d produces a 4x5xL'x1 grid tensor.
WindowInstance arrange_instance(const WindowInstance& inst, const OrderingStrategy& strategy,
                                const OrderingContext& ctx, int repeat_index);

// The whole-set form: for `random` this emits n_repeats arrangements of every
// instance, tagged with their repeat index; other strategies emit one each.
std::vector<WindowInstance> arrange(const std::vector<WindowInstance>& instances,
                                    const OrderingStrategy& strategy,
                                    const OrderingContext& ctx);

}  // namespace eegemo
