#include "eegemo/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>

#include "eegemo/rng.hpp"
#include "eegemo/util.hpp"

namespace eegemo {

double pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ValidationError("pcc: series lengths differ (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("pcc: needs at least two samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw ValidationError("pcc: zero-variance series has no defined correlation");
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

namespace {

CorrelationMatrix correlation_from_series(
    const std::array<std::vector<double>, kNumElectrodes>& series) {
  CorrelationMatrix m;
  for (std::size_t a = 0; a < kNumElectrodes; ++a) {
    m.values[a][a] = 1.0;
    for (std::size_t b = a + 1; b < kNumElectrodes; ++b) {
      const double r = pcc(series[a], series[b]);
      m.values[a][b] = r;
      m.values[b][a] = r;
    }
  }
  return m;
}

}  // namespace

CorrelationMatrix correlation_matrix(const std::vector<Recording>& recs) {
  if (recs.empty()) throw ValidationError("correlation_matrix: no recordings");
  std::array<std::vector<double>, kNumElectrodes> series;
  for (const auto& rec : recs)
    for (std::size_t c = 0; c < kNumElectrodes; ++c)
      series[c].insert(series[c].end(), rec.channels[c].begin(), rec.channels[c].end());
  return correlation_from_series(series);
}

CorrelationMatrix correlation_matrix(const std::vector<const WindowInstance*>& instances) {
  if (instances.empty()) throw ValidationError("correlation_matrix: no instances");
  std::array<std::vector<double>, kNumElectrodes> series;
  for (const WindowInstance* inst : instances) {
    if (inst->input.rank() != 3 || inst->input.shape[0] != kNumElectrodes)
      throw ValidationError("correlation_matrix: instance tensor is not channels x time");
    const std::size_t len = inst->input.shape[1];
    for (std::size_t c = 0; c < kNumElectrodes; ++c) {
      const double* row = inst->input.data.data() + c * len;
      series[c].insert(series[c].end(), row, row + len);
    }
  }
  return correlation_from_series(series);
}

double adjacency_path_weight(const std::vector<std::vector<double>>& weights,
                             const std::vector<int>& order) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i)
    acc += weights[static_cast<std::size_t>(order[i])][static_cast<std::size_t>(order[i + 1])];
  return acc;
}

OptimalPath optimal_adjacency_path(const std::vector<std::vector<double>>& weights,
                                   PathObjective objective, const std::vector<int>& tie_rank) {
  const std::size_t n = weights.size();
  if (n == 0) throw ValidationError("optimal_adjacency_path: empty weight matrix");
  if (n > 16) throw ValidationError("optimal_adjacency_path: matrix too large for exact search");
  for (const auto& row : weights) {
    if (row.size() != n) throw ValidationError("optimal_adjacency_path: matrix is not square");
    for (double w : row)
      if (!std::isfinite(w)) throw ValidationError("optimal_adjacency_path: non-finite weight");
  }
  std::vector<int> rank = tie_rank;
  if (rank.empty()) {
    rank.resize(n);
    std::iota(rank.begin(), rank.end(), 0);
  }
  if (rank.size() != n)
    throw ValidationError("optimal_adjacency_path: tie rank size mismatch");

  const bool maximize = objective == PathObjective::maximize;
  const double worst =
      maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  const std::size_t full = (std::size_t{1} << n) - 1;

  // dp[mask][v]: optimal weight of a path visiting exactly `mask`, starting at
  // v; choice[mask][v] is the vertex that follows v. Among equal weights the
  // successor with the smaller tie rank wins, which (inductively) makes every
  // stored path the lexicographically smallest optimum for its state.
  std::vector<double> dp((full + 1) * n, worst);
  std::vector<int> choice((full + 1) * n, -1);
  for (std::size_t v = 0; v < n; ++v) dp[(std::size_t{1} << v) * n + v] = 0.0;

  for (std::size_t mask = 1; mask <= full; ++mask) {
    if ((mask & (mask - 1)) == 0) continue;  // singletons are base cases
    for (std::size_t v = 0; v < n; ++v) {
      if (!(mask & (std::size_t{1} << v))) continue;
      const std::size_t rest = mask ^ (std::size_t{1} << v);
      double best = worst;
      int best_u = -1;
      for (std::size_t u = 0; u < n; ++u) {
        if (!(rest & (std::size_t{1} << u))) continue;
        const double cand = weights[v][u] + dp[rest * n + u];
        const bool better =
            best_u < 0 || (maximize ? cand > best : cand < best) ||
            (cand == best && rank[u] < rank[static_cast<std::size_t>(best_u)]);
        if (better) {
          best = cand;
          best_u = static_cast<int>(u);
        }
      }
      dp[mask * n + v] = best;
      choice[mask * n + v] = best_u;
    }
  }

  std::size_t start = 0;
  for (std::size_t v = 1; v < n; ++v) {
    const double cand = dp[full * n + v];
    const double best = dp[full * n + start];
    if ((maximize ? cand > best : cand < best) || (cand == best && rank[v] < rank[start]))
      start = v;
  }

  OptimalPath out;
  out.order.reserve(n);
  std::size_t mask = full;
  int v = static_cast<int>(start);
  while (v >= 0) {
    out.order.push_back(v);
    const int next = choice[mask * n + static_cast<std::size_t>(v)];
    mask ^= std::size_t{1} << static_cast<std::size_t>(v);
    v = next;
  }

  // Of the two traversal directions, keep the one whose left-to-right weight
  // is better under the objective (they can differ by rounding); on an exact
  // tie, the one starting at the lower-ranked vertex.
  std::vector<int> reversed(out.order.rbegin(), out.order.rend());
  const double fwd = adjacency_path_weight(weights, out.order);
  const double bwd = adjacency_path_weight(weights, reversed);
  bool take_reversed;
  if (fwd == bwd)
    take_reversed = rank[static_cast<std::size_t>(reversed.front())] <
                    rank[static_cast<std::size_t>(out.order.front())];
  else
    take_reversed = maximize ? bwd > fwd : bwd < fwd;
  if (take_reversed) {
    out.order = std::move(reversed);
    out.weight = bwd;
  } else {
    out.weight = fwd;
  }
  return out;
}

std::vector<Electrode> order_by_adjacent_pcc(const CorrelationMatrix& m, PathObjective objective) {
  std::vector<std::vector<double>> w(kNumElectrodes, std::vector<double>(kNumElectrodes, 0.0));
  for (std::size_t a = 0; a < kNumElectrodes; ++a)
    for (std::size_t b = 0; b < kNumElectrodes; ++b)
      if (a != b) w[a][b] = std::abs(m.values[a][b]);
  const auto ranks = electrode_alpha_ranks();
  const OptimalPath path =
      optimal_adjacency_path(w, objective, std::vector<int>(ranks.begin(), ranks.end()));
  std::vector<Electrode> order;
  order.reserve(kNumElectrodes);
  for (int idx : path.order) order.push_back(static_cast<Electrode>(idx));
  return order;
}

const GridLayout& physical_grid() {
  static const GridLayout layout = [] {
    GridLayout g;
    for (auto& row : g.cell) row.fill(-1);
    auto put = [&](int r, int c, Electrode e) { g.cell[r][c] = static_cast<int>(e); };
    put(0, 1, Electrode::Fp1);
    put(0, 3, Electrode::Fp2);
    put(1, 0, Electrode::F7);
    put(1, 1, Electrode::F3);
    put(1, 2, Electrode::Fz);
    put(1, 3, Electrode::F4);
    put(1, 4, Electrode::F8);
    put(2, 0, Electrode::T3);
    put(2, 1, Electrode::C3);
    put(2, 3, Electrode::C4);
    put(2, 4, Electrode::T4);
    put(3, 2, Electrode::Pz);
    return g;
  }();
  return layout;
}

void OrderingStrategy::validate() const {
  if (kind == OrderingKind::random && n_repeats < 1)
    throw ConfigError("ordering: n_repeats must be at least 1");
  if (time_decimation < 1) throw ConfigError("ordering: time_decimation must be at least 1");
}

OrderingKind parse_ordering_kind(const std::string& name) {
  if (name == "given") return OrderingKind::given;
  if (name == "random") return OrderingKind::random;
  if (name == "physical3d") return OrderingKind::physical3d;
  if (name == "max_adjacent_pcc") return OrderingKind::max_adjacent_pcc;
  if (name == "min_adjacent_pcc") return OrderingKind::min_adjacent_pcc;
  throw ConfigError("unknown ordering strategy '" + name + "'");
}

std::string ordering_kind_name(OrderingKind k) {
  switch (k) {
    case OrderingKind::given: return "given";
    case OrderingKind::random: return "random";
    case OrderingKind::physical3d: return "physical3d";
    case OrderingKind::max_adjacent_pcc: return "max_adjacent_pcc";
    case OrderingKind::min_adjacent_pcc: return "min_adjacent_pcc";
  }
  throw ValidationError("ordering: bad kind value");
}

std::vector<std::vector<Electrode>> draw_random_orders(int n_repeats, std::uint64_t seed) {
  std::vector<std::vector<Electrode>> orders;
  orders.reserve(static_cast<std::size_t>(n_repeats));
  for (int r = 0; r < n_repeats; ++r) {
    // Each repeat gets its own stream so the first k orders do not depend on
    // how many repeats were requested.
    Rng rng(mix_seed(seed, 0x0edeu, static_cast<std::uint64_t>(r)));
    std::vector<Electrode> order(kNumElectrodes);
    for (std::size_t i = 0; i < kNumElectrodes; ++i) order[i] = static_cast<Electrode>(i);
    rng.shuffle(order);
    orders.push_back(std::move(order));
  }
  return orders;
}

std::vector<Electrode> resolve_order(const OrderingStrategy& strategy, const OrderingContext& ctx,
                                     int repeat_index) {
  switch (strategy.kind) {
    case OrderingKind::given: {
      std::vector<Electrode> order(kNumElectrodes);
      for (std::size_t i = 0; i < kNumElectrodes; ++i) order[i] = static_cast<Electrode>(i);
      return order;
    }
    case OrderingKind::random: {
      if (repeat_index < 0 ||
          static_cast<std::size_t>(repeat_index) >= ctx.random_orders.size())
        throw ValidationError("ordering: repeat index out of range");
      return ctx.random_orders[static_cast<std::size_t>(repeat_index)];
    }
    case OrderingKind::max_adjacent_pcc:
    case OrderingKind::min_adjacent_pcc: {
      if (!ctx.corr)
        throw ValidationError("ordering: correlation matrix required but not provided");
      const auto objective = strategy.kind == OrderingKind::max_adjacent_pcc
                                 ? PathObjective::maximize
                                 : PathObjective::minimize;
      return order_by_adjacent_pcc(*ctx.corr, objective);
    }
    case OrderingKind::physical3d:
      throw ValidationError("ordering: physical3d has no linear electrode order");
  }
  throw ValidationError("ordering: bad kind value");
}

namespace {

WindowInstance arrange_grid(const WindowInstance& inst, std::size_t decimation,
                            int repeat_index) {
  const std::size_t len = inst.input.shape[1];
  const std::size_t kept = (len + decimation - 1) / decimation;
  const GridLayout& grid = physical_grid();
  WindowInstance out = inst;
  out.repeat_index = repeat_index;
  out.input = Tensor({GridLayout::kRows, GridLayout::kCols, kept, 1});
  for (int r = 0; r < GridLayout::kRows; ++r) {
    for (int c = 0; c < GridLayout::kCols; ++c) {
      const int e = grid.cell[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (e < 0) continue;  // empty scalp cell stays zero
      const double* src = inst.input.data.data() + static_cast<std::size_t>(e) * len;
      double* dst = out.input.data.data() +
                    (static_cast<std::size_t>(r) * GridLayout::kCols +
                     static_cast<std::size_t>(c)) *
                        kept;
      for (std::size_t t = 0; t < kept; ++t) dst[t] = src[t * decimation];
    }
  }
  return out;
}

}  // namespace

WindowInstance arrange_instance(const WindowInstance& inst, const OrderingStrategy& strategy,
                                const OrderingContext& ctx, int repeat_index) {
  if (inst.input.rank() != 3 || inst.input.shape[0] != kNumElectrodes)
    throw ValidationError("arrange: instance tensor is not channels x time");
  if (strategy.kind == OrderingKind::physical3d)
    return arrange_grid(inst, strategy.time_decimation, repeat_index);

  const auto order = resolve_order(strategy, ctx, repeat_index);
  const std::size_t len = inst.input.shape[1];
  WindowInstance out = inst;
  out.repeat_index = repeat_index;
  for (std::size_t p = 0; p < kNumElectrodes; ++p) {
    const std::size_t src_c = static_cast<std::size_t>(order[p]);
    std::copy_n(inst.input.data.data() + src_c * len, len, out.input.data.data() + p * len);
  }
  return out;
}

std::vector<WindowInstance> arrange(const std::vector<WindowInstance>& instances,
                                    const OrderingStrategy& strategy,
                                    const OrderingContext& ctx) {
  strategy.validate();
  const int repeats = strategy.kind == OrderingKind::random ? strategy.n_repeats : 1;
  std::vector<WindowInstance> out;
  out.reserve(instances.size() * static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r)
    for (const auto& inst : instances) out.push_back(arrange_instance(inst, strategy, ctx, r));
  return out;
}

}  // namespace eegemo
