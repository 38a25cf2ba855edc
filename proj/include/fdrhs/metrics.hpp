#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "fdrhs/grid.hpp"

namespace fdrhs {

// realized false-discovery proportion and recall against ground truth
inline std::pair<double, double> fdp_power(const std::vector<int>& selected,
                                           const std::vector<int>& truth, int p) {
  std::unordered_set<int> truth_set;
  for (int t : truth) {
    if (t < 0 || t >= p) throw std::invalid_argument("truth index out of range");
    truth_set.insert(t);
  }
  int hits = 0;
  std::unordered_set<int> seen;
  for (int s : selected) {
    if (s < 0 || s >= p) throw std::invalid_argument("selected index out of range");
    if (!seen.insert(s).second) throw std::invalid_argument("duplicate selected index");
    if (truth_set.count(s)) ++hits;
  }
  const double nsel = static_cast<double>(selected.size());
  const double fdp = (nsel - hits) / std::max(nsel, 1.0);
  const double power = static_cast<double>(hits) / std::max<double>(truth_set.size(), 1.0);
  return {fdp, power};
}

// multi-set Dice: K |intersection| / sum of fold sizes; 0 when all folds empty
inline double mdc(const std::vector<std::vector<int>>& folds) {
  if (folds.size() < 2) throw std::invalid_argument("mdc needs at least 2 folds");
  std::size_t total = 0;
  for (const auto& f : folds) total += f.size();
  if (total == 0) return 0.0;

  std::unordered_set<int> common(folds[0].begin(), folds[0].end());
  for (std::size_t k = 1; k < folds.size() && !common.empty(); ++k) {
    std::unordered_set<int> fold(folds[k].begin(), folds[k].end());
    std::unordered_set<int> kept;
    for (int v : common)
      if (fold.count(v)) kept.insert(v);
    common.swap(kept);
  }
  return static_cast<double>(folds.size()) * static_cast<double>(common.size()) /
         static_cast<double>(total);
}

// Closed-form maximum face-adjacent edge count for n lattice cells: best
// cuboid + face rectangle + line decomposition. Known to undercount for some
// n (the decomposition ignores attachment edges between components); the
// exhaustive oracle below gives the true maximum for small n.
inline long max_lattice_edges(long n) {
  if (n < 0) throw std::invalid_argument("cell count must be nonnegative");
  if (n <= 1) return 0;

  static std::mutex cache_mutex;
  static std::map<long, long> cache;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
  }

  long best = 0;
  for (long c1 = 1; c1 * c1 * c1 <= n; ++c1) {
    for (long c2 = c1; c1 * c2 * c2 <= n; ++c2) {
      for (long c3 = c2; c1 * c2 * c3 <= n; ++c3) {
        const long cube = c1 * c2 * c3;
        const long rem = n - cube;
        const long cube_edges = 3 * cube - c1 * c2 - c1 * c3 - c2 * c3;
        if (rem == 0) {
          best = std::max(best, cube_edges);
          continue;
        }
        const std::array<std::array<long, 2>, 6> faces = {
            {{c1, c2}, {c2, c1}, {c1, c3}, {c3, c1}, {c2, c3}, {c3, c2}}};
        for (const auto& f : faces) {
          const long A = f[0], B = f[1];
          if (rem > A * B) continue;  // rectangle + line must fit on the face
          for (long r1 = 1; r1 <= std::min(A, rem); ++r1) {
            const long r2 = std::min(B, rem / r1);
            if (r2 < 1) continue;
            const long line = rem - r1 * r2;
            if (line > std::max(r1, r2)) continue;
            best = std::max(best, cube_edges + 2 * r1 * r2 - r1 - r2 + line);
          }
        }
      }
    }
  }

  std::lock_guard<std::mutex> lock(cache_mutex);
  cache.emplace(n, best);
  return best;
}

namespace detail {

// cells packed as x | y<<5 | z<<10, coordinates in [0, 31)
using PackedShape = std::vector<std::uint16_t>;

inline PackedShape canonical_shape(std::vector<std::array<int, 3>> cells) {
  int mx = cells[0][0], my = cells[0][1], mz = cells[0][2];
  for (const auto& c : cells) {
    mx = std::min(mx, c[0]);
    my = std::min(my, c[1]);
    mz = std::min(mz, c[2]);
  }
  PackedShape packed;
  packed.reserve(cells.size());
  for (const auto& c : cells)
    packed.push_back(static_cast<std::uint16_t>((c[0] - mx) | ((c[1] - my) << 5) |
                                                ((c[2] - mz) << 10)));
  std::sort(packed.begin(), packed.end());
  return packed;
}

struct ShapeHash {
  std::size_t operator()(const PackedShape& s) const {
    std::size_t h = 1469598103934665603ull;
    for (std::uint16_t v : s) {
      h ^= v;
      h *= 1099511628211ull;
    }
    return h;
  }
};

inline int shape_edges(const PackedShape& s) {
  int edges = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const int dx = std::abs((s[i] & 31) - (s[j] & 31));
      const int dy = std::abs(((s[i] >> 5) & 31) - ((s[j] >> 5) & 31));
      const int dz = std::abs((s[i] >> 10) - (s[j] >> 10));
      if (dx + dy + dz == 1) ++edges;
    }
  return edges;
}

}  // namespace detail

// True maximum edge count over all n-cell lattice sets, by exhaustive
// enumeration of fixed polycubes (a maximizer is always connected: translating
// a detached component until it touches only adds edges). Feasible for n <= 8.
inline long polycube_max_edges(int n) {
  if (n < 0) throw std::invalid_argument("cell count must be nonnegative");
  if (n > 8) throw std::invalid_argument("oracle infeasible: exhaustive enumeration capped at n = 8");
  if (n <= 1) return 0;

  static std::mutex cache_mutex;
  static std::map<int, long> cache;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
  }

  using detail::PackedShape;
  std::unordered_set<PackedShape, detail::ShapeHash> level;
  level.insert(detail::canonical_shape({{8, 8, 8}}));
  static constexpr std::array<std::array<int, 3>, 6> kSteps = {
      {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

  const auto pack_offset = [](const std::array<int, 3>& c) {
    // shift by +1 so coordinates as low as -1 stay nonnegative
    return ((c[0] + 1) << 10) | ((c[1] + 1) << 5) | (c[2] + 1);
  };

  for (int size = 1; size < n; ++size) {
    std::unordered_set<PackedShape, detail::ShapeHash> next;
    for (const PackedShape& shape : level) {
      std::vector<std::array<int, 3>> cells;
      cells.reserve(shape.size() + 1);
      std::unordered_set<int> occupied;
      for (std::uint16_t c : shape) {
        cells.push_back({c & 31, (c >> 5) & 31, c >> 10});
        occupied.insert(pack_offset(cells.back()));
      }
      const std::size_t base = cells.size();
      for (std::size_t i = 0; i < base; ++i) {
        for (const auto& d : kSteps) {
          const std::array<int, 3> cand = {cells[i][0] + d[0], cells[i][1] + d[1],
                                           cells[i][2] + d[2]};
          if (occupied.count(pack_offset(cand))) continue;
          cells.push_back(cand);
          next.insert(detail::canonical_shape(cells));
          cells.pop_back();
        }
      }
    }
    level.swap(next);
  }

  long best = 0;
  for (const PackedShape& shape : level) best = std::max<long>(best, detail::shape_edges(shape));

  std::lock_guard<std::mutex> lock(cache_mutex);
  cache.emplace(n, best);
  return best;
}

enum class EdgeDenominator { paper, oracle };

// Per-fold lesion (z > 0) and bias (z <= 0) selections.
struct SelectionFolds {
  struct Fold {
    std::vector<int> lesion;
    std::vector<int> bias;
  };
  std::vector<Fold> folds;
};

namespace detail {

inline long within_set_edges(const std::vector<int>& set, const VoxelGrid& grid) {
  std::unordered_set<int> members(set.begin(), set.end());
  long edges = 0;
  static constexpr std::array<std::array<int, 3>, 3> kPos = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int v : set) {
    const Coord& c = grid.coord(v);
    for (const auto& d : kPos) {
      if (auto u = grid.index_of({c.i + d[0], c.j + d[1], c.k + d[2]}))
        if (members.count(*u)) ++edges;
    }
  }
  return edges;
}

inline double fold_density(const std::vector<int>& set, const VoxelGrid& grid,
                           EdgeDenominator mode) {
  if (set.empty()) return 0.0;
  const long denom = mode == EdgeDenominator::paper
                         ? max_lattice_edges(static_cast<long>(set.size()))
                         : polycube_max_edges(static_cast<int>(set.size()));
  if (denom <= 0) return 0.0;
  return static_cast<double>(within_set_edges(set, grid)) / static_cast<double>(denom);
}

}  // namespace detail

// 3D edge density: fold-averaged ratio of within-set face-adjacent edges to
// the maximum possible for a set of that size. Returned as (lesion, bias).
inline std::pair<double, double> edge_density_3d(const SelectionFolds& folds,
                                                 const VoxelGrid& grid,
                                                 EdgeDenominator mode = EdgeDenominator::paper) {
  if (folds.folds.empty()) throw std::invalid_argument("edge density needs at least one fold");
  double plus = 0, minus = 0;
  for (const auto& fold : folds.folds) {
    plus += detail::fold_density(fold.lesion, grid, mode);
    minus += detail::fold_density(fold.bias, grid, mode);
  }
  const double k = static_cast<double>(folds.folds.size());
  return {plus / k, minus / k};
}

}  // namespace fdrhs
