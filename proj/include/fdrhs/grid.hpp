#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fdrhs/params.hpp"

namespace fdrhs {

enum class Connectivity { face6, moore26 };

inline const char* to_string(Connectivity c) {
  return c == Connectivity::face6 ? "face6" : "moore26";
}

inline Connectivity connectivity_from_string(const std::string& s) {
  if (s == "face6") return Connectivity::face6;
  if (s == "moore26") return Connectivity::moore26;
  throw std::invalid_argument("unknown connectivity: " + s);
}

struct Coord {
  int i = 0, j = 0, k = 0;
  bool operator==(const Coord&) const = default;
};

// Masked 3D lattice. Voxel ids are 0-based and follow the order of the mask
// coordinates handed to the constructor (the voxel_id order of the mask file).
class VoxelGrid {
 public:
  VoxelGrid(std::array<int, 3> dims, std::vector<Coord> mask)
      : dims_(dims), coords_(std::move(mask)) {
    if (dims_[0] <= 0 || dims_[1] <= 0 || dims_[2] <= 0)
      throw std::invalid_argument("grid dims must be positive");
    lookup_.reserve(coords_.size() * 2);
    for (std::size_t v = 0; v < coords_.size(); ++v) {
      const Coord& c = coords_[v];
      if (!in_dims(c)) throw std::invalid_argument("mask coordinate outside grid dims");
      if (!lookup_.emplace(pack(c), static_cast<int>(v)).second)
        throw std::invalid_argument("duplicate mask coordinate");
    }
  }

  // Full box mask in lexicographic (i,j,k) order.
  static VoxelGrid full_box(std::array<int, 3> dims) {
    std::vector<Coord> coords;
    coords.reserve(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
    for (int i = 0; i < dims[0]; ++i)
      for (int j = 0; j < dims[1]; ++j)
        for (int k = 0; k < dims[2]; ++k) coords.push_back({i, j, k});
    return VoxelGrid(dims, std::move(coords));
  }

  std::size_t size() const { return coords_.size(); }
  const std::array<int, 3>& dims() const { return dims_; }
  const Coord& coord(int v) const { return coords_.at(static_cast<std::size_t>(v)); }
  const std::vector<Coord>& coords() const { return coords_; }

  std::optional<int> index_of(const Coord& c) const {
    if (!in_dims(c)) return std::nullopt;
    auto it = lookup_.find(pack(c));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  bool in_dims(const Coord& c) const {
    return c.i >= 0 && c.i < dims_[0] && c.j >= 0 && c.j < dims_[1] && c.k >= 0 && c.k < dims_[2];
  }

 private:
  std::int64_t pack(const Coord& c) const {
    return (static_cast<std::int64_t>(c.i) * dims_[1] + c.j) * dims_[2] + c.k;
  }

  std::array<int, 3> dims_;
  std::vector<Coord> coords_;
  std::unordered_map<std::int64_t, int> lookup_;
};

using Edge = std::pair<int, int>;  // (a, b) with a < b

struct LatticeGraph {
  std::size_t num_vertices = 0;
  std::vector<Edge> edges;  // lexicographically sorted
  Connectivity connectivity = Connectivity::face6;
};

// All neighbor pairs among masked voxels. One lattice step per axis under
// face6, any nonzero offset in {-1,0,1}^3 under moore26.
inline LatticeGraph build_graph(const VoxelGrid& grid, Connectivity connectivity) {
  if (grid.size() == 0) throw std::invalid_argument("empty grid");

  static constexpr std::array<std::array<int, 3>, 3> kFaceOffsets = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  std::vector<std::array<int, 3>> offsets;
  if (connectivity == Connectivity::face6) {
    offsets.assign(kFaceOffsets.begin(), kFaceOffsets.end());
  } else {
    // half of the 26-neighborhood, so each unordered pair is visited once
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj)
        for (int dk = -1; dk <= 1; ++dk) {
          if (di > 0 || (di == 0 && dj > 0) || (di == 0 && dj == 0 && dk > 0))
            offsets.push_back({di, dj, dk});
        }
  }

  LatticeGraph g;
  g.num_vertices = grid.size();
  g.connectivity = connectivity;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const Coord& c = grid.coord(static_cast<int>(v));
    for (const auto& d : offsets) {
      Coord n{c.i + d[0], c.j + d[1], c.k + d[2]};
      if (auto u = grid.index_of(n)) {
        int a = static_cast<int>(v), b = *u;
        if (a > b) std::swap(a, b);
        g.edges.emplace_back(a, b);
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

// Vertex/edge partition by z-sign: v1 holds z <= 0 (enlarged / procedural
// bias side), v2 holds z > 0 (atrophied / lesion side). e3 bridges the two.
struct SubgraphSplit {
  std::size_t num_vertices = 0;
  std::vector<int> v1, v2;
  std::vector<Edge> e1, e2, e3;
};

inline SubgraphSplit split_subgraphs(const LatticeGraph& graph, std::span<const double> z) {
  if (z.size() != graph.num_vertices)
    throw std::invalid_argument("z length does not match vertex count");
  for (double zi : z)
    if (!std::isfinite(zi)) throw std::invalid_argument("non-finite z entry");

  SubgraphSplit s;
  s.num_vertices = graph.num_vertices;
  for (std::size_t i = 0; i < z.size(); ++i)
    (z[i] <= 0.0 ? s.v1 : s.v2).push_back(static_cast<int>(i));
  for (const Edge& e : graph.edges) {
    const bool a_pos = z[static_cast<std::size_t>(e.first)] > 0.0;
    const bool b_pos = z[static_cast<std::size_t>(e.second)] > 0.0;
    (a_pos == b_pos ? (a_pos ? s.e2 : s.e1) : s.e3).push_back(e);
  }
  return s;
}

// Weighted graph difference operator: row r maps beta to
// weight_r * (beta[a_r] - beta[b_r]).
struct DiffOperator {
  struct Row {
    int a = 0, b = 0;
    double weight = 1.0;
  };
  std::vector<Row> rows;
  std::size_t num_cols = 0;

  std::size_t num_rows() const { return rows.size(); }

  std::vector<double> apply(std::span<const double> beta) const {
    if (beta.size() != num_cols) throw std::invalid_argument("operator/vector dimension mismatch");
    std::vector<double> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      out[r] = rows[r].weight * (beta[static_cast<std::size_t>(rows[r].a)] -
                                 beta[static_cast<std::size_t>(rows[r].b)]);
    return out;
  }
};

// Stacked operator [D_e1; (lambda_les/lambda_pro) D_e2;
// (lambda_proles/lambda_pro) D_e3]; rows keep the e1, e2, e3 block order.
inline DiffOperator stacked_operator(const SubgraphSplit& split, const HsParams& params) {
  if (params.lambda_pro <= 0.0)
    throw std::invalid_argument("undefined weight ratio: lambda_pro must be positive");
  if (params.lambda_les < 0.0 || params.lambda_proles < 0.0)
    throw std::invalid_argument("penalty weights must be nonnegative");

  DiffOperator d;
  d.num_cols = split.num_vertices;
  d.rows.reserve(split.e1.size() + split.e2.size() + split.e3.size());
  const double w2 = params.lambda_les / params.lambda_pro;
  const double w3 = params.lambda_proles / params.lambda_pro;
  for (const Edge& e : split.e1) d.rows.push_back({e.first, e.second, 1.0});
  for (const Edge& e : split.e2) d.rows.push_back({e.first, e.second, w2});
  for (const Edge& e : split.e3) d.rows.push_back({e.first, e.second, w3});
  return d;
}

}  // namespace fdrhs
