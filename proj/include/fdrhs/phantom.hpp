#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "fdrhs/grid.hpp"
#include "fdrhs/stats.hpp"

namespace fdrhs {

// Synthetic dataset: planted face-connected lesion blobs (atrophied in the
// disease class) and a procedural-bias shell (enlarged in the disease class)
// on a fully masked box, plus i.i.d. Gaussian noise.
struct PhantomSpec {
  std::array<int, 3> dims = {24, 24, 24};
  int n_per_class = 40;

  struct Blob {
    std::array<int, 3> center;
    double radius = 2.0;
    double effect = 1.0;  // mean shift in units of noise_sd
  };
  std::vector<Blob> lesion_blobs;

  struct Shell {
    std::array<int, 3> center;
    double radius = 2.0;  // interior ball; the shell is its face-6 boundary layer
    double effect = 1.0;
  };
  std::vector<Shell> bias_shells;

  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
      throw std::invalid_argument("dims must be positive");
    if (n_per_class < 2) throw std::invalid_argument("need at least 2 subjects per class");
    if (!(noise_sd > 0)) throw std::invalid_argument("noise_sd must be positive");
    for (const auto& b : lesion_blobs)
      if (b.effect < 0 || !(b.radius >= 0)) throw std::invalid_argument("invalid lesion blob");
    for (const auto& s : bias_shells)
      if (s.effect < 0 || !(s.radius >= 0)) throw std::invalid_argument("invalid bias shell");
  }
};

struct PhantomData {
  Dataset data;
  VoxelGrid grid;
  std::vector<int> lesion_truth;
  std::vector<int> bias_truth;
  Eigen::VectorXd mu_control;  // generating means, +1 class
  Eigen::VectorXd mu_disease;  // generating means, -1 class
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::vector<int> ball_voxels(const VoxelGrid& grid, std::array<int, 3> center,
                                    double radius) {
  std::vector<int> out;
  const int r = static_cast<int>(std::floor(radius)) + 1;
  const double r2 = radius * radius;
  for (int di = -r; di <= r; ++di)
    for (int dj = -r; dj <= r; ++dj)
      for (int dk = -r; dk <= r; ++dk) {
        if (di * di + dj * dj + dk * dk > r2) continue;
        if (auto v = grid.index_of({center[0] + di, center[1] + dj, center[2] + dk}))
          out.push_back(*v);
      }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<int> shell_voxels(const VoxelGrid& grid, std::array<int, 3> center,
                                     double radius) {
  const std::vector<int> interior = ball_voxels(grid, center, radius);
  std::unordered_set<int> inside(interior.begin(), interior.end());
  std::unordered_set<int> shell;
  static constexpr std::array<std::array<int, 3>, 6> kSteps = {
      {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};
  for (int v : interior) {
    const Coord& c = grid.coord(v);
    for (const auto& d : kSteps) {
      if (auto u = grid.index_of({c.i + d[0], c.j + d[1], c.k + d[2]}))
        if (!inside.count(*u)) shell.insert(*u);
    }
  }
  std::vector<int> out(shell.begin(), shell.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

inline PhantomData generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  VoxelGrid grid = VoxelGrid::full_box(spec.dims);
  const int p = static_cast<int>(grid.size());

  std::unordered_set<int> lesion_set, bias_set;
  for (const auto& b : spec.lesion_blobs)
    for (int v : detail::ball_voxels(grid, b.center, b.radius)) lesion_set.insert(v);
  for (const auto& s : spec.bias_shells)
    for (int v : detail::shell_voxels(grid, s.center, s.radius)) bias_set.insert(v);
  for (int v : lesion_set)
    if (bias_set.count(v))
      throw std::invalid_argument("lesion and bias truth sets overlap");

  // generating means: baseline 1, shifted in the disease class only
  const double base = 1.0;
  Eigen::VectorXd mu_control = Eigen::VectorXd::Constant(p, base);
  Eigen::VectorXd mu_disease = Eigen::VectorXd::Constant(p, base);
  for (const auto& b : spec.lesion_blobs)
    for (int v : detail::ball_voxels(grid, b.center, b.radius))
      mu_disease[v] = base - b.effect * spec.noise_sd;
  for (const auto& s : spec.bias_shells)
    for (int v : detail::shell_voxels(grid, s.center, s.radius))
      mu_disease[v] = base + s.effect * spec.noise_sd;

  const int n = 2 * spec.n_per_class;
  Dataset data;
  data.x.resize(n, p);
  data.y.resize(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const bool disease = s >= spec.n_per_class;
    data.y[static_cast<std::size_t>(s)] = disease ? -1 : 1;
    const Eigen::VectorXd& mu = disease ? mu_disease : mu_control;
    // independent per-subject substream keeps rows order-free and reproducible
    std::mt19937_64 rng(detail::splitmix64(spec.seed ^ (0x51ED270B9A3E11C7ull * (s + 1))));
    std::normal_distribution<double> noise(0.0, spec.noise_sd);
    for (int j = 0; j < p; ++j) data.x(s, j) = mu[j] + noise(rng);
  }

  PhantomData out{std::move(data), std::move(grid),
                  std::vector<int>(lesion_set.begin(), lesion_set.end()),
                  std::vector<int>(bias_set.begin(), bias_set.end()), std::move(mu_control),
                  std::move(mu_disease)};
  std::sort(out.lesion_truth.begin(), out.lesion_truth.end());
  std::sort(out.bias_truth.begin(), out.bias_truth.end());
  return out;
}

}  // namespace fdrhs
