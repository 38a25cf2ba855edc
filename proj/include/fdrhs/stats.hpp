#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "fdrhs/params.hpp"

namespace fdrhs {

constexpr double kVarianceFloor = 1e-12;  // pooled-variance floor
constexpr double kCdfClamp = 1e-12;       // keeps z finite (|z| < 7.04)
constexpr double kDensityFloor = 1e-8;    // f1 floor before renormalization

// Subject-by-voxel intensities with +/-1 labels (-1 = disease).
struct Dataset {
  Eigen::MatrixXd x;   // N x p
  std::vector<int> y;  // entries in {+1, -1}

  int n_subjects() const { return static_cast<int>(x.rows()); }
  int n_voxels() const { return static_cast<int>(x.cols()); }

  void validate() const {
    if (static_cast<std::size_t>(x.rows()) != y.size())
      throw std::invalid_argument("label count does not match subject count");
    if (x.rows() < 4) throw std::invalid_argument("need at least 4 subjects");
    int pos = 0, neg = 0;
    for (int yi : y) {
      if (yi == 1) ++pos;
      else if (yi == -1) ++neg;
      else throw std::invalid_argument("labels must be +1 or -1");
    }
    if (pos < 2 || neg < 2) throw std::invalid_argument("each class needs at least 2 subjects");
    if (!x.allFinite()) throw std::invalid_argument("non-finite intensity value");
  }
};

struct ZScores {
  Eigen::VectorXd t;
  Eigen::VectorXd z;
  int df = 0;
};

// Pooled two-sample t per voxel, oriented as mean(+1 class) - mean(-1 class),
// so voxels atrophied in the disease class come out positive.
inline ZScores two_sample_t(const Dataset& data) {
  data.validate();
  const int n = data.n_subjects();
  const int p = data.n_voxels();

  std::vector<int> pos, neg;
  for (int s = 0; s < n; ++s) (data.y[static_cast<std::size_t>(s)] == 1 ? pos : neg).push_back(s);
  const double n1 = static_cast<double>(pos.size());
  const double n2 = static_cast<double>(neg.size());

  ZScores out;
  out.df = n - 2;
  out.t.resize(p);
  const double inv_scale = 1.0 / n1 + 1.0 / n2;
  for (int j = 0; j < p; ++j) {
    double m1 = 0, m2 = 0;
    for (int s : pos) m1 += data.x(s, j);
    for (int s : neg) m2 += data.x(s, j);
    m1 /= n1;
    m2 /= n2;
    double ss = 0;
    for (int s : pos) {
      const double d = data.x(s, j) - m1;
      ss += d * d;
    }
    for (int s : neg) {
      const double d = data.x(s, j) - m2;
      ss += d * d;
    }
    const double sp2 = std::max(ss / (n1 + n2 - 2.0), kVarianceFloor);
    out.t[j] = (m1 - m2) / std::sqrt(sp2 * inv_scale);
  }
  return out;
}

// z_i = Phi^{-1}(F_df(t_i)), with the CDF clamped away from {0,1}.
inline Eigen::VectorXd z_transform(const Eigen::VectorXd& t, int df) {
  if (df < 1) throw std::invalid_argument("degrees of freedom must be >= 1");
  const boost::math::students_t_distribution<double> tdist(static_cast<double>(df));
  const boost::math::normal_distribution<double> norm;
  Eigen::VectorXd z(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    double u = boost::math::cdf(tdist, t[i]);
    u = std::clamp(u, kCdfClamp, 1.0 - kCdfClamp);
    z[i] = boost::math::quantile(norm, u);
  }
  return z;
}

inline ZScores compute_zscores(const Dataset& data) {
  ZScores s = two_sample_t(data);
  s.z = z_transform(s.t, s.df);
  return s;
}

// Density tabulated on a strictly increasing grid; linear interpolation
// inside the grid, zero outside.
struct TabulatedDensity {
  Eigen::VectorXd grid;
  Eigen::VectorXd values;

  double at(double x) const {
    const Eigen::Index n = grid.size();
    if (n == 0) return 0.0;
    if (x < grid[0] || x > grid[n - 1]) return 0.0;
    const double* begin = grid.data();
    const double* it = std::upper_bound(begin, begin + n, x);
    Eigen::Index hi = std::min<Eigen::Index>(it - begin, n - 1);
    if (hi == 0) return values[0];
    const Eigen::Index lo = hi - 1;
    const double t = (x - grid[lo]) / (grid[hi] - grid[lo]);
    return values[lo] + t * (values[hi] - values[lo]);
  }

  double trapezoid() const {
    double s = 0;
    for (Eigen::Index i = 0; i + 1 < grid.size(); ++i)
      s += 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
    return s;
  }
};

inline double silverman_bandwidth(const Eigen::VectorXd& z) {
  const Eigen::Index n = z.size();
  if (n < 2) return 1.0;
  const double mean = z.mean();
  const double sd = std::sqrt((z.array() - mean).square().sum() / static_cast<double>(n - 1));
  const double h = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
  return h > 0 ? h : 1.0;
}

// Gaussian-kernel density estimate on the given grid.
inline TabulatedDensity kernel_density(const Eigen::VectorXd& z, const Eigen::VectorXd& grid,
                                       double bandwidth) {
  if (z.size() < 1) throw std::invalid_argument("kernel density needs at least one point");
  if (!(bandwidth > 0)) throw std::invalid_argument("bandwidth must be positive");
  for (Eigen::Index i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1])) throw std::invalid_argument("grid must be strictly increasing");

  static const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
  TabulatedDensity d;
  d.grid = grid;
  d.values = Eigen::VectorXd::Zero(grid.size());
  const double inv_h = 1.0 / bandwidth;
  const double scale = inv_sqrt_2pi * inv_h / static_cast<double>(z.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    double acc = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double u = (grid[g] - z[i]) * inv_h;
      acc += std::exp(-0.5 * u * u);
    }
    d.values[g] = acc * scale;
  }
  return d;
}

struct CentralMatchFit {
  double delta0 = 0;
  double sigma0 = 1;
  double cbar = 0.001;
  // quadratic coefficients of the log-density fit a + b z + c z^2
  double a = 0, b = 0, c = 0;
};

inline double clamp_cbar(double cbar) { return std::clamp(cbar, 0.001, 0.999); }

// Central matching: weighted quadratic fit to log f on |z| <= window.
// The curvature gives sigma0, the linear term delta0, the amplitude 1 - cbar.
inline CentralMatchFit central_matching(const TabulatedDensity& f, double window = 1.0) {
  const Eigen::Index n = f.grid.size();
  if (n < 5) throw std::invalid_argument("density grid too small for central matching");
  if (f.grid[0] > -window || f.grid[n - 1] < window)
    throw std::invalid_argument("density grid does not cover the central matching window");

  // weighted normal equations for [1, z, z^2]
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  int used = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zi = f.grid[i];
    if (std::abs(zi) > window) continue;
    const double fi = f.values[i];
    if (!(fi > 0)) continue;
    const double w = fi;
    const Eigen::Vector3d phi(1.0, zi, zi * zi);
    ata += w * phi * phi.transpose();
    atb += w * std::log(fi) * phi;
    ++used;
  }
  if (used < 5) throw numeric_error("empirical null fit failed: too few usable grid points");
  const Eigen::Vector3d coef = ata.ldlt().solve(atb);
  const double a = coef[0], b = coef[1], c = coef[2];
  // c must be genuinely negative; near-zero curvature means no usable peak
  if (!(c < -1e-10)) throw numeric_error("empirical null fit failed: no central peak");

  CentralMatchFit fit;
  fit.a = a;
  fit.b = b;
  fit.c = c;
  fit.sigma0 = std::sqrt(-1.0 / (2.0 * c));
  fit.delta0 = -b / (2.0 * c);
  const double p0 = std::exp(a - b * b / (4.0 * c)) * fit.sigma0 * std::sqrt(2.0 * M_PI);
  fit.cbar = clamp_cbar(1.0 - p0);
  return fit;
}

// Two-groups mixture f = cbar f1 + (1 - cbar) f0 with empirical null
// f0 = N(delta0, sigma0^2) and f1 recovered by inverting the mixture.
class TwoGroupsModel {
 public:
  TwoGroupsModel(double delta0, double sigma0, double cbar, TabulatedDensity marginal,
                 TabulatedDensity f1_table, double f1_normalizer)
      : delta0_(delta0),
        sigma0_(sigma0),
        cbar_(cbar),
        marginal_(std::move(marginal)),
        f1_(std::move(f1_table)),
        f1_normalizer_(f1_normalizer) {
    if (!(sigma0_ > 0)) throw std::invalid_argument("sigma0 must be positive");
    if (!(cbar_ > 0 && cbar_ < 1)) throw std::invalid_argument("cbar must lie in (0,1)");
  }

  double delta0() const { return delta0_; }
  double sigma0() const { return sigma0_; }
  double cbar() const { return cbar_; }
  const TabulatedDensity& marginal() const { return marginal_; }
  const TabulatedDensity& f1_table() const { return f1_; }
  // trapezoid mass of the floored, un-normalized f1 (diagnostic)
  double f1_normalizer() const { return f1_normalizer_; }

  double f0(double z) const {
    const double u = (z - delta0_) / sigma0_;
    const double v = std::exp(-0.5 * u * u) / (sigma0_ * std::sqrt(2.0 * M_PI));
    return std::max(v, 1e-300);
  }

  double f1(double z) const { return std::max(f1_.at(z), kDensityFloor); }

 private:
  double delta0_, sigma0_, cbar_;
  TabulatedDensity marginal_;
  TabulatedDensity f1_;
  double f1_normalizer_;
};

struct ModelOptions {
  double bandwidth = 0;  // <= 0 selects the Silverman rule
  int grid_size = 512;
  double cm_window = 1.0;
  bool theoretical_null = false;  // fix f0 = N(0,1), amplitude-match cbar
};

// f1 = (f - (1-cbar) f0) / cbar on the grid, floored and renormalized.
// Returns the tabulated f1 and the pre-normalization trapezoid mass.
inline std::pair<TabulatedDensity, double> invert_mixture(const TabulatedDensity& marginal,
                                                          double delta0, double sigma0,
                                                          double cbar) {
  if (!(sigma0 > 0)) throw std::invalid_argument("sigma0 must be positive");
  if (!(cbar > 0 && cbar < 1)) throw std::invalid_argument("cbar must lie in (0,1)");
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
  TabulatedDensity f1;
  f1.grid = marginal.grid;
  f1.values.resize(marginal.grid.size());
  for (Eigen::Index i = 0; i < marginal.grid.size(); ++i) {
    const double u = (marginal.grid[i] - delta0) / sigma0;
    const double f0i = std::exp(-0.5 * u * u) * inv_sqrt_2pi / sigma0;
    f1.values[i] = std::max((marginal.values[i] - (1.0 - cbar) * f0i) / cbar, kDensityFloor);
  }
  const double normalizer = f1.trapezoid();
  if (!(normalizer > 0)) throw numeric_error("degenerate non-null density");
  f1.values /= normalizer;
  return {std::move(f1), normalizer};
}

inline TwoGroupsModel make_two_groups_model(const Eigen::VectorXd& z,
                                            const ModelOptions& opt = {}) {
  if (z.size() < 2) throw std::invalid_argument("need at least 2 z-scores");
  if (opt.grid_size < 16) throw std::invalid_argument("grid_size too small");

  const double lo = z.minCoeff() - 1.0;
  const double hi = z.maxCoeff() + 1.0;
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(opt.grid_size, lo, hi);
  const double h = opt.bandwidth > 0 ? opt.bandwidth : silverman_bandwidth(z);
  TabulatedDensity marginal = kernel_density(z, grid, h);

  double delta0, sigma0, cbar;
  if (opt.theoretical_null) {
    delta0 = 0.0;
    sigma0 = 1.0;
    cbar = clamp_cbar(1.0 - marginal.at(0.0) * std::sqrt(2.0 * M_PI));
  } else {
    const CentralMatchFit fit = central_matching(marginal, opt.cm_window);
    delta0 = fit.delta0;
    sigma0 = fit.sigma0;
    cbar = fit.cbar;
  }

  auto [f1, normalizer] = invert_mixture(marginal, delta0, sigma0, cbar);
  return TwoGroupsModel(delta0, sigma0, cbar, std::move(marginal), std::move(f1), normalizer);
}

}  // namespace fdrhs
