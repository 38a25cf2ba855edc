#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "fdrhs/engine.hpp"
#include "fdrhs/stats.hpp"

namespace fdrhs {

enum class BaselineMethod { ttest, bh, localfdr };

inline const char* to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::ttest: return "ttest";
    case BaselineMethod::bh: return "bh";
    default: return "localfdr";
  }
}

struct BaselineResult {
  BaselineMethod method = BaselineMethod::ttest;
  std::vector<int> selected;
  Eigen::VectorXd scores;  // per-voxel p-values (ttest, bh) or lfdr (localfdr)
};

inline Eigen::VectorXd two_sided_p(const Eigen::VectorXd& t, int df) {
  if (df < 1) throw std::invalid_argument("degrees of freedom must be >= 1");
  const boost::math::students_t_distribution<double> tdist(static_cast<double>(df));
  Eigen::VectorXd p(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i)
    p[i] = 2.0 * boost::math::cdf(boost::math::complement(tdist, std::abs(t[i])));
  return p;
}

inline BaselineResult ttest_select(const Eigen::VectorXd& t, int df, double p_threshold) {
  if (!(p_threshold > 0 && p_threshold < 1))
    throw std::invalid_argument("p threshold must lie in (0,1)");
  BaselineResult res;
  res.method = BaselineMethod::ttest;
  res.scores = two_sided_p(t, df);
  for (Eigen::Index i = 0; i < t.size(); ++i)
    if (res.scores[i] < p_threshold) res.selected.push_back(static_cast<int>(i));
  return res;
}

// Benjamini-Hochberg step-up; every p-value tied with the largest admitted
// order statistic is rejected.
inline BaselineResult bh_select(const Eigen::VectorXd& p_values, double q) {
  if (!(q > 0 && q < 1)) throw std::invalid_argument("q must lie in (0,1)");
  const Eigen::Index m = p_values.size();
  for (Eigen::Index i = 0; i < m; ++i)
    if (!(p_values[i] >= 0 && p_values[i] <= 1))
      throw std::invalid_argument("p-values must lie in [0,1]");

  BaselineResult res;
  res.method = BaselineMethod::bh;
  res.scores = p_values;
  if (m == 0) return res;

  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return p_values[a] != p_values[b] ? p_values[a] < p_values[b] : a < b; });

  double cutoff = -1.0;
  for (Eigen::Index k = m; k >= 1; --k) {
    const double pk = p_values[order[static_cast<std::size_t>(k - 1)]];
    if (pk <= static_cast<double>(k) * q / static_cast<double>(m)) {
      cutoff = pk;
      break;
    }
  }
  if (cutoff >= 0)
    for (Eigen::Index i = 0; i < m; ++i)
      if (p_values[i] <= cutoff) res.selected.push_back(static_cast<int>(i));
  return res;
}

// LocalFDR: the two-groups posterior with the constant prior cbar. Matches
// the FDR-HS posterior when the engine runs with a constant prior.
inline BaselineResult localfdr_select(const Eigen::VectorXd& z, const TwoGroupsModel& model,
                                      double gamma) {
  if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("gamma must lie in (0,1)");
  BaselineResult res;
  res.method = BaselineMethod::localfdr;
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(z.size(), logit(model.cbar()));
  res.scores = posterior_null(beta, z, model);
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (res.scores[i] < gamma) res.selected.push_back(static_cast<int>(i));
  return res;
}

}  // namespace fdrhs
