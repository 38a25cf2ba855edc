#pragma once

// Reference implementations shared by the unit and acceptance suites. These
// deliberately avoid the library's solution paths: the generalized-lasso
// reference is an accelerated primal-dual iteration (not ADMM), the step-up
// reference works on a sorted copy, and the scalar searches are direct.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "fdrhs/genlasso.hpp"

namespace fdrhs::oracle {

// accelerated Chambolle-Pock on min 1/2||y - X b||^2 + lambda ||D b||_1
inline double genlasso_reference(const GenLassoProblem& pb, int iters) {
  const Eigen::Index p = pb.y_tilde.size();
  const Eigen::Index m = static_cast<Eigen::Index>(pb.d.num_rows());
  if (m == 0 || pb.lambda == 0.0)
    return gl_objective(pb, pb.y_tilde.cwiseQuotient(pb.x_diag));

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, p);
  for (Eigen::Index r = 0; r < m; ++r) {
    D(r, pb.d.rows[static_cast<std::size_t>(r)].a) = pb.d.rows[static_cast<std::size_t>(r)].weight;
    D(r, pb.d.rows[static_cast<std::size_t>(r)].b) = -pb.d.rows[static_cast<std::size_t>(r)].weight;
  }
  const double L = D.jacobiSvd().singularValues()(0);
  const double gamma = pb.x_diag.array().square().minCoeff();

  double tau = 1.0 / std::max(L, 1e-12), sigma = 1.0 / std::max(L, 1e-12);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p), beta_bar = beta, q = Eigen::VectorXd::Zero(m);
  double best = gl_objective(pb, beta);
  for (int n = 0; n < iters; ++n) {
    q += sigma * (D * beta_bar);
    q = q.cwiseMax(-pb.lambda).cwiseMin(pb.lambda);
    const Eigen::VectorXd v = beta - tau * (D.transpose() * q);
    Eigen::VectorXd beta_next(p);
    for (Eigen::Index i = 0; i < p; ++i)
      beta_next[i] =
          (pb.x_diag[i] * pb.y_tilde[i] + v[i] / tau) / (pb.x_diag[i] * pb.x_diag[i] + 1.0 / tau);
    const double theta = 1.0 / std::sqrt(1.0 + 2.0 * gamma * tau);
    tau *= theta;
    sigma /= theta;
    beta_bar = beta_next + theta * (beta_next - beta);
    beta = beta_next;
    if (n % 50 == 0 || n == iters - 1) best = std::min(best, gl_objective(pb, beta));
  }
  return std::min(best, gl_objective(pb, beta));
}

// step-up from the definition, on a sorted copy
inline std::vector<int> bh_reference(const Eigen::VectorXd& p, double q) {
  const int m = static_cast<int>(p.size());
  std::vector<double> sorted(p.data(), p.data() + m);
  std::sort(sorted.begin(), sorted.end());
  int kstar = -1;
  for (int k = m; k >= 1; --k)
    if (sorted[static_cast<std::size_t>(k - 1)] <= static_cast<double>(k) * q / m) {
      kstar = k;
      break;
    }
  std::vector<int> rejected;
  if (kstar >= 1) {
    const double cut = sorted[static_cast<std::size_t>(kstar - 1)];
    for (int i = 0; i < m; ++i)
      if (p[i] <= cut) rejected.push_back(i);
  }
  return rejected;
}

template <typename F>
double golden_section(F h, double lo, double hi, int iters = 200) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double h1 = h(x1), h2 = h(x2);
  for (int k = 0; k < iters; ++k) {
    if (h1 < h2) {
      b = x2;
      x2 = x1;
      h2 = h1;
      x1 = b - phi * (b - a);
      h1 = h(x1);
    } else {
      a = x1;
      x1 = x2;
      h1 = h2;
      x2 = a + phi * (b - a);
      h2 = h(x2);
    }
  }
  return 0.5 * (a + b);
}

inline GenLassoProblem random_genlasso_instance(std::mt19937& rng, int p, int max_edges,
                                                double lambda) {
  std::uniform_real_distribution<double> ydist(-2.0, 2.0);
  std::uniform_real_distribution<double> xdist(0.2, 1.0);
  std::uniform_real_distribution<double> wdist(0.25, 2.0);
  std::uniform_int_distribution<int> vdist(0, p - 1);

  GenLassoProblem pb;
  pb.lambda = lambda;
  pb.y_tilde.resize(p);
  pb.x_diag.resize(p);
  for (int i = 0; i < p; ++i) {
    pb.y_tilde[i] = ydist(rng);
    pb.x_diag[i] = xdist(rng);
  }
  pb.d.num_cols = static_cast<std::size_t>(p);
  std::set<std::pair<int, int>> seen;
  const int m = std::uniform_int_distribution<int>(p / 2, max_edges)(rng);
  while (static_cast<int>(seen.size()) < m) {
    int a = vdist(rng), b = vdist(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (seen.insert({a, b}).second) pb.d.rows.push_back({a, b, wdist(rng)});
  }
  return pb;
}

}  // namespace fdrhs::oracle
