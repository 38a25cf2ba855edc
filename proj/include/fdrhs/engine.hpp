#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdrhs/genlasso.hpp"
#include "fdrhs/grid.hpp"
#include "fdrhs/params.hpp"
#include "fdrhs/stats.hpp"

namespace fdrhs {

inline double sigmoid(double x) {
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// log(1 + e^x) without overflow
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

namespace detail {

inline void check_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string("dimension mismatch: ") + what);
}

inline Eigen::VectorXd eval_density(const Eigen::VectorXd& z, const TwoGroupsModel& model,
                                    bool alt) {
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = alt ? model.f1(z[i]) : model.f0(z[i]);
  return out;
}

inline double marginal_nll_pre(const Eigen::VectorXd& beta, const Eigen::VectorXd& f0v,
                               const Eigen::VectorXd& f1v) {
  double acc = 0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    const double c = sigmoid(beta[i]);
    acc -= std::log(c * f1v[i] + (1.0 - c) * f0v[i]);
  }
  return acc;
}

inline double tv_penalty(const Eigen::VectorXd& beta, const SubgraphSplit& split,
                         const HsParams& params) {
  double p1 = 0, p2 = 0, p3 = 0;
  for (const Edge& e : split.e1) p1 += std::abs(beta[e.first] - beta[e.second]);
  for (const Edge& e : split.e2) p2 += std::abs(beta[e.first] - beta[e.second]);
  for (const Edge& e : split.e3) p3 += std::abs(beta[e.first] - beta[e.second]);
  return params.lambda_pro * p1 + params.lambda_les * p2 + params.lambda_proles * p3;
}

inline Eigen::VectorXd e_step_pre(const Eigen::VectorXd& beta, const Eigen::VectorXd& f0v,
                                  const Eigen::VectorXd& f1v) {
  Eigen::VectorXd s(beta.size());
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    const double c = sigmoid(beta[i]);
    const double a = c * f1v[i];
    s[i] = a / (a + (1.0 - c) * f0v[i]);
  }
  return s;
}

}  // namespace detail

// -sum_i log(c_i f1(z_i) + (1-c_i) f0(z_i)) with c_i = sigmoid(beta_i)
inline double marginal_nll(const Eigen::VectorXd& beta, const Eigen::VectorXd& z,
                           const TwoGroupsModel& model) {
  detail::check_same_size(beta.size(), z.size(), "beta vs z");
  return detail::marginal_nll_pre(beta, detail::eval_density(z, model, false),
                                  detail::eval_density(z, model, true));
}

// marginal nll plus the three heterogenous fused penalties
inline double penalized_objective(const Eigen::VectorXd& beta, const Eigen::VectorXd& z,
                                  const TwoGroupsModel& model, const SubgraphSplit& split,
                                  const HsParams& params) {
  detail::check_same_size(beta.size(), static_cast<Eigen::Index>(split.num_vertices),
                          "beta vs split");
  return marginal_nll(beta, z, model) + detail::tv_penalty(beta, split, params);
}

// latent-variable surrogate: sum_i { log(1 + e^{beta_i}) - s_i beta_i }
inline double surrogate_nll(const Eigen::VectorXd& beta, const Eigen::VectorXd& s) {
  detail::check_same_size(beta.size(), s.size(), "beta vs s");
  double acc = 0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    if (s[i] < 0.0 || s[i] > 1.0) throw std::invalid_argument("responsibilities must lie in [0,1]");
    acc += softplus(beta[i]) - s[i] * beta[i];
  }
  return acc;
}

// posterior non-null responsibilities given the current prior
inline Eigen::VectorXd e_step(const Eigen::VectorXd& beta, const Eigen::VectorXd& z,
                              const TwoGroupsModel& model) {
  detail::check_same_size(beta.size(), z.size(), "beta vs z");
  return detail::e_step_pre(beta, detail::eval_density(z, model, false),
                            detail::eval_density(z, model, true));
}

// posterior null probabilities; complements e_step exactly
inline Eigen::VectorXd posterior_null(const Eigen::VectorXd& beta, const Eigen::VectorXd& z,
                                      const TwoGroupsModel& model) {
  return Eigen::VectorXd::Ones(beta.size()) - e_step(beta, z, model);
}

// Quadratic expansion of the surrogate at beta_k: weights w = c(1-c) floored,
// gradient c - s, working response y = sqrt(w) (beta_k - grad / w).
inline GenLassoProblem assemble_mstep(const Eigen::VectorXd& beta_k, const Eigen::VectorXd& s_tilde,
                                      const SubgraphSplit& split, const HsParams& params) {
  detail::check_same_size(beta_k.size(), s_tilde.size(), "beta vs s_tilde");
  detail::check_same_size(beta_k.size(), static_cast<Eigen::Index>(split.num_vertices),
                          "beta vs split");
  const Eigen::Index p = beta_k.size();

  GenLassoProblem pb;
  pb.y_tilde.resize(p);
  pb.x_diag.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double c = sigmoid(beta_k[i]);
    const double w = std::max(c * (1.0 - c), params.w_floor);
    const double grad = c - s_tilde[i];
    const double sw = std::sqrt(w);
    pb.x_diag[i] = sw;
    pb.y_tilde[i] = sw * (beta_k[i] - grad / w);
  }
  const bool penalty_active =
      params.lambda_pro > 0 || params.lambda_les > 0 || params.lambda_proles > 0;
  if (penalty_active) {
    pb.d = stacked_operator(split, params);
    pb.lambda = params.lambda_pro;
  } else {
    pb.d.num_cols = split.num_vertices;  // empty operator, no penalty
    pb.lambda = 0.0;
  }
  return pb;
}

struct FitState {
  Eigen::VectorXd beta;
  Eigen::VectorXd c;        // sigmoid(beta)
  Eigen::VectorXd s_tilde;  // non-null responsibilities at the final beta
  Eigen::VectorXd lfdr;     // 1 - s_tilde
  std::vector<double> objective_trace;
};

struct Selection {
  std::vector<int> selected;
  std::vector<int> group_bias;    // selected with z <= 0
  std::vector<int> group_lesion;  // selected with z > 0
};

inline Selection select_features(const Eigen::VectorXd& lfdr, const Eigen::VectorXd& z,
                                 double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  detail::check_same_size(lfdr.size(), z.size(), "lfdr vs z");
  Selection sel;
  for (Eigen::Index i = 0; i < lfdr.size(); ++i) {
    if (lfdr[i] < gamma) {
      sel.selected.push_back(static_cast<int>(i));
      (z[i] <= 0 ? sel.group_bias : sel.group_lesion).push_back(static_cast<int>(i));
    }
  }
  return sel;
}

struct FitResult {
  FitState state;
  std::vector<int> selected;
  std::vector<int> group_bias;
  std::vector<int> group_lesion;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> warnings;
};

// EM over the latent-variable surrogate with a step-halving safeguard: a step
// is accepted only if the penalized marginal objective does not increase
// (1e-10 slack), otherwise the generalized-lasso step is damped toward the
// current iterate, up to 20 halvings.
inline FitResult fit_em(const Eigen::VectorXd& z, const TwoGroupsModel& model,
                        const SubgraphSplit& split, const HsParams& params,
                        const Eigen::VectorXd* beta_init = nullptr) {
  params.validate();
  detail::check_same_size(z.size(), static_cast<Eigen::Index>(split.num_vertices), "z vs split");
  const Eigen::Index p = z.size();

  FitResult result;
  if (auto w = params.ordering_warning()) result.warnings.push_back(*w);

  const Eigen::VectorXd f0v = detail::eval_density(z, model, false);
  const Eigen::VectorXd f1v = detail::eval_density(z, model, true);
  const auto clamp_vec = [&](Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < b.size(); ++i)
      b[i] = std::clamp(b[i], -params.beta_clamp, params.beta_clamp);
  };
  const auto objective = [&](const Eigen::VectorXd& b) {
    return detail::marginal_nll_pre(b, f0v, f1v) + detail::tv_penalty(b, split, params);
  };

  Eigen::VectorXd beta;
  if (beta_init) {
    detail::check_same_size(beta_init->size(), p, "beta_init vs z");
    beta = *beta_init;
  } else {
    beta = Eigen::VectorXd::Constant(p, logit(model.cbar()));
  }
  clamp_vec(beta);

  double g = objective(beta);
  result.state.objective_trace.push_back(g);

  GenLassoProblem pb = assemble_mstep(beta, Eigen::VectorXd::Constant(p, 0.5), split, params);
  GenLassoSolver solver(pb.d, params.solver);

  constexpr double kDescentSlack = 1e-10;
  constexpr int kMaxHalvings = 20;
  bool stalled = false;

  for (int iter = 0; iter < params.em_max_iter; ++iter) {
    const Eigen::VectorXd s_tilde = detail::e_step_pre(beta, f0v, f1v);
    pb = assemble_mstep(beta, s_tilde, split, params);
    const SolveReport rep = solver.solve(pb);
    if (!rep.converged)
      result.warnings.push_back("generalized-lasso solve hit max_iter at EM iteration " +
                                std::to_string(iter + 1));

    const Eigen::VectorXd direction = rep.beta - beta;
    double eta = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    double g_new = g;
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
      candidate = beta + eta * direction;
      clamp_vec(candidate);
      g_new = objective(candidate);
      if (g_new <= g + kDescentSlack) {
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) {
      stalled = true;
      break;
    }

    const double rel_change = std::abs(g - g_new) / (1.0 + std::abs(g));
    beta = candidate;
    g = g_new;
    result.state.objective_trace.push_back(g);
    ++result.iterations;
    if (rel_change <= params.em_tol) {
      result.converged = true;
      break;
    }
  }
  if (stalled) result.converged = false;

  result.state.beta = beta;
  result.state.c.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) result.state.c[i] = sigmoid(beta[i]);
  result.state.s_tilde = detail::e_step_pre(beta, f0v, f1v);
  result.state.lfdr = Eigen::VectorXd::Ones(p) - result.state.s_tilde;

  Eigen::VectorXd zvec = z;
  Selection sel = select_features(result.state.lfdr, zvec, params.gamma);
  result.selected = std::move(sel.selected);
  result.group_bias = std::move(sel.group_bias);
  result.group_lesion = std::move(sel.group_lesion);
  return result;
}

}  // namespace fdrhs
