#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fdrhs/engine.hpp"
#include "fdrhs/grid.hpp"
#include "fdrhs/params.hpp"
#include "fdrhs/stats.hpp"

namespace fdrhs {

struct PipelineOptions {
  Connectivity connectivity = Connectivity::face6;
  ModelOptions model;
  // skip the EM and keep the constant prior logit(cbar); the resulting
  // posterior is exactly the LocalFDR posterior
  bool constant_prior = false;
};

struct PipelineResult {
  ZScores zs;
  TwoGroupsModel model;
  LatticeGraph graph;
  SubgraphSplit split;
  FitResult fit;
};

inline PipelineResult run_fdrhs(const Dataset& data, const VoxelGrid& grid,
                                const HsParams& params, const PipelineOptions& opt = {}) {
  if (static_cast<std::size_t>(data.x.cols()) != grid.size())
    throw std::invalid_argument("data columns do not match mask voxel count");
  params.validate();

  ZScores zs = compute_zscores(data);
  TwoGroupsModel model = make_two_groups_model(zs.z, opt.model);
  LatticeGraph graph = build_graph(grid, opt.connectivity);
  SubgraphSplit split =
      split_subgraphs(graph, std::span<const double>(zs.z.data(), static_cast<std::size_t>(zs.z.size())));

  FitResult fit;
  if (opt.constant_prior) {
    const Eigen::Index p = zs.z.size();
    Eigen::VectorXd beta = Eigen::VectorXd::Constant(p, logit(model.cbar()));
    for (Eigen::Index i = 0; i < p; ++i)
      beta[i] = std::clamp(beta[i], -params.beta_clamp, params.beta_clamp);
    fit.state.beta = beta;
    fit.state.c.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) fit.state.c[i] = sigmoid(beta[i]);
    fit.state.s_tilde = e_step(beta, zs.z, model);
    fit.state.lfdr = Eigen::VectorXd::Ones(p) - fit.state.s_tilde;
    fit.state.objective_trace.push_back(penalized_objective(beta, zs.z, model, split, params));
    fit.converged = true;
    fit.iterations = 0;
    Selection sel = select_features(fit.state.lfdr, zs.z, params.gamma);
    fit.selected = std::move(sel.selected);
    fit.group_bias = std::move(sel.group_bias);
    fit.group_lesion = std::move(sel.group_lesion);
  } else {
    fit = fit_em(zs.z, model, split, params);
  }

  return PipelineResult{std::move(zs), std::move(model), std::move(graph), std::move(split),
                        std::move(fit)};
}

// Subjects kept for training fold `fold` of `n_folds`: each class is dealt
// round-robin into blocks and block `fold` is held out.
inline std::vector<int> stratified_fold_keep(const std::vector<int>& y, int n_folds, int fold) {
  if (n_folds < 2) throw std::invalid_argument("need at least 2 folds");
  if (fold < 0 || fold >= n_folds) throw std::invalid_argument("fold index out of range");
  std::vector<int> keep;
  int pos_seen = 0, neg_seen = 0;
  for (std::size_t s = 0; s < y.size(); ++s) {
    int& seen = y[s] == 1 ? pos_seen : neg_seen;
    if (seen % n_folds != fold) keep.push_back(static_cast<int>(s));
    ++seen;
  }
  return keep;
}

inline Dataset subset_subjects(const Dataset& data, const std::vector<int>& keep) {
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(keep.size()), data.x.cols());
  out.y.reserve(keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.x.row(static_cast<Eigen::Index>(r)) = data.x.row(keep[r]);
    out.y.push_back(data.y.at(static_cast<std::size_t>(keep[r])));
  }
  return out;
}

}  // namespace fdrhs
