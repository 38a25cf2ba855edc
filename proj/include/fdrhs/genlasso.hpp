#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "fdrhs/grid.hpp"
#include "fdrhs/params.hpp"

namespace fdrhs {

using SpMat = Eigen::SparseMatrix<double>;

// min over beta of 1/2 ||y_tilde - diag(x_diag) beta||^2 + lambda ||D beta||_1
struct GenLassoProblem {
  Eigen::VectorXd y_tilde;
  Eigen::VectorXd x_diag;  // diagonal of X-tilde, i.e. sqrt(w_i)
  DiffOperator d;
  double lambda = 0;

  void validate() const {
    const Eigen::Index p = y_tilde.size();
    if (x_diag.size() != p) throw std::invalid_argument("y_tilde/x_diag dimension mismatch");
    if (d.num_cols != static_cast<std::size_t>(p))
      throw std::invalid_argument("operator column count does not match p");
    if (lambda < 0) throw std::invalid_argument("lambda must be nonnegative");
    for (Eigen::Index i = 0; i < p; ++i)
      if (!(x_diag[i] > 0) || !std::isfinite(x_diag[i]))
        throw std::invalid_argument("x_diag entries must be positive and finite");
    if (!y_tilde.allFinite()) throw std::invalid_argument("non-finite y_tilde");
  }
};

struct SolveReport {
  Eigen::VectorXd beta;
  int iterations = 0;
  double primal_residual = 0;
  double dual_residual = 0;
  double objective = 0;
  bool converged = true;
};

inline double gl_objective(const GenLassoProblem& pb, const Eigen::VectorXd& beta) {
  if (beta.size() != pb.y_tilde.size()) throw std::invalid_argument("beta dimension mismatch");
  if (!beta.allFinite()) throw std::invalid_argument("non-finite beta");
  const double quad = 0.5 * (pb.y_tilde - pb.x_diag.cwiseProduct(beta)).squaredNorm();
  double pen = 0;
  for (const auto& r : pb.d.rows)
    pen += std::abs(r.weight * (beta[r.a] - beta[r.b]));
  return quad + pb.lambda * pen;
}

// ADMM on the split alpha = D beta with scaled duals. The quadratic
// subproblem matrix diag(x^2) + rho D^T D has a fixed sparsity pattern, so the
// symbolic analysis is done once per solver and only the numeric
// factorization is refreshed when the weights change; duals persist across
// solves to warm-start the next call.
class GenLassoSolver {
 public:
  GenLassoSolver(const DiffOperator& d, SolveConfig cfg = {}) : cfg_(cfg) {
    p_ = static_cast<Eigen::Index>(d.num_cols);
    m_ = static_cast<Eigen::Index>(d.num_rows());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(d.rows.size() * 2);
    for (std::size_t r = 0; r < d.rows.size(); ++r) {
      trips.emplace_back(static_cast<int>(r), d.rows[r].a, d.rows[r].weight);
      trips.emplace_back(static_cast<int>(r), d.rows[r].b, -d.rows[r].weight);
    }
    D_.resize(m_, p_);
    D_.setFromTriplets(trips.begin(), trips.end());
    D_.makeCompressed();
    Dt_ = D_.transpose();
    DtD_ = (Dt_ * D_).pruned();
    DtD_.makeCompressed();
    use_direct_ = DtD_.nonZeros() <= cfg_.direct_nnz_cap;
    rows_ = d.rows;
  }

  void reset_warm_start() { warm_ = false; }

  SolveReport solve(const GenLassoProblem& pb) {
    pb.validate();
    if (pb.y_tilde.size() != p_) throw std::invalid_argument("problem size does not match solver");

    SolveReport rep;
    // lambda = 0 (or no edges): unpenalized diagonal least squares, exact.
    if (pb.lambda == 0.0 || m_ == 0) {
      rep.beta = pb.y_tilde.cwiseQuotient(pb.x_diag);
      rep.objective = gl_objective(pb, rep.beta);
      warm_beta_ = rep.beta;
      warm_alpha_ = D_ * rep.beta;
      warm_dual_ = Eigen::VectorXd::Zero(m_);
      warm_ = true;
      return rep;
    }

    const double rho = cfg_.rho > 0 ? cfg_.rho : std::max(pb.lambda, 1.0);
    const Eigen::VectorXd xsq = pb.x_diag.array().square();
    SpMat A = DtD_ * rho;
    for (Eigen::Index i = 0; i < p_; ++i) A.coeffRef(i, i) += xsq[i];
    A.makeCompressed();

    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
    if (use_direct_) {
      if (!pattern_ready_) {
        ldlt_.analyzePattern(A);
        pattern_ready_ = true;
      }
      ldlt_.factorize(A);
      if (ldlt_.info() != Eigen::Success) throw numeric_error("sparse factorization failed");
    } else {
      cg.setTolerance(cfg_.cg_tol);
      cg.setMaxIterations(cfg_.cg_max_iter);
      cg.compute(A);
    }

    Eigen::VectorXd beta = warm_ ? warm_beta_ : pb.y_tilde.cwiseQuotient(pb.x_diag);
    Eigen::VectorXd alpha = warm_ ? warm_alpha_ : Eigen::VectorXd(D_ * beta);
    Eigen::VectorXd dual = warm_ ? warm_dual_ : Eigen::VectorXd::Zero(m_);

    const Eigen::VectorXd xty = pb.x_diag.cwiseProduct(pb.y_tilde);
    const double thresh = pb.lambda / rho;
    const double sqrt_m = std::sqrt(static_cast<double>(m_));
    const double sqrt_p = std::sqrt(static_cast<double>(p_));

    rep.converged = false;
    int it = 0;
    Eigen::VectorXd dbeta(m_), alpha_prev(m_);
    while (it < cfg_.max_iter) {
      ++it;
      const Eigen::VectorXd rhs = xty + rho * (Dt_ * (alpha - dual));
      beta = use_direct_ ? ldlt_.solve(rhs).eval() : cg.solveWithGuess(rhs, beta).eval();
      dbeta.noalias() = D_ * beta;

      alpha_prev = alpha;
      // over-relaxed mixing of D beta with the previous alpha
      const double orx = std::clamp(cfg_.over_relax, 1.0, 1.8);
      const Eigen::VectorXd dhat = orx == 1.0
                                       ? dbeta
                                       : Eigen::VectorXd(orx * dbeta + (1.0 - orx) * alpha_prev);
      alpha = dhat + dual;
      for (Eigen::Index r = 0; r < m_; ++r) {
        const double v = alpha[r];
        const double mag = std::abs(v) - thresh;
        alpha[r] = mag > 0 ? (v > 0 ? mag : -mag) : 0.0;
      }
      dual += dhat - alpha;

      rep.primal_residual = (dbeta - alpha).norm();
      rep.dual_residual = rho * (Dt_ * (alpha - alpha_prev)).norm();
      const double eps_pri =
          sqrt_m * cfg_.eps_abs + cfg_.eps_rel * std::max(dbeta.norm(), alpha.norm());
      const double eps_dual = sqrt_p * cfg_.eps_abs + cfg_.eps_rel * rho * (Dt_ * dual).norm();
      if (rep.primal_residual <= eps_pri && rep.dual_residual <= eps_dual) {
        rep.converged = true;
        break;
      }
    }

    rep.iterations = it;
    rep.beta = beta;
    rep.objective = gl_objective(pb, beta);
    warm_beta_ = beta;
    warm_alpha_ = alpha;
    warm_dual_ = dual;
    warm_ = true;
    return rep;
  }

 private:
  SolveConfig cfg_;
  Eigen::Index p_ = 0, m_ = 0;
  SpMat D_, Dt_, DtD_;
  std::vector<DiffOperator::Row> rows_;
  bool use_direct_ = true;
  bool pattern_ready_ = false;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  bool warm_ = false;
  Eigen::VectorXd warm_beta_, warm_alpha_, warm_dual_;
};

inline SolveReport solve_genlasso(const GenLassoProblem& pb, SolveConfig cfg = {}) {
  GenLassoSolver solver(pb.d, cfg);
  return solver.solve(pb);
}

}  // namespace fdrhs
