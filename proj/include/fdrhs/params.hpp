#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace fdrhs {

// Thrown when an input file is missing or violates its schema.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a numerical procedure cannot produce a valid result
// (e.g. the empirical-null fit has no central peak).
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ADMM solver knobs. rho <= 0 selects the default penalty max(lambda, 1).
struct SolveConfig {
  double rho = 0.0;
  double eps_abs = 1e-8;
  double eps_rel = 1e-6;
  int max_iter = 5000;
  double over_relax = 1.6;  // in [1, 1.8]; 1 disables over-relaxation
  // The quadratic subproblem uses a cached sparse LDLT factorization unless
  // the normal-matrix nonzero count exceeds this cap, in which case a
  // Jacobi-preconditioned conjugate gradient is used instead.
  std::int64_t direct_nnz_cap = 50'000'000;
  double cg_tol = 1e-10;
  int cg_max_iter = 20000;
};

// Penalty weights, selection threshold and EM numerics.
//
// lambda_pro weighs edges between non-positive-z voxels, lambda_les edges
// between positive-z voxels, lambda_proles the bridging edges. The
// recommended ordering lambda_les <= lambda_pro <= lambda_proles is advisory:
// violating it produces a warning, not an error.
struct HsParams {
  double lambda_pro = 0.5;
  double lambda_les = 0.3;
  double lambda_proles = 1.0;
  double gamma = 0.2;

  int em_max_iter = 200;
  double em_tol = 1e-6;
  double beta_clamp = 15.0;
  double w_floor = 1e-4;

  SolveConfig solver;

  void validate() const {
    if (lambda_pro < 0 || lambda_les < 0 || lambda_proles < 0)
      throw std::invalid_argument("penalty weights must be nonnegative");
    if (!(gamma > 0.0 && gamma < 1.0))
      throw std::invalid_argument("gamma must lie in (0,1)");
    if (em_max_iter < 1) throw std::invalid_argument("em_max_iter must be >= 1");
    if (!(beta_clamp > 0)) throw std::invalid_argument("beta_clamp must be positive");
    if (!(w_floor > 0)) throw std::invalid_argument("w_floor must be positive");
    const bool any_active = lambda_pro > 0 || lambda_les > 0 || lambda_proles > 0;
    if (any_active && lambda_pro == 0)
      throw std::invalid_argument("undefined weight ratio: lambda_pro must be positive when any penalty is active");
  }

  std::optional<std::string> ordering_warning() const {
    if (lambda_les <= lambda_pro && lambda_pro <= lambda_proles) return std::nullopt;
    return "hyper-parameter ordering lambda_les <= lambda_pro <= lambda_proles violated (" +
           std::to_string(lambda_les) + ", " + std::to_string(lambda_pro) + ", " +
           std::to_string(lambda_proles) + ")";
  }
};

}  // namespace fdrhs
