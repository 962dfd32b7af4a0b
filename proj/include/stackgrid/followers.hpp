#pragma once

#include "stackgrid/types.hpp"

#include <utility>

namespace stackgrid {

/// One Gauss-Seidel sweep of the hyperplane game written as the affine map
/// F(nu) = L nu + M. L depends only on n.
struct BRAffineMap {
  MatrixXd L;  // n x n
  MatrixXd M;  // n x T
  double rho;  // spectral radius of L

  MatrixXd apply(const MatrixXd& nu) const { return L * nu + M; }
};

/// The linear part L_n alone (no pricing data needed).
MatrixXd sweep_matrix(int n);

BRAffineMap br_map(const VectorXd& wt, const VectorXd& rt,
                   const FlexUserSet& users);

/// Exact minimizer of user i's cost over the hyperplane sum nu = g_i,
/// holding the other rows of `profile` fixed.
VectorXd hyperplane_best_response(int i, const DemandProfile& profile,
                                  const VectorXd& wt, const VectorXd& rt,
                                  const FlexUserSet& users);

/// Exact minimizer over {sum nu = g_i, 0 <= nu(t) <= nu_max_i}, by bisection
/// on the equality multiplier with componentwise clipping.
VectorXd box_best_response(int i, const DemandProfile& profile,
                           const VectorXd& wt, const VectorXd& rt,
                           const FlexUserSet& users);

struct BrOptions {
  bool use_box = false;
  double tol = 1e-8;       // on the max-column-sum residual of the profile
  long max_sweeps = -1;    // default 10 * n * T
  const MatrixXd* init = nullptr;  // default: average strategy g_i/T
};

/// Sequential best-response dynamics; users sweep in ascending index order.
std::pair<DemandProfile, IterationTrace> best_response_dynamics(
    const VectorXd& wt, const VectorXd& rt, const FlexUserSet& users,
    const BrOptions& opt = {});

/// max absolute column sum (the matrix 1-norm used for iteration residuals)
double profile_norm1(const MatrixXd& m);

struct StrictNeCheck {
  bool ok = true;
  int violating_user = -1;
  double worst_margin = 0;  // min over sampled deviations of cost increase
  std::uint64_t seed = 0;
};

/// Samples random feasible unilateral deviations per user and checks the
/// cost strictly increases; also checks projected first-order stationarity.
StrictNeCheck verify_strict_ne(const DemandProfile& profile,
                               const VectorXd& wt, const VectorXd& rt,
                               const FlexUserSet& users, int samples,
                               bool use_box, std::uint64_t seed);

}  // namespace stackgrid
