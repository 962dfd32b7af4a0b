#pragma once

#include "stackgrid/types.hpp"

namespace stackgrid {

/// Discretization of the reduced strategy space: `resolution` intervals per
/// coordinate, with per-user bounds on each of the first T-1 slots.
struct GridSpec {
  int resolution;
  MatrixXd lower;  // n x (T-1)
  MatrixXd upper;  // n x (T-1)

  static GridSpec uniform(int resolution, const FlexUserSet& users, int T,
                          double lo_frac = 0.0, double hi_frac = 1.0);
};

struct GridSearchResult {
  DemandProfile profile;
  double certificate_margin;  // max over users of best unilateral improvement
  int sweeps;
};

/// Iterated best response on the grid (hyperplane game, last slot implied);
/// stops when no unilateral grid deviation lowers any user's cost.
/// `parallel` switches the per-user enumeration to the OpenMP kernel; both
/// paths are deterministic and produce identical results.
GridSearchResult grid_search_ne(const VectorXd& wt, const VectorXd& rt,
                                const FlexUserSet& users, const GridSpec& spec,
                                bool parallel = true);

/// Central differences of user i's cost in the reduced coordinates.
VectorXd finite_diff_gradient(int i, const DemandProfile& profile,
                              const VectorXd& wt, const VectorXd& rt,
                              const FlexUserSet& users, double h_rel = 1e-6);

/// Gradient of user i's cost in full slot coordinates:
/// 2 nu_i(t)/w~(t) + h_i(t).
VectorXd cost_gradient_full(int i, const DemandProfile& profile,
                            const VectorXd& wt, const VectorXd& rt);

/// Norm of the projection of -grad onto the tangent cone of
/// {sum x = const, lo <= x(t) <= hi(t)} at x. Zero at constrained optima.
double projected_stationarity(const VectorXd& grad, const VectorXd& x,
                              double lo, const VectorXd& hi);

double projected_stationarity(int i, const DemandProfile& profile,
                              const VectorXd& wt, const VectorXd& rt,
                              const FlexUserSet& users, bool use_box);

}  // namespace stackgrid
