#pragma once

#include "stackgrid/types.hpp"

namespace stackgrid {

struct LeaderTarget {
  VectorXd nu_N_star;
  double multiplier = 0;  // equality-constraint dual
  std::vector<int> active_lower, active_upper;  // 0-based slot sets
  double optimal_cost = 0;
};

/// Variance-minimizing aggregate schedule: minimize Var(c) over
/// {sum nu_N = g_N, 0 <= nu_N(t) <= nu_N^max}, c = nu_N + r - w.
/// Solved by monotone bisection on the shift multiplier with clipping.
LeaderTarget leader_qp(const Scenario& sc, const FlexUserSet& users);

struct PriceSearchTrace {
  std::vector<double> sup_errors;
  std::vector<double> leader_costs;
  long iterations = 0;
  bool converged = false;
  VectorXd final_rt;
};

struct PriceSearchResult {
  PricingRule rule;
  EquilibriumReport report;
  PriceSearchTrace trace;
};

/// Fixed-step search over r~ holding w~ fixed: raise r~(t) where the
/// follower equilibrium overshoots the QP target, lower it where it
/// undershoots. `step` defaults to `tol`; it is halved (down to tol/16)
/// after 50 consecutive non-improving iterations.
PriceSearchResult price_search(const Scenario& sc, const FlexUserSet& users,
                               double tol, const VectorXd& init_wt,
                               const VectorXd& init_rt, long max_outer,
                               double step = -1);

struct NumericSeOptions {
  double tol = 1e-6;
  double step = -1;  // default: tol
  long max_outer = 5000;
  bool random_init = false;
  std::uint64_t seed = 0;
};

/// End-to-end numerical Stackelberg equilibrium: leader QP, then price
/// search started from the analytic rule clamped positive (or a seeded
/// random positive rule when random_init is set).
PriceSearchResult numeric_se(const Scenario& sc, const FlexUserSet& users,
                             const NumericSeOptions& opt = {});

}  // namespace stackgrid
