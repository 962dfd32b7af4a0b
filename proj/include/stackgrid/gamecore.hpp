#pragma once

#include "stackgrid/types.hpp"

namespace stackgrid {

/// w~(t) = w(t) + a1(t), r~(t) = r(t) + a2(t); throws NonpositiveTildeW if
/// any w~(t) <= 0.
TildePair tilde_transform(const Scenario& sc, const PricingRule& rule);

/// Throws NonpositiveTildeW at the first slot with wt(t) <= 0.
void require_positive_tilde(const VectorXd& wt);

VectorXd price_series(const VectorXd& wt, const VectorXd& rt,
                      const VectorXd& nu_N);
VectorXd price_series(const Scenario& sc, const PricingRule& rule,
                      const DemandProfile& demand);

double user_cost(int i, const DemandProfile& demand, const VectorXd& wt,
                 const VectorXd& rt);
double user_cost(int i, const DemandProfile& demand, const Scenario& sc,
                 const PricingRule& rule);

/// C = diag(1/w~(1..T-1)) + (1/w~(T)) * 11'
MatrixXd coupling_matrix(const VectorXd& wt);

/// C^{-1} = diag(w~(1..T-1)) - w~ w~' / sum_t w~(t), via Sherman-Morrison.
MatrixXd sherman_morrison_inverse(const VectorXd& wt);

/// Reduced quadratic of user i's cost given the other rows of `profile`
/// (row i is ignored). mu is computed by the reduced formula
/// mu_i = C * sum_{j != i} d_j - g~_i.
QuadraticForm quadratic_form(int i, const DemandProfile& profile,
                             const VectorXd& wt, const VectorXd& rt,
                             const FlexUserSet& users);

/// mu_i assembled directly from the h_i(t) differences; kept as a
/// cross-check for the reduced formula.
VectorXd quadratic_form_mu_direct(int i, const DemandProfile& profile,
                                  const VectorXd& wt, const VectorXd& rt,
                                  const FlexUserSet& users);

/// h_i(t) = (sum_{j != i} nu_j(t) + r~(t)) / w~(t)
VectorXd mixing_coefficients(int i, const DemandProfile& profile,
                             const VectorXd& wt, const VectorXd& rt);

/// Append the implied last slot nu(T) = g - sum(d).
VectorXd lift_reduced(const VectorXd& d, double g);
/// Drop the last slot.
VectorXd reduce_strategy(const VectorXd& nu);

/// (1/T) sum (x - mean)^2
double population_variance(const VectorXd& x);

}  // namespace stackgrid
