#pragma once

#include "stackgrid/types.hpp"

#include <functional>
#include <vector>

namespace stackgrid {

/// w~*(t) = g_N/T + w(t) - r(t) + mean(r - w)
VectorXd optimal_tilde_w(const Scenario& sc, const FlexUserSet& users);

/// The optimal adjustments (a1*, a2*); may yield w~* <= 0, which the
/// condition check reports separately.
PricingRule optimal_rule(const Scenario& sc, const FlexUserSet& users);

/// Closed-form Nash equilibrium of the hyperplane game for any positive w~.
DemandProfile general_nash(const VectorXd& wt, const VectorXd& rt,
                           const FlexUserSet& users);

/// nu_i*(t) = (g_i/g_N) w~*(t); requires w~* > 0.
DemandProfile analytic_nash(const Scenario& sc, const FlexUserSet& users);

/// Margins of 0 < w~*(t) <= min_i(nu_max_i/g_i) g_N per slot.
ConditionReport check_perfect_se(const Scenario& sc, const FlexUserSet& users);

/// Full report for the analytic path (optimal rule + closed-form NE).
EquilibriumReport analytic_se(const Scenario& sc, const FlexUserSet& users);

/// Supply-from-renewables-only equilibrium; throws ConditionViolation with
/// the failed clause (13 or 14) when the prerequisites do not hold.
EquilibriumReport renewable_only_se(const Scenario& sc,
                                    const FlexUserSet& users);

/// Rule realizing the forecast-based price 1 + 1/n + nu_N(t)/w~(t) with
/// w~(t) = w(t) + g_N/T - r(t) + b.
PricingRule prediction_price_rule(const Scenario& sc, const FlexUserSet& users,
                                  const PredictionSetting& setting);

/// Margins of 0 < w~(t) <= (g_N + T delta) min_i(nu_max_i/g_i).
ConditionReport check_prediction_condition(const Scenario& sc,
                                           const FlexUserSet& users,
                                           const PredictionSetting& setting);

/// sigma_i(t) = (g_i/(g_N + T delta)) (w(t) - r(t) + g_N/T + b);
/// throws ConditionViolation(17) if the condition fails.
DemandProfile prediction_nash(const Scenario& sc, const FlexUserSet& users,
                              const PredictionSetting& setting);

/// Closed-form leader cost (T delta/(g_N+T delta))^2 Var(w - r), asserted
/// against the direct computation from the equilibrium demand.
double prediction_cost(const Scenario& sc, const FlexUserSet& users,
                       const PredictionSetting& setting);

struct Table2Row {
  int T;
  double delta;
  double variance;  // Var({w(t) - r(t)})
  double cost;      // leader cost at the forecast equilibrium
  double ratio;     // cost / variance
};

/// Re-samples the same day curves at each T in `T_list` (via `generator`)
/// and evaluates the forecast-error cost law. `predicted_net_total` is the
/// forecast of sum_t [r(t) - w(t)] over the window (i.e. T*b), held fixed
/// across T.
std::vector<Table2Row> table2_sweep(
    const std::function<Scenario(int)>& generator, double predicted_net_total,
    double g_N, const std::vector<int>& T_list);

EquilibriumReport make_report(const Scenario& sc, const FlexUserSet& users,
                              const PricingRule& rule,
                              const DemandProfile& demand, Method method,
                              long iterations, double final_residual);

}  // namespace stackgrid
