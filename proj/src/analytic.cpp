#include "stackgrid/analytic.hpp"

#include "stackgrid/followers.hpp"
#include "stackgrid/gamecore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stackgrid {

namespace {

ConditionReport margins_for(const VectorXd& wt, double upper_bound) {
  const int T = static_cast<int>(wt.size());
  ConditionReport rep;
  rep.lower_margin = wt;
  rep.upper_margin = VectorXd::Constant(T, upper_bound) - wt;
  rep.satisfied = true;
  for (int t = 0; t < T; ++t) {
    bool violated = !(rep.lower_margin[t] > 0) || rep.upper_margin[t] < 0;
    if (violated) rep.satisfied = false;
    if (violated || rep.upper_margin[t] == 0) rep.binding_slots.push_back(t);
  }
  return rep;
}

std::vector<int> violated_slots(const ConditionReport& rep) {
  std::vector<int> out;
  for (int t = 0; t < rep.lower_margin.size(); ++t)
    if (!(rep.lower_margin[t] > 0) || rep.upper_margin[t] < 0)
      out.push_back(t);
  return out;
}

}  // namespace

VectorXd optimal_tilde_w(const Scenario& sc, const FlexUserSet& users) {
  double base = users.g_total() / sc.T + sc.mean_net_load();
  return (sc.w - sc.r).array() + base;
}

PricingRule optimal_rule(const Scenario& sc, const FlexUserSet& users) {
  VectorXd wt = optimal_tilde_w(sc, users);
  VectorXd rt = ((users.n + 1.0) / users.n) * wt;
  return PricingRule{wt - sc.w, rt - sc.r};
}

DemandProfile general_nash(const VectorXd& wt, const VectorXd& rt,
                           const FlexUserSet& users) {
  require_positive_tilde(wt);
  const double W = wt.sum();
  const double R = rt.sum();
  // The mixing correction is the same for every user.
  VectorXd common = (wt * R - W * rt) / ((users.n + 1.0) * W);
  DemandProfile out;
  out.values = (users.g / W) * wt.transpose() +
               Eigen::VectorXd::Ones(users.n) * common.transpose();
  return out;
}

DemandProfile analytic_nash(const Scenario& sc, const FlexUserSet& users) {
  VectorXd wt = optimal_tilde_w(sc, users);
  require_positive_tilde(wt);
  DemandProfile out;
  out.values = (users.g / users.g_total()) * wt.transpose();
  return out;
}

ConditionReport check_perfect_se(const Scenario& sc, const FlexUserSet& users) {
  return margins_for(optimal_tilde_w(sc, users),
                     users.min_cap_ratio() * users.g_total());
}

EquilibriumReport analytic_se(const Scenario& sc, const FlexUserSet& users) {
  PricingRule rule = optimal_rule(sc, users);
  DemandProfile nu = analytic_nash(sc, users);
  return make_report(sc, users, rule, nu, Method::analytic, 0, 0.0);
}

EquilibriumReport renewable_only_se(const Scenario& sc,
                                    const FlexUserSet& users) {
  VectorXd surplus = sc.w - sc.r;
  ConditionReport c13 =
      margins_for(surplus, users.min_cap_ratio() * users.g_total());
  if (!c13.satisfied)
    throw ConditionViolation(13, violated_slots(c13),
                             "renewable surplus w - r violates the per-slot "
                             "bounds");
  double gap = sc.w.sum() - users.g_total() - sc.r.sum();
  if (std::abs(gap) > 1e-9 * std::max(1.0, users.g_total()))
    throw ConditionViolation(
        14, {},
        "total renewable surplus does not equal total flexible demand (gap " +
            std::to_string(gap) + ")");

  DemandProfile chi;
  chi.values = (users.g / users.g_total()) * surplus.transpose();
  // pi0*(t) = 1 + 1/n + nu_N(t)/(w - r); the rule realizing it in the
  // price family has w~ = w - r and r~ = (1 + 1/n)(w - r).
  VectorXd rt = (1.0 + 1.0 / users.n) * surplus;
  PricingRule rule = PricingRule::from_tilde(sc, surplus, rt);
  return make_report(sc, users, rule, chi, Method::analytic, 0, 0.0);
}

PricingRule prediction_price_rule(const Scenario& sc, const FlexUserSet& users,
                                  const PredictionSetting& setting) {
  VectorXd wt =
      (sc.w - sc.r).array() + users.g_total() / sc.T + setting.b;
  require_positive_tilde(wt);
  VectorXd rt = ((users.n + 1.0) / users.n) * wt;
  return PricingRule::from_tilde(sc, wt, rt);
}

ConditionReport check_prediction_condition(const Scenario& sc,
                                           const FlexUserSet& users,
                                           const PredictionSetting& setting) {
  VectorXd wt =
      (sc.w - sc.r).array() + users.g_total() / sc.T + setting.b;
  double denom = users.g_total() + sc.T * setting.delta(sc);
  ConditionReport rep = margins_for(wt, denom * users.min_cap_ratio());
  if (!(denom > 0)) rep.satisfied = false;
  return rep;
}

DemandProfile prediction_nash(const Scenario& sc, const FlexUserSet& users,
                              const PredictionSetting& setting) {
  double denom = users.g_total() + sc.T * setting.delta(sc);
  if (!(denom > 0))
    throw ConditionViolation(17, {},
                             "g_N + T*delta must be positive (value " +
                                 std::to_string(denom) + ")");
  ConditionReport rep = check_prediction_condition(sc, users, setting);
  if (!rep.satisfied)
    throw ConditionViolation(17, violated_slots(rep),
                             "forecast-adjusted supply violates the per-slot "
                             "bounds");
  VectorXd wt =
      (sc.w - sc.r).array() + users.g_total() / sc.T + setting.b;
  DemandProfile out;
  out.values = (users.g / denom) * wt.transpose();
  return out;
}

double prediction_cost(const Scenario& sc, const FlexUserSet& users,
                       const PredictionSetting& setting) {
  DemandProfile sigma = prediction_nash(sc, users, setting);
  double delta = setting.delta(sc);
  double denom = users.g_total() + sc.T * delta;
  double prefactor = std::pow(sc.T * delta / denom, 2.0);
  double closed = prefactor * population_variance(sc.w - sc.r);

  VectorXd c = sigma.aggregate() + sc.r - sc.w;
  double direct = population_variance(c);
  if (std::abs(direct - closed) > 1e-10 * std::max(1.0, std::abs(closed)))
    throw SolverError("forecast cost law disagrees with direct simulation");
  return closed;
}

std::vector<Table2Row> table2_sweep(
    const std::function<Scenario(int)>& generator, double predicted_net_total,
    double g_N, const std::vector<int>& T_list) {
  if (T_list.empty()) throw ValidationError("empty T list");
  std::vector<Table2Row> rows(T_list.size());
  for (std::size_t k = 0; k < T_list.size(); ++k) {
    const int T = T_list[k];
    Scenario sc = generator(T);
    if (sc.T != T) throw SolverError("generator returned wrong slot count");
    double b = predicted_net_total / T;
    double delta = b - sc.mean_net_load();
    double variance = population_variance(sc.w - sc.r);
    double denom = g_N + T * delta;
    if (!(denom > 0))
      throw ConditionViolation(17, {}, "g_N + T*delta must be positive");
    double ratio = std::pow(T * delta / denom, 2.0);
    rows[k] = Table2Row{T, delta, variance, ratio * variance, ratio};
  }
  return rows;
}

EquilibriumReport make_report(const Scenario& sc, const FlexUserSet& users,
                              const PricingRule& rule,
                              const DemandProfile& demand, Method method,
                              long iterations, double final_residual) {
  TildePair tp = tilde_transform(sc, rule);
  EquilibriumReport rep;
  rep.demand = demand;
  rep.prices = price_series(tp.w, tp.r, demand.aggregate());
  rep.controllable = demand.aggregate() + sc.r - sc.w;
  rep.leader_cost = population_variance(rep.controllable);
  rep.user_costs.resize(users.n);
  for (int i = 0; i < users.n; ++i)
    rep.user_costs[i] = rep.prices.dot(demand.values.row(i).transpose());
  rep.condition12_satisfied = check_perfect_se(sc, users).satisfied;
  rep.strict_ne_ok =
      verify_strict_ne(demand, tp.w, tp.r, users, 16,
                       method == Method::numeric, 0x5eedULL)
          .ok;
  rep.method = method;
  rep.iterations = iterations;
  rep.final_residual = final_residual;
  return rep;
}

}  // namespace stackgrid
