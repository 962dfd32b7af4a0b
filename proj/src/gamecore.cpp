#include "stackgrid/gamecore.hpp"

#include <cmath>

namespace stackgrid {

Scenario::Scenario(VectorXd w_in, VectorXd r_in, double slot_hours_in)
    : T(static_cast<int>(w_in.size())),
      slot_hours(slot_hours_in),
      w(std::move(w_in)),
      r(std::move(r_in)) {
  if (T < 2) throw ValidationError("scenario needs at least 2 slots");
  if (r.size() != T) throw ValidationError("w and r lengths differ");
  if (!(slot_hours > 0)) throw ValidationError("slot_hours must be positive");
  for (int t = 0; t < T; ++t) {
    if (!std::isfinite(w[t]) || !std::isfinite(r[t]))
      throw ValidationError("non-finite scenario entry at slot " +
                            std::to_string(t + 1));
    if (w[t] < 0 || r[t] < 0)
      throw ValidationError("negative scenario entry at slot " +
                            std::to_string(t + 1));
  }
}

FlexUserSet::FlexUserSet(VectorXd g_in, VectorXd nu_max_in)
    : n(static_cast<int>(g_in.size())),
      g(std::move(g_in)),
      nu_max(std::move(nu_max_in)) {
  if (n < 1) throw ValidationError("need at least one flexible user");
  if (nu_max.size() != n) throw ValidationError("g and nu_max lengths differ");
  for (int i = 0; i < n; ++i) {
    if (!(g[i] > 0) || !std::isfinite(g[i]))
      throw ValidationError("g must be positive for user " + std::to_string(i + 1));
    if (!(nu_max[i] > 0) || !std::isfinite(nu_max[i]))
      throw ValidationError("nu_max must be positive for user " +
                            std::to_string(i + 1));
  }
}

void FlexUserSet::require_slot_feasible(int T) const {
  for (int i = 0; i < n; ++i)
    if (nu_max[i] < g[i] / T)
      throw ValidationError("nu_max < g/T for user " + std::to_string(i + 1));
}

bool DemandProfile::hyperplane_feasible(const FlexUserSet& users,
                                        double tol) const {
  if (users.n != users.g.size() || values.rows() != users.n) return false;
  for (int i = 0; i < users.n; ++i) {
    double gap = std::abs(values.row(i).sum() - users.g[i]);
    if (gap > tol * std::max(1.0, users.g[i])) return false;
  }
  return true;
}

bool DemandProfile::box_feasible(const FlexUserSet& users, double tol) const {
  for (int i = 0; i < users.n; ++i) {
    double slack = tol * std::max(1.0, users.nu_max[i]);
    if (values.row(i).minCoeff() < -slack) return false;
    if (values.row(i).maxCoeff() > users.nu_max[i] + slack) return false;
  }
  return true;
}

void require_positive_tilde(const VectorXd& wt) {
  for (int t = 0; t < wt.size(); ++t)
    if (!(wt[t] > 0)) throw NonpositiveTildeW(t, wt[t]);
}

TildePair tilde_transform(const Scenario& sc, const PricingRule& rule) {
  if (rule.a1.size() != sc.T || rule.a2.size() != sc.T)
    throw ValidationError("pricing rule length does not match scenario");
  TildePair out{sc.w + rule.a1, sc.r + rule.a2};
  require_positive_tilde(out.w);
  return out;
}

VectorXd price_series(const VectorXd& wt, const VectorXd& rt,
                      const VectorXd& nu_N) {
  require_positive_tilde(wt);
  return ((nu_N + rt).array() / wt.array()).matrix();
}

VectorXd price_series(const Scenario& sc, const PricingRule& rule,
                      const DemandProfile& demand) {
  TildePair tp = tilde_transform(sc, rule);
  return price_series(tp.w, tp.r, demand.aggregate());
}

double user_cost(int i, const DemandProfile& demand, const VectorXd& wt,
                 const VectorXd& rt) {
  VectorXd pi = price_series(wt, rt, demand.aggregate());
  return pi.dot(demand.values.row(i).transpose());
}

double user_cost(int i, const DemandProfile& demand, const Scenario& sc,
                 const PricingRule& rule) {
  TildePair tp = tilde_transform(sc, rule);
  return user_cost(i, demand, tp.w, tp.r);
}

MatrixXd coupling_matrix(const VectorXd& wt) {
  require_positive_tilde(wt);
  const int m = static_cast<int>(wt.size()) - 1;
  MatrixXd C = MatrixXd::Constant(m, m, 1.0 / wt[m]);
  for (int t = 0; t < m; ++t) C(t, t) += 1.0 / wt[t];
  return C;
}

MatrixXd sherman_morrison_inverse(const VectorXd& wt) {
  require_positive_tilde(wt);
  const int m = static_cast<int>(wt.size()) - 1;
  VectorXd head = wt.head(m);
  MatrixXd inv = head.asDiagonal();
  inv.noalias() -= (head * head.transpose()) / wt.sum();
  return inv;
}

VectorXd mixing_coefficients(int i, const DemandProfile& profile,
                             const VectorXd& wt, const VectorXd& rt) {
  VectorXd others = profile.aggregate() - profile.values.row(i).transpose();
  return ((others + rt).array() / wt.array()).matrix();
}

VectorXd quadratic_form_mu_direct(int i, const DemandProfile& profile,
                                  const VectorXd& wt, const VectorXd& rt,
                                  const FlexUserSet& users) {
  const int T = static_cast<int>(wt.size());
  VectorXd h = mixing_coefficients(i, profile, wt, rt);
  VectorXd mu(T - 1);
  for (int t = 0; t < T - 1; ++t)
    mu[t] = h[t] - h[T - 1] - 2.0 * users.g[i] / wt[T - 1];
  return mu;
}

QuadraticForm quadratic_form(int i, const DemandProfile& profile,
                             const VectorXd& wt, const VectorXd& rt,
                             const FlexUserSet& users) {
  require_positive_tilde(wt);
  const int T = static_cast<int>(wt.size());
  const int m = T - 1;
  MatrixXd C = coupling_matrix(wt);

  // g~_i = ((g_N + g_i + r~(T)) / w~(T)) 1 - (r~(t)/w~(t))_{t<T}
  VectorXd g_tilde =
      VectorXd::Constant(m, (users.g_total() + users.g[i] + rt[m]) / wt[m]);
  g_tilde -= (rt.head(m).array() / wt.head(m).array()).matrix();

  VectorXd others_reduced = VectorXd::Zero(m);
  for (int j = 0; j < profile.users(); ++j)
    if (j != i) others_reduced += profile.values.row(j).head(m).transpose();

  VectorXd mu = C * others_reduced - g_tilde;

  VectorXd h = mixing_coefficients(i, profile, wt, rt);
  double const_term =
      h[m] * users.g[i] + users.g[i] * users.g[i] / wt[m];
  return QuadraticForm{std::move(C), std::move(mu), const_term, i};
}

VectorXd lift_reduced(const VectorXd& d, double g) {
  VectorXd nu(d.size() + 1);
  nu.head(d.size()) = d;
  nu[d.size()] = g - d.sum();
  return nu;
}

VectorXd reduce_strategy(const VectorXd& nu) { return nu.head(nu.size() - 1); }

double population_variance(const VectorXd& x) {
  double mean = x.mean();
  return (x.array() - mean).square().sum() / static_cast<double>(x.size());
}

}  // namespace stackgrid
