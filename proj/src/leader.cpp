#include "stackgrid/leader.hpp"

#include "stackgrid/analytic.hpp"
#include "stackgrid/followers.hpp"
#include "stackgrid/gamecore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace stackgrid {

namespace {

double uniform01(std::mt19937_64& eng) {
  return (eng() >> 11) * 0x1.0p-53;
}

}  // namespace

LeaderTarget leader_qp(const Scenario& sc, const FlexUserSet& users) {
  const int T = sc.T;
  const double cap = users.nu_max_total();
  const double g_N = users.g_total();
  if (g_N > T * cap + 1e-12 * std::max(1.0, g_N))
    throw InfeasibleBounds("total flexible demand exceeds the aggregate cap "
                           "over the horizon");

  const VectorXd base = sc.w - sc.r;
  auto schedule = [&](double lam) {
    return (base.array() + lam).cwiseMax(0.0).cwiseMin(cap).matrix().eval();
  };

  double lo = -base.maxCoeff();            // everything clipped to zero
  double hi = cap - base.minCoeff();       // everything clipped to cap
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (schedule(mid).sum() < g_N ? lo : hi) = mid;
  }
  double lam = 0.5 * (lo + hi);

  // exact multiplier on the free set identified by the bisection
  const double tol = 1e-9 * std::max(1.0, cap);
  VectorXd v = schedule(lam);
  int n_free = 0, n_hi = 0;
  double free_base = 0;
  for (int t = 0; t < T; ++t) {
    if (v[t] >= cap - tol)
      ++n_hi;
    else if (v[t] > tol) {
      ++n_free;
      free_base += base[t];
    }
  }
  if (n_free > 0) {
    double lam_exact = (g_N - cap * n_hi - free_base) / n_free;
    VectorXd v_exact = schedule(lam_exact);
    if (std::abs(v_exact.sum() - g_N) <= std::abs(v.sum() - g_N)) {
      lam = lam_exact;
      v = std::move(v_exact);
    }
  }

  LeaderTarget out;
  out.nu_N_star = v;
  out.multiplier = lam;
  for (int t = 0; t < T; ++t) {
    if (v[t] <= tol) out.active_lower.push_back(t);
    if (v[t] >= cap - tol) out.active_upper.push_back(t);
  }
  out.optimal_cost = population_variance(v + sc.r - sc.w);
  return out;
}

PriceSearchResult price_search(const Scenario& sc, const FlexUserSet& users,
                               double tol, const VectorXd& init_wt,
                               const VectorXd& init_rt, long max_outer,
                               double step) {
  require_positive_tilde(init_wt);
  for (int i = 0; i < users.n; ++i)
    if (users.g[i] > sc.T * users.nu_max[i] * (1 + 1e-12))
      throw InfeasibleBounds("user " + std::to_string(i + 1) +
                             " cannot meet its total demand under the cap");
  if (!(tol > 0)) throw ValidationError("price search tolerance must be > 0");
  if (step <= 0) step = tol;
  const double step_floor = step / 16.0;

  const LeaderTarget target = leader_qp(sc, users);
  VectorXd rt = init_rt;

  PriceSearchTrace trace;
  DemandProfile profile;
  MatrixXd warm;
  bool have_warm = false;
  double last_residual = 0;
  double best_err = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (long k = 0; k < max_outer; ++k) {
    BrOptions br;
    br.use_box = true;
    br.tol = std::min(1e-8, 0.01 * tol);
    if (have_warm) br.init = &warm;
    auto [prof, tr] = best_response_dynamics(init_wt, rt, users, br);
    profile = std::move(prof);
    warm = profile.values;
    have_warm = true;
    last_residual = tr.residuals.empty() ? 0.0 : tr.residuals.back();

    VectorXd diff = profile.aggregate() - target.nu_N_star;
    double err = diff.cwiseAbs().maxCoeff();
    trace.sup_errors.push_back(err);
    trace.leader_costs.push_back(
        population_variance(profile.aggregate() + sc.r - sc.w));
    trace.iterations = k + 1;
    if (err < tol) {
      trace.converged = true;
      break;
    }
    if (err < best_err) {
      best_err = err;
      stall = 0;
    } else if (++stall >= 50) {
      step = std::max(0.5 * step, step_floor);
      stall = 0;
    }
    // aggregate overshoot at t -> raise r~(t) to discourage slot t,
    // undershoot -> lower it; near-matched slots are left alone
    for (int t = 0; t < sc.T; ++t) {
      if (diff[t] > 0.25 * tol)
        rt[t] += step;
      else if (diff[t] < -0.25 * tol)
        rt[t] -= step;
    }
  }

  trace.final_rt = rt;
  PriceSearchResult out;
  out.rule = PricingRule::from_tilde(sc, init_wt, rt);
  out.report = make_report(sc, users, out.rule, profile, Method::numeric,
                           trace.iterations, last_residual);
  out.trace = std::move(trace);
  return out;
}

PriceSearchResult numeric_se(const Scenario& sc, const FlexUserSet& users,
                             const NumericSeOptions& opt) {
  const double scale = users.g_total() / sc.T;
  VectorXd wt, rt;
  if (opt.random_init) {
    std::mt19937_64 eng(opt.seed);
    wt.resize(sc.T);
    rt.resize(sc.T);
    for (int t = 0; t < sc.T; ++t)
      wt[t] = scale * (0.5 + uniform01(eng));
    for (int t = 0; t < sc.T; ++t)
      rt[t] = wt[t] * (0.5 + uniform01(eng));
  } else {
    wt = optimal_tilde_w(sc, users).cwiseMax(1e-6 * scale);
    rt = ((users.n + 1.0) / users.n) * wt;
  }
  return price_search(sc, users, opt.tol, wt, rt, opt.max_outer, opt.step);
}

}  // namespace stackgrid
