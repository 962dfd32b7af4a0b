#include "stackgrid/oracle.hpp"

#include "stackgrid/gamecore.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace stackgrid {

GridSpec GridSpec::uniform(int resolution, const FlexUserSet& users, int T,
                           double lo_frac, double hi_frac) {
  const int m = T - 1;
  GridSpec spec;
  spec.resolution = resolution;
  spec.lower = users.g * lo_frac * Eigen::RowVectorXd::Ones(m);
  spec.upper = users.g * hi_frac * Eigen::RowVectorXd::Ones(m);
  return spec;
}

namespace {

struct BestPoint {
  double cost = std::numeric_limits<double>::infinity();
  std::int64_t index = -1;
};

VectorXd decode(std::int64_t idx, const GridSpec& spec, int user, int m) {
  VectorXd d(m);
  const int base = spec.resolution + 1;
  for (int t = 0; t < m; ++t) {
    int k = static_cast<int>(idx % base);
    idx /= base;
    double lo = spec.lower(user, t), hi = spec.upper(user, t);
    d[t] = lo + (hi - lo) * k / spec.resolution;
  }
  return d;
}

BestPoint scan_serial(const QuadraticForm& qf, const GridSpec& spec, int user,
                      int m, std::int64_t total) {
  BestPoint best;
  for (std::int64_t idx = 0; idx < total; ++idx) {
    double c = qf.eval(decode(idx, spec, user, m));
    if (c < best.cost) best = {c, idx};
  }
  return best;
}

BestPoint scan_parallel(const QuadraticForm& qf, const GridSpec& spec,
                        int user, int m, std::int64_t total) {
#ifdef _OPENMP
  BestPoint best;
#pragma omp parallel
  {
    BestPoint local;
#pragma omp for schedule(static)
    for (std::int64_t idx = 0; idx < total; ++idx) {
      double c = qf.eval(decode(idx, spec, user, m));
      if (c < local.cost || (c == local.cost && idx < local.index))
        local = {c, idx};
    }
#pragma omp critical
    {
      // deterministic merge: lower cost wins, ties go to the lower index
      if (local.cost < best.cost ||
          (local.cost == best.cost && local.index < best.index))
        best = local;
    }
  }
  return best;
#else
  return scan_serial(qf, spec, user, m, total);
#endif
}

}  // namespace

GridSearchResult grid_search_ne(const VectorXd& wt, const VectorXd& rt,
                                const FlexUserSet& users, const GridSpec& spec,
                                bool parallel) {
  require_positive_tilde(wt);
  const int T = static_cast<int>(wt.size());
  const int m = T - 1;
  const int base = spec.resolution + 1;

  double points = std::pow(static_cast<double>(base), m);
  if (users.n * points > 1e7)
    throw GridTooLarge("per-sweep grid enumeration exceeds 1e7 points");
  const std::int64_t total = static_cast<std::int64_t>(points);

  DemandProfile nu;
  nu.values = (users.g / T) * Eigen::RowVectorXd::Ones(T);
  // snap each user onto its nearest grid point
  std::vector<std::int64_t> at(users.n, 0);
  for (int i = 0; i < users.n; ++i) {
    std::int64_t idx = 0, stride = 1;
    for (int t = 0; t < m; ++t) {
      double lo = spec.lower(i, t), hi = spec.upper(i, t);
      double frac = (users.g[i] / T - lo) / (hi - lo);
      int k = std::clamp(static_cast<int>(std::lround(frac * spec.resolution)),
                         0, spec.resolution);
      idx += stride * k;
      stride *= base;
    }
    at[i] = idx;
    nu.values.row(i) =
        lift_reduced(decode(idx, spec, i, m), users.g[i]).transpose();
  }

  const int max_sweeps = 500;
  double margin = 0;
  int sweeps = 0;
  for (; sweeps < max_sweeps; ++sweeps) {
    bool moved = false;
    margin = 0;
    for (int i = 0; i < users.n; ++i) {
      QuadraticForm qf = quadratic_form(i, nu, wt, rt, users);
      BestPoint best = parallel ? scan_parallel(qf, spec, i, m, total)
                                : scan_serial(qf, spec, i, m, total);
      double current = qf.eval(decode(at[i], spec, i, m));
      margin = std::max(margin, current - best.cost);
      if (best.index != at[i] && best.cost < current) {
        at[i] = best.index;
        nu.values.row(i) =
            lift_reduced(decode(best.index, spec, i, m), users.g[i])
                .transpose();
        moved = true;
      }
    }
    if (!moved) break;
  }
  return GridSearchResult{std::move(nu), margin, sweeps};
}

VectorXd finite_diff_gradient(int i, const DemandProfile& profile,
                              const VectorXd& wt, const VectorXd& rt,
                              const FlexUserSet& users, double h_rel) {
  const int T = static_cast<int>(wt.size());
  const int m = T - 1;
  VectorXd d = profile.values.row(i).head(m).transpose();
  VectorXd grad(m);
  DemandProfile work = profile;
  for (int t = 0; t < m; ++t) {
    double h = h_rel * std::max(1.0, std::abs(d[t]));
    VectorXd dp = d, dm = d;
    dp[t] += h;
    dm[t] -= h;
    work.values.row(i) = lift_reduced(dp, users.g[i]).transpose();
    double up = user_cost(i, work, wt, rt);
    work.values.row(i) = lift_reduced(dm, users.g[i]).transpose();
    double um = user_cost(i, work, wt, rt);
    grad[t] = (up - um) / (2.0 * h);
  }
  return grad;
}

VectorXd cost_gradient_full(int i, const DemandProfile& profile,
                            const VectorXd& wt, const VectorXd& rt) {
  VectorXd h = mixing_coefficients(i, profile, wt, rt);
  VectorXd nu = profile.values.row(i).transpose();
  return (2.0 * nu.array() / wt.array()).matrix() + h;
}

double projected_stationarity(const VectorXd& grad, const VectorXd& x,
                              double lo, const VectorXd& hi) {
  const int T = static_cast<int>(grad.size());
  const double tol = 1e-10 * std::max(1.0, hi.cwiseAbs().maxCoeff());

  auto z_at = [&](double lam) {
    VectorXd z = -grad.array() - lam;
    for (int t = 0; t < T; ++t) {
      bool at_lo = x[t] <= lo + tol;
      bool at_hi = x[t] >= hi[t] - tol;
      if (at_lo && at_hi)
        z[t] = 0;  // pinned coordinate
      else if (at_lo)
        z[t] = std::max(z[t], 0.0);
      else if (at_hi)
        z[t] = std::min(z[t], 0.0);
    }
    return z;
  };

  double a = (-grad).minCoeff() - 1.0, b = (-grad).maxCoeff() + 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (a + b);
    (z_at(mid).sum() > 0 ? a : b) = mid;
  }
  return z_at(0.5 * (a + b)).norm();
}

double projected_stationarity(int i, const DemandProfile& profile,
                              const VectorXd& wt, const VectorXd& rt,
                              const FlexUserSet& users, bool use_box) {
  VectorXd grad = cost_gradient_full(i, profile, wt, rt);
  if (!use_box) {
    // hyperplane only: the tangent space is {sum z = 0}
    return (grad.array() - grad.mean()).matrix().norm();
  }
  VectorXd hi = VectorXd::Constant(grad.size(), users.nu_max[i]);
  return projected_stationarity(grad, profile.values.row(i).transpose(), 0.0,
                                hi);
}

}  // namespace stackgrid
