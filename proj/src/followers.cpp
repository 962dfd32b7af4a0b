#include "stackgrid/followers.hpp"

#include "stackgrid/gamecore.hpp"
#include "stackgrid/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace stackgrid {

namespace {

double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace

double profile_norm1(const MatrixXd& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

MatrixXd sweep_matrix(int n) {
  // row i (1-based) = -1/2 (e_i' - sum_{j<i} 2^{-(i-j)} e_j'),
  // e_j = (0,...,0,1,...,1)' with j leading zeros.
  MatrixXd L = MatrixXd::Zero(n, n);
  auto add_e = [&](int row, int j, double coeff) {
    for (int k = j; k < n; ++k) L(row, k) += coeff;
  };
  for (int i = 1; i <= n; ++i) {
    add_e(i - 1, i, -0.5);
    for (int j = 1; j < i; ++j)
      add_e(i - 1, j, 0.5 * std::pow(2.0, -(i - j)));
  }
  return L;
}

BRAffineMap br_map(const VectorXd& wt, const VectorXd& rt,
                   const FlexUserSet& users) {
  require_positive_tilde(wt);
  const int n = users.n;
  const double W = wt.sum();
  const double R = rt.sum();
  const double gN = users.g_total();

  MatrixXd L = sweep_matrix(n);

  VectorXd alpha(n), beta(n), gamma(n);
  for (int i = 0; i < n; ++i) alpha[i] = (gN + users.g[i] + R) / (2.0 * W);
  for (int i = 0; i < n; ++i) {
    beta[i] = alpha[i];
    for (int j = 0; j < i; ++j) beta[i] -= alpha[j] * std::pow(2.0, -(i - j));
    gamma[i] = -std::pow(2.0, -(i + 1));
  }
  MatrixXd M = beta * wt.transpose() + gamma * rt.transpose();

  Eigen::EigenSolver<MatrixXd> es(L, /*computeEigenvectors=*/false);
  double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  if (n <= 64 && !(rho < 1.0))
    throw SolverError("sweep matrix is not a contraction (rho = " +
                      std::to_string(rho) + ")");
  return BRAffineMap{std::move(L), std::move(M), rho};
}

VectorXd hyperplane_best_response(int i, const DemandProfile& profile,
                                  const VectorXd& wt, const VectorXd& rt,
                                  const FlexUserSet& users) {
  require_positive_tilde(wt);
  const double W = wt.sum();
  const double alpha =
      (users.g_total() + users.g[i] + rt.sum()) / (2.0 * W);
  VectorXd others = profile.aggregate() - profile.values.row(i).transpose();
  return -0.5 * others + alpha * wt - 0.5 * rt;
}

VectorXd box_best_response(int i, const DemandProfile& profile,
                           const VectorXd& wt, const VectorXd& rt,
                           const FlexUserSet& users) {
  require_positive_tilde(wt);
  const int T = static_cast<int>(wt.size());
  const double g = users.g[i];
  const double cap = users.nu_max[i];
  if (g > T * cap * (1 + 1e-12))
    throw InfeasibleBounds("user " + std::to_string(i + 1) +
                           " cannot meet its total demand under the cap");

  // Slotwise the cost is nu^2/w~ + h nu, so the multiplier solve is
  // nu(t; lam) = clip(w~(t) (lam - h(t)) / 2, 0, cap).
  VectorXd h = mixing_coefficients(i, profile, wt, rt);
  auto value = [&](int t, double lam) {
    return std::clamp(wt[t] * (lam - h[t]) / 2.0, 0.0, cap);
  };
  auto total = [&](double lam) {
    double s = 0;
    for (int t = 0; t < T; ++t) s += value(t, lam);
    return s;
  };

  double lo = h.minCoeff();                 // total = 0
  double hi = h.maxCoeff();
  for (int t = 0; t < T; ++t) hi = std::max(hi, h[t] + 2.0 * cap / wt[t]);
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi));
       ++it) {
    double mid = 0.5 * (lo + hi);
    (total(mid) < g ? lo : hi) = mid;
  }

  // Exact multiplier on the free set implied by the bracketed lambda.
  double lam = 0.5 * (lo + hi);
  double fixed = 0, wsum = 0, whsum = 0;
  for (int t = 0; t < T; ++t) {
    double raw = wt[t] * (lam - h[t]) / 2.0;
    if (raw >= cap)
      fixed += cap;
    else if (raw > 0) {
      wsum += wt[t];
      whsum += wt[t] * h[t];
    }
  }
  if (wsum > 0) lam = (2.0 * (g - fixed) + whsum) / wsum;

  VectorXd nu(T);
  for (int t = 0; t < T; ++t) nu[t] = value(t, lam);
  // Absorb any residual mass into the free slots.
  double gap = g - nu.sum();
  if (std::abs(gap) > 0 && wsum > 0) {
    for (int t = 0; t < T; ++t) {
      double raw = wt[t] * (lam - h[t]) / 2.0;
      if (raw > 0 && raw < cap) nu[t] += gap * wt[t] / wsum;
    }
  }
  return nu;
}

std::pair<DemandProfile, IterationTrace> best_response_dynamics(
    const VectorXd& wt, const VectorXd& rt, const FlexUserSet& users,
    const BrOptions& opt) {
  require_positive_tilde(wt);
  const int n = users.n;
  const int T = static_cast<int>(wt.size());
  const long max_sweeps =
      opt.max_sweeps > 0 ? opt.max_sweeps : 10L * n * T;

  DemandProfile nu;
  if (opt.init) {
    nu.values = *opt.init;
  } else {
    nu.values = (users.g / T) * Eigen::RowVectorXd::Ones(T);
  }

  IterationTrace trace;
  for (long k = 0; k < max_sweeps; ++k) {
    MatrixXd prev = nu.values;
    for (int i = 0; i < n; ++i) {
      nu.values.row(i) =
          (opt.use_box ? box_best_response(i, nu, wt, rt, users)
                       : hyperplane_best_response(i, nu, wt, rt, users))
              .transpose();
    }
    double er = profile_norm1(nu.values - prev);
    trace.residuals.push_back(er);
    trace.iterations = k + 1;
    if (er < opt.tol) {
      trace.converged = true;
      return {std::move(nu), std::move(trace)};
    }
  }
  throw MaxIterExceeded(
      "best-response dynamics did not reach tolerance " +
          std::to_string(opt.tol) + " in " + std::to_string(max_sweeps) +
          " sweeps",
      std::move(trace.residuals), std::move(nu));
}

StrictNeCheck verify_strict_ne(const DemandProfile& profile,
                               const VectorXd& wt, const VectorXd& rt,
                               const FlexUserSet& users, int samples,
                               bool use_box, std::uint64_t seed) {
  const int T = static_cast<int>(wt.size());
  StrictNeCheck out;
  out.seed = seed;
  out.worst_margin = std::numeric_limits<double>::infinity();

  for (int i = 0; i < users.n; ++i) {
    if (projected_stationarity(i, profile, wt, rt, users, use_box) > 1e-7) {
      out.ok = false;
      out.violating_user = i;
      return out;
    }
    std::mt19937_64 eng(seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    double base = user_cost(i, profile, wt, rt);
    VectorXd row = profile.values.row(i).transpose();
    for (int s = 0; s < samples; ++s) {
      VectorXd z(T);
      for (int t = 0; t < T; ++t) z[t] = 2.0 * uniform01(eng) - 1.0;
      z.array() -= z.mean();  // keep the hyperplane
      if (z.cwiseAbs().maxCoeff() < 1e-12) continue;

      double step;
      if (use_box) {
        double smax = std::numeric_limits<double>::infinity();
        for (int t = 0; t < T; ++t) {
          if (z[t] > 0) smax = std::min(smax, (users.nu_max[i] - row[t]) / z[t]);
          if (z[t] < 0) smax = std::min(smax, (0.0 - row[t]) / z[t]);
        }
        if (!(smax > 1e-12)) continue;  // pinned direction, try another draw
        step = (0.1 + 0.8 * uniform01(eng)) * smax;
      } else {
        step = (0.1 + 0.8 * uniform01(eng)) * 0.1 * users.g[i] /
               z.cwiseAbs().maxCoeff();
      }

      DemandProfile dev = profile;
      dev.values.row(i) = (row + step * z).transpose();
      double margin = user_cost(i, dev, wt, rt) - base;
      out.worst_margin = std::min(out.worst_margin, margin);
      if (!(margin > 0)) {
        out.ok = false;
        out.violating_user = i;
        return out;
      }
    }
  }
  return out;
}

}  // namespace stackgrid
