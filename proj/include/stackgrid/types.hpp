#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stackgrid {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an adjusted supply value w(t)+a1(t) is not strictly positive.
class NonpositiveTildeW : public SolverError {
public:
  int slot;  // 0-based
  NonpositiveTildeW(int slot, double value)
      : SolverError("adjusted supply w~ is not positive at slot " +
                    std::to_string(slot + 1) + " (value " +
                    std::to_string(value) + ")"),
        slot(slot) {}
};

class InfeasibleBounds : public SolverError {
public:
  using SolverError::SolverError;
};

/// A closed-form feasibility condition failed; `clause` names the inequality
/// group (12, 13, 14 or 17) and `slots` the offending 0-based slot indices.
class ConditionViolation : public SolverError {
public:
  int clause;
  std::vector<int> slots;
  ConditionViolation(int clause, std::vector<int> slots, const std::string& what)
      : SolverError(what), clause(clause), slots(std::move(slots)) {}
};

class GridTooLarge : public SolverError {
public:
  using SolverError::SolverError;
};

/// Input-file parse or validation failure; `line` is 1-based, 0 if unknown.
class ValidationError : public std::runtime_error {
public:
  int line;
  ValidationError(const std::string& what, int line = 0)
      : std::runtime_error(what), line(line) {}
};

/// Per-slot uncontrollable generation w(t) and inflexible load r(t) over
/// T slots. Values are energies per slot (e.g. GWh); units are carried as
/// documentation only.
struct Scenario {
  int T;
  double slot_hours;
  VectorXd w;
  VectorXd r;

  Scenario(VectorXd w_in, VectorXd r_in, double slot_hours_in = 1.0);

  /// (1/T) sum_t [r(t) - w(t)]
  double mean_net_load() const { return (r - w).mean() ; }
};

/// Flexible users: total demand g_i > 0 and per-slot cap nu_max_i.
struct FlexUserSet {
  int n;
  VectorXd g;
  VectorXd nu_max;

  FlexUserSet(VectorXd g_in, VectorXd nu_max_in);

  double g_total() const { return g.sum(); }
  double nu_max_total() const { return nu_max.sum(); }
  /// min_i nu_max_i / g_i
  double min_cap_ratio() const { return (nu_max.array() / g.array()).minCoeff(); }
  /// Enforce nu_max_i >= g_i/T for every user.
  void require_slot_feasible(int T) const;
};

/// Adjustment sequences (a1, a2) defining the price family
/// pi(t) = (nu_N(t) + r(t) + a2(t)) / (w(t) + a1(t)).
struct PricingRule {
  VectorXd a1;
  VectorXd a2;

  static PricingRule from_tilde(const Scenario& sc, const VectorXd& wt,
                                const VectorXd& rt) {
    return PricingRule{wt - sc.w, rt - sc.r};
  }
};

struct TildePair {
  VectorXd w;
  VectorXd r;
};

/// n x T demand matrix; row i is user i's schedule.
struct DemandProfile {
  MatrixXd values;

  int users() const { return static_cast<int>(values.rows()); }
  int slots() const { return static_cast<int>(values.cols()); }
  /// nu_N(t) = sum_i nu_i(t)
  VectorXd aggregate() const { return values.colwise().sum().transpose(); }

  bool hyperplane_feasible(const FlexUserSet& users, double tol = 1e-9) const;
  bool box_feasible(const FlexUserSet& users, double tol = 1e-9) const;
};

/// Reduced quadratic u_i = d'Cd + mu'd + const over the first T-1 slots.
struct QuadraticForm {
  MatrixXd C;
  VectorXd mu;
  double const_term;
  int user;

  double eval(const VectorXd& d) const {
    return d.dot(C * d) + mu.dot(d) + const_term;
  }
};

struct ConditionReport {
  bool satisfied = false;
  VectorXd lower_margin;  // w~*(t): must be > 0
  VectorXd upper_margin;  // bound - w~*(t): must be >= 0
  std::vector<int> binding_slots;  // 0-based; violated or exactly binding
};

struct IterationTrace {
  std::vector<double> residuals;
  long iterations = 0;
  bool converged = false;
};

class MaxIterExceeded : public SolverError {
public:
  std::vector<double> residuals;
  DemandProfile last;
  MaxIterExceeded(const std::string& what, std::vector<double> res,
                  DemandProfile last_in)
      : SolverError(what), residuals(std::move(res)), last(std::move(last_in)) {}
};

enum class Method { analytic, numeric };

inline const char* method_name(Method m) {
  return m == Method::analytic ? "analytic" : "numeric";
}

struct EquilibriumReport {
  DemandProfile demand;
  VectorXd prices;
  VectorXd controllable;   // c(t) = nu_N(t) + r(t) - w(t)
  double leader_cost = 0;  // population variance of c
  VectorXd user_costs;
  bool condition12_satisfied = false;
  bool strict_ne_ok = false;
  Method method = Method::analytic;
  long iterations = 0;
  double final_residual = 0;
};

/// Forecast b of mean(r - w); delta is the prediction error.
struct PredictionSetting {
  double b;
  double delta(const Scenario& sc) const { return b - sc.mean_net_load(); }
};

}  // namespace stackgrid
