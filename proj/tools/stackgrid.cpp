#include "stackgrid/analytic.hpp"
#include "stackgrid/followers.hpp"
#include "stackgrid/gamecore.hpp"
#include "stackgrid/io.hpp"
#include "stackgrid/leader.hpp"
#include "stackgrid/synth.hpp"

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

namespace {

using namespace stackgrid;

constexpr int kOk = 0;
constexpr int kConditionFailed = 2;
constexpr int kInputError = 64;
constexpr int kSolverFailure = 65;

void apply_thread_cap() {
#ifdef _OPENMP
  if (const char* env = std::getenv("STACKGRID_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) omp_set_num_threads(v);
  }
#endif
}

void print_condition(const char* label, const ConditionReport& rep) {
  std::printf("%s: %s\n", label, rep.satisfied ? "satisfied" : "violated");
  std::printf("  min lower margin: %.17g\n", rep.lower_margin.minCoeff());
  std::printf("  min upper margin: %.17g\n", rep.upper_margin.minCoeff());
  if (!rep.binding_slots.empty()) {
    std::printf("  binding/violated slots:");
    for (int t : rep.binding_slots) std::printf(" %d", t + 1);
    std::printf("\n");
  }
}

struct CommonArgs {
  std::string scenario_path, users_path, out_path;
  std::string mode = "auto";
  double eps = 1e-6;
  double eps_step = -1;
  long max_iter = 5000;
  std::uint64_t seed = 0;
  bool random_init = false;
};

SolveParams to_params(const CommonArgs& a) {
  SolveParams p;
  p.mode = a.mode;
  p.eps = a.eps;
  p.eps_step = a.eps_step;
  p.max_iter = a.max_iter;
  p.seed = a.seed;
  p.random_init = a.random_init;
  return p;
}

int run_check(const CommonArgs& a, bool has_prediction, double prediction_b) {
  Scenario sc = read_scenario(a.scenario_path);
  FlexUserSet users = read_users(a.users_path);
  users.require_slot_feasible(sc.T);
  ConditionReport c12 = check_perfect_se(sc, users);
  print_condition("condition (12)", c12);
  if (has_prediction) {
    PredictionSetting setting{prediction_b};
    print_condition("condition (17)",
                    check_prediction_condition(sc, users, setting));
  }
  return c12.satisfied ? kOk : kConditionFailed;
}

int run_solve(const CommonArgs& a) {
  Scenario sc = read_scenario(a.scenario_path);
  FlexUserSet users = read_users(a.users_path);
  users.require_slot_feasible(sc.T);

  std::string mode = a.mode;
  if (mode == "auto")
    mode = check_perfect_se(sc, users).satisfied ? "analytic" : "numeric";

  PricingRule rule{VectorXd::Zero(sc.T), VectorXd::Zero(sc.T)};
  EquilibriumReport rep;
  if (mode == "analytic") {
    rule = optimal_rule(sc, users);
    rep = analytic_se(sc, users);
  } else if (mode == "numeric") {
    NumericSeOptions opt;
    opt.tol = a.eps;
    opt.step = a.eps_step;
    opt.max_outer = a.max_iter;
    opt.random_init = a.random_init;
    opt.seed = a.seed;
    PriceSearchResult res = numeric_se(sc, users, opt);
    if (!res.trace.converged) {
      std::fprintf(stderr, "price search did not converge; trace:\n");
      for (std::size_t k = 0; k < res.trace.sup_errors.size(); ++k)
        std::fprintf(stderr, "  iter %zu sup_err %.17g leader_cost %.17g\n",
                     k + 1, res.trace.sup_errors[k],
                     res.trace.leader_costs[k]);
      return kSolverFailure;
    }
    rule = res.rule;
    rep = res.report;
  } else {
    std::fprintf(stderr, "unknown mode '%s'\n", mode.c_str());
    return kInputError;
  }

  std::printf("method: %s\n", method_name(rep.method));
  std::printf("leader_cost: %.17g\n", rep.leader_cost);
  std::printf("iterations: %ld\n", rep.iterations);
  if (!a.out_path.empty()) {
    SolveParams params = to_params(a);
    params.mode = mode;
    std::string series =
        write_report(a.out_path, make_report_file(sc, users, rule, rep, params));
    std::printf("report: %s\nseries: %s\n", a.out_path.c_str(),
                series.c_str());
  }
  return kOk;
}

int run_predict(const CommonArgs& a, double prediction_b) {
  Scenario sc = read_scenario(a.scenario_path);
  FlexUserSet users = read_users(a.users_path);
  users.require_slot_feasible(sc.T);
  PredictionSetting setting{prediction_b};

  ConditionReport c17 = check_prediction_condition(sc, users, setting);
  if (!c17.satisfied) {
    print_condition("condition (17)", c17);
    return kConditionFailed;
  }

  PricingRule rule = prediction_price_rule(sc, users, setting);
  DemandProfile sigma = prediction_nash(sc, users, setting);
  double cost_formula = prediction_cost(sc, users, setting);
  EquilibriumReport rep = make_report(sc, users, rule, sigma,
                                      Method::analytic, 0, 0.0);
  double delta = setting.delta(sc);
  double denom = users.g_total() + sc.T * delta;
  std::printf("delta: %.17g\n", delta);
  std::printf("prefactor: %.17g\n",
              (sc.T * delta / denom) * (sc.T * delta / denom));
  std::printf("leader_cost_formula: %.17g\n", cost_formula);
  std::printf("leader_cost_direct: %.17g\n", rep.leader_cost);
  if (!a.out_path.empty()) {
    SolveParams params = to_params(a);
    params.mode = "predict";
    params.has_prediction = true;
    params.prediction_b = prediction_b;
    std::string series =
        write_report(a.out_path, make_report_file(sc, users, rule, rep, params));
    std::printf("report: %s\nseries: %s\n", a.out_path.c_str(),
                series.c_str());
  }
  return kOk;
}

int run_table2(const std::string& kind, std::uint64_t seed, double w_total,
               double r_total, double predicted_w, double predicted_r,
               double g_N, const std::vector<int>& T_list,
               const std::string& out_path) {
  auto generator = [&](int T) {
    return kind == "sinusoid" ? synth_sinusoid(T, seed, w_total, r_total)
                              : synth_two_peak(T, seed, w_total, r_total);
  };
  std::vector<Table2Row> rows =
      table2_sweep(generator, predicted_r - predicted_w, g_N, T_list);
  std::string csv = "T,delta,variance,leader_cost,ratio\n";
  std::printf("%8s %14s %14s %14s %14s\n", "T", "delta", "variance",
              "leader_cost", "ratio");
  for (const auto& row : rows) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", row.T,
                  row.delta, row.variance, row.cost, row.ratio);
    csv += buf;
    std::printf("%8d %14.6g %14.6g %14.6g %14.6g\n", row.T, row.delta,
                row.variance, row.cost, row.ratio);
  }
  if (!out_path.empty()) write_file_atomic(out_path, csv);
  return kOk;
}

int run_synth(const std::string& kind, int T, std::uint64_t seed,
              double w_total, double r_total, const std::string& out_path) {
  if (!(w_total > 0) || !(r_total > 0))
    throw ValidationError("totals must be positive");
  Scenario sc = kind == "sinusoid" ? synth_sinusoid(T, seed, w_total, r_total)
                                   : synth_two_peak(T, seed, w_total, r_total);
  std::string csv = scenario_to_csv(
      sc, {"kind: " + kind, "seed: " + std::to_string(seed),
           "w_total: " + std::to_string(w_total),
           "r_total: " + std::to_string(r_total)});
  if (out_path.empty())
    std::fputs(csv.c_str(), stdout);
  else
    write_file_atomic(out_path, csv);
  return kOk;
}

int run_verify(const std::string& report_path) {
  ReportFile rf = load_report(report_path);
  verify_report(rf);
  std::printf("report verified: leader_cost %.17g, method %s\n",
              rf.report.leader_cost, method_name(rf.report.method));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{"Stackelberg pricing solver for flexible-demand smart grids"};
  app.require_subcommand(1);

  CommonArgs args;
  bool has_prediction = false;
  double prediction_b = 0;

  auto add_inputs = [&](CLI::App* cmd) {
    cmd->add_option("scenario", args.scenario_path, "scenario CSV (t,w,r)")
        ->required();
    cmd->add_option("users", args.users_path, "users CSV (i,g,nu_max)")
        ->required();
  };

  CLI::App* check = app.add_subcommand("check", "evaluate the closed-form "
                                                "feasibility conditions");
  add_inputs(check);
  check->add_option("--prediction", prediction_b,
                    "forecast b of mean(r - w); adds the condition (17) check")
      ->each([&](const std::string&) { has_prediction = true; });

  CLI::App* solve = app.add_subcommand("solve", "compute the Stackelberg "
                                                "equilibrium");
  add_inputs(solve);
  solve->add_option("--mode", args.mode, "auto|analytic|numeric")
      ->check(CLI::IsMember({"auto", "analytic", "numeric"}));
  solve->add_option("--eps", args.eps, "price-search tolerance eps0");
  solve->add_option("--eps-step", args.eps_step,
                    "price adjustment step (default: eps)");
  solve->add_option("--max-iter", args.max_iter, "outer iteration cap");
  solve->add_option("--seed", args.seed, "seed for --random-init");
  solve->add_flag("--random-init", args.random_init,
                  "random positive starting rule");
  solve->add_option("--out", args.out_path, "report JSON path");

  CLI::App* predict = app.add_subcommand(
      "predict", "forecast-based pricing via condition (17)");
  add_inputs(predict);
  predict->add_option("--prediction", prediction_b, "forecast b of mean(r - w)")
      ->required();
  predict->add_option("--out", args.out_path, "report JSON path");

  std::string kind = "two-peak";
  int synth_T = 24;
  double w_total = 110.1, r_total = 121.1;
  double predicted_w = 125.0, predicted_r = 120.0, g_N = 41.6;
  std::vector<int> T_list;
  CLI::App* table2 = app.add_subcommand(
      "table2", "forecast-error cost sweep over slot counts");
  table2->add_option("--kind", kind, "sinusoid|two-peak")
      ->check(CLI::IsMember({"sinusoid", "two-peak"}));
  table2->add_option("--seed", args.seed, "day-curve seed");
  table2->add_option("--w-total", w_total, "actual daily generation total");
  table2->add_option("--r-total", r_total, "actual daily inflexible total");
  table2->add_option("--predicted-w", predicted_w, "forecast generation total");
  table2->add_option("--predicted-r", predicted_r, "forecast inflexible total");
  table2->add_option("--gn", g_N, "total flexible demand g_N");
  table2->add_option("--T-list", T_list, "slot counts to sweep")->delimiter(',');
  table2->add_option("--out", args.out_path, "table CSV path");

  CLI::App* synth = app.add_subcommand("synth", "generate a seeded scenario");
  synth->add_option("--kind", kind, "sinusoid|two-peak")
      ->check(CLI::IsMember({"sinusoid", "two-peak"}));
  synth->add_option("--T", synth_T, "slot count");
  synth->add_option("--seed", args.seed, "curve seed");
  synth->add_option("--w-total", w_total, "daily generation total");
  synth->add_option("--r-total", r_total, "daily inflexible total");
  synth->add_option("--out", args.out_path, "scenario CSV path");

  std::string report_path;
  CLI::App* verify = app.add_subcommand("verify", "re-check a report file");
  verify->add_option("report", report_path, "report JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (check->parsed()) return run_check(args, has_prediction, prediction_b);
    if (solve->parsed()) return run_solve(args);
    if (predict->parsed()) return run_predict(args, prediction_b);
    if (table2->parsed()) {
      if (T_list.empty()) {
        std::fprintf(stderr, "error: --T-list must not be empty\n");
        return kInputError;
      }
      return run_table2(kind, args.seed, w_total, r_total, predicted_w,
                        predicted_r, g_N, T_list, args.out_path);
    }
    if (synth->parsed())
      return run_synth(kind, synth_T, args.seed, w_total, r_total,
                       args.out_path);
    if (verify->parsed()) return run_verify(report_path);
  } catch (const ConditionViolation& e) {
    std::fprintf(stderr, "condition (%d) not satisfied: %s\n", e.clause,
                 e.what());
    return kConditionFailed;
  } catch (const ValidationError& e) {
    if (e.line > 0)
      std::fprintf(stderr, "error: line %d: %s\n", e.line, e.what());
    else
      std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  } catch (const MaxIterExceeded& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    for (std::size_t k = 0; k < e.residuals.size(); ++k)
      std::fprintf(stderr, "  sweep %zu residual %.17g\n", k + 1,
                   e.residuals[k]);
    return kSolverFailure;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kSolverFailure;
  }
  return kOk;
}
