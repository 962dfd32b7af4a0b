#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stackgrid/analytic.hpp"
#include "stackgrid/gamecore.hpp"
#include "stackgrid/leader.hpp"
#include "stackgrid/oracle.hpp"

#include "helpers.hpp"

using namespace stackgrid;
using testutil::random_scenario;
using testutil::random_users;
using testutil::uniform_vec;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

VectorXd variance_gradient(const VectorXd& nu_N, const Scenario& sc) {
  VectorXd c = nu_N + sc.r - sc.w;
  return (2.0 / sc.T) * (c.array() - c.mean()).matrix();
}

}  // namespace

TEST_CASE("leader qp") {
  std::mt19937_64 eng(19);

  SUBCASE("interior optimum equals the analytic supply under condition 12") {
    for (int rep = 0; rep < 10; ++rep) {
      int n = 2 + static_cast<int>(eng() % 5);
      int T = 2 + static_cast<int>(eng() % 5);
      Scenario sc = random_scenario(eng, T, 0.03);
      FlexUserSet users = random_users(eng, n, T);
      REQUIRE(check_perfect_se(sc, users).satisfied);
      LeaderTarget target = leader_qp(sc, users);
      CHECK((target.nu_N_star - optimal_tilde_w(sc, users))
                .cwiseAbs()
                .maxCoeff() < 1e-9);
      CHECK(target.optimal_cost <= 1e-18);
      CHECK(target.active_lower.empty());
      CHECK(target.active_upper.empty());
    }
  }

  SUBCASE("w == r gives the flat schedule") {
    VectorXd w = uniform_vec(eng, 5, 0.5, 2.0);
    Scenario sc(w, w);
    FlexUserSet users = random_users(eng, 3, 5);
    LeaderTarget target = leader_qp(sc, users);
    CHECK((target.nu_N_star.array() - users.g_total() / 5).abs().maxCoeff() <
          1e-9);
  }

  SUBCASE("clipped slot hits the cap and satisfies the KKT oracle") {
    Scenario sc(vec({20, 1, 1, 1}), vec({1, 1, 1, 1}));
    FlexUserSet users(vec({2, 2}), vec({0.8, 0.8}));
    LeaderTarget target = leader_qp(sc, users);
    double cap = users.nu_max_total();
    CHECK(target.nu_N_star[0] == doctest::Approx(cap).epsilon(1e-12));
    CHECK(std::find(target.active_upper.begin(), target.active_upper.end(),
                    0) != target.active_upper.end());
    CHECK(std::abs(target.nu_N_star.sum() - users.g_total()) <
          1e-9 * users.g_total());
    CHECK(projected_stationarity(variance_gradient(target.nu_N_star, sc),
                                 target.nu_N_star, 0.0,
                                 VectorXd::Constant(4, cap)) < 1e-9);
  }

  SUBCASE("random instances: feasibility, sum, and stationarity") {
    for (int rep = 0; rep < 20; ++rep) {
      int T = 2 + static_cast<int>(eng() % 12);
      Scenario sc = random_scenario(eng, T, 0.9);
      FlexUserSet users = random_users(eng, 3, T, 0.3, 1.0, 1.5);
      LeaderTarget target = leader_qp(sc, users);
      double cap = users.nu_max_total();
      CHECK(target.nu_N_star.minCoeff() >= -1e-12);
      CHECK(target.nu_N_star.maxCoeff() <= cap + 1e-12);
      CHECK(std::abs(target.nu_N_star.sum() - users.g_total()) <
            1e-9 * std::max(1.0, users.g_total()));
      CHECK(projected_stationarity(variance_gradient(target.nu_N_star, sc),
                                   target.nu_N_star, 0.0,
                                   VectorXd::Constant(T, cap)) < 1e-9);
    }
  }

  SUBCASE("invariant to common shifts of w and r") {
    Scenario sc = random_scenario(eng, 6, 0.4);
    FlexUserSet users = random_users(eng, 4, 6);
    Scenario shifted(sc.w.array() + 5.0, sc.r.array() + 5.0);
    CHECK((leader_qp(sc, users).nu_N_star -
           leader_qp(shifted, users).nu_N_star)
              .cwiseAbs()
              .maxCoeff() < 1e-9);
  }

  SUBCASE("aggregate infeasibility is rejected") {
    Scenario sc = random_scenario(eng, 4, 0.2);
    FlexUserSet users(vec({10.0}), vec({1.0}));
    CHECK_THROWS_AS(leader_qp(sc, users), InfeasibleBounds);
  }

  SUBCASE("zero optimum iff the flat-c profile fits the box") {
    Scenario sc(vec({3, 1}), vec({1, 1}));
    FlexUserSet fits(vec({4.0}), vec({3.0}));  // nu_N* = (3,1), cap 3
    CHECK(leader_qp(sc, fits).optimal_cost <= 1e-18);
    FlexUserSet clipped(vec({4.0}), vec({2.5}));  // slot 1 demand 3 > cap
    CHECK(leader_qp(sc, clipped).optimal_cost > 1e-6);
  }
}

TEST_CASE("price search") {
  std::mt19937_64 eng(23);
  Scenario sc = random_scenario(eng, 6, 0.03);
  FlexUserSet users = random_users(eng, 4, 6);
  REQUIRE(check_perfect_se(sc, users).satisfied);
  PricingRule star = optimal_rule(sc, users);
  TildePair tp = tilde_transform(sc, star);

  SUBCASE("already-optimal start converges without adjusting r~") {
    PriceSearchResult res =
        price_search(sc, users, 1e-6, tp.w, tp.r, 100);
    CHECK(res.trace.converged);
    CHECK(res.trace.iterations == 1);
    CHECK((res.trace.final_rt - tp.r).cwiseAbs().maxCoeff() == 0.0);
    CHECK(res.report.leader_cost <= 1e-16);
  }

  SUBCASE("perturbed start recovers the target aggregate") {
    VectorXd rt = tp.r + uniform_vec(eng, 6, -0.05, 0.05);
    PriceSearchResult res =
        price_search(sc, users, 1e-5, tp.w, rt, 5000, 1e-4);
    CHECK(res.trace.converged);
    CHECK(res.trace.sup_errors.back() < 1e-5);
    LeaderTarget target = leader_qp(sc, users);
    CHECK((res.report.demand.aggregate() - target.nu_N_star)
              .cwiseAbs()
              .maxCoeff() < 1e-5);
    double g_N = users.g_total();
    CHECK(std::abs(res.report.demand.aggregate().sum() - g_N) <= 1e-8 * g_N);
  }
}

TEST_CASE("numeric stackelberg equilibrium") {
  std::mt19937_64 eng(29);

  SUBCASE("agrees with the analytic path under condition 12") {
    Scenario sc = random_scenario(eng, 6, 0.03);
    FlexUserSet users = random_users(eng, 4, 6);
    REQUIRE(check_perfect_se(sc, users).satisfied);
    NumericSeOptions opt;
    opt.tol = 1e-6;
    PriceSearchResult res = numeric_se(sc, users, opt);
    CHECK(res.trace.converged);
    CHECK(res.report.method == Method::numeric);
    CHECK(res.report.leader_cost <= 1e-12);
    DemandProfile analytic = analytic_nash(sc, users);
    CHECK((res.report.demand.values - analytic.values).cwiseAbs().maxCoeff() <
          10 * opt.tol);
  }

  SUBCASE("per-user infeasibility is rejected before iterating") {
    Scenario sc = random_scenario(eng, 4, 0.2);
    FlexUserSet users(vec({10.0, 1.0}), vec({1.0, 1.0}));
    CHECK_THROWS_AS(numeric_se(sc, users), InfeasibleBounds);
  }

  SUBCASE("deterministic across runs") {
    Scenario sc = random_scenario(eng, 5, 0.3);
    FlexUserSet users = random_users(eng, 3, 5);
    PriceSearchResult a = numeric_se(sc, users);
    PriceSearchResult b = numeric_se(sc, users);
    CHECK(a.report.demand.values == b.report.demand.values);
    CHECK(a.report.leader_cost == b.report.leader_cost);
    CHECK(a.trace.final_rt == b.trace.final_rt);
  }

  SUBCASE("condition-12-violating instance approaches the QP optimum") {
    // strong supply swings so the analytic supply leaves the box
    std::mt19937_64 eng2(31);
    VectorXd w = uniform_vec(eng2, 8, 0.2, 3.0);
    VectorXd r = uniform_vec(eng2, 8, 0.2, 3.0);
    Scenario sc(w, r);
    FlexUserSet users = random_users(eng2, 5, 8, 0.3, 1.0, 1.2);
    REQUIRE(!check_perfect_se(sc, users).satisfied);
    NumericSeOptions opt;
    opt.tol = 1e-3 * users.g_total() / sc.T;
    PriceSearchResult res = numeric_se(sc, users, opt);
    CHECK(res.trace.converged);
    double qp = leader_qp(sc, users).optimal_cost;
    CHECK(res.report.leader_cost <=
          qp + 0.05 * std::max(qp, 1e-6) + 10 * opt.tol * opt.tol);
  }

  SUBCASE("random initialization is seeded and reproducible") {
    Scenario sc = random_scenario(eng, 5, 0.1);
    FlexUserSet users = random_users(eng, 3, 5);
    NumericSeOptions opt;
    opt.random_init = true;
    opt.seed = 4242;
    opt.tol = 1e-4;
    opt.max_outer = 20000;
    PriceSearchResult a = numeric_se(sc, users, opt);
    PriceSearchResult b = numeric_se(sc, users, opt);
    CHECK(a.trace.final_rt == b.trace.final_rt);
  }
}

TEST_CASE("raising r~(t) lowers slot-t aggregate demand in the hyperplane game") {
  std::mt19937_64 eng(37);
  for (int rep = 0; rep < 10; ++rep) {
    int n = 1 + static_cast<int>(eng() % 6);
    int T = 2 + static_cast<int>(eng() % 8);
    FlexUserSet users = random_users(eng, n, T);
    VectorXd wt = uniform_vec(eng, T, 0.5, 2.0);
    VectorXd rt = uniform_vec(eng, T, 0.1, 1.0);
    int t = static_cast<int>(eng() % T);
    double h = 1e-6;
    VectorXd rt_hi = rt, rt_lo = rt;
    rt_hi[t] += h;
    rt_lo[t] -= h;
    double hi = general_nash(wt, rt_hi, users).aggregate()[t];
    double lo = general_nash(wt, rt_lo, users).aggregate()[t];
    CHECK((hi - lo) / (2 * h) < 0);
  }
}
