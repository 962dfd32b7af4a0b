#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stackgrid/analytic.hpp"
#include "stackgrid/io.hpp"
#include "stackgrid/synth.hpp"

#include "helpers.hpp"

#include <filesystem>
#include <fstream>

using namespace stackgrid;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "stackgrid_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("fnv1a64 known vectors") {
  CHECK(fnv1a64("") == 14695981039346656037ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("scenario CSV round trip is exact") {
  Scenario sc = synth_two_peak(24, 9, 110.1, 121.1);
  Scenario back = scenario_from_csv(scenario_to_csv(sc));
  CHECK(back.T == sc.T);
  CHECK(back.slot_hours == sc.slot_hours);
  CHECK(back.w == sc.w);
  CHECK(back.r == sc.r);
}

TEST_CASE("users CSV round trip is exact") {
  std::mt19937_64 eng(13);
  FlexUserSet users = testutil::random_users(eng, 7, 24);
  FlexUserSet back = users_from_csv(users_to_csv(users));
  CHECK(back.g == users.g);
  CHECK(back.nu_max == users.nu_max);
}

TEST_CASE("scenario parsing rejects malformed input with line numbers") {
  auto expect_line = [](const std::string& text, int line) {
    try {
      scenario_from_csv(text);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(e.line == line);
    }
  };
  expect_line("t,w\n1,2\n", 1);                      // wrong header
  expect_line("t,w,r\n1,2\n", 2);                    // missing column
  expect_line("t,w,r\n1,2,3\n3,2,3\n", 3);           // gap in slot index
  expect_line("t,w,r\n1,nan,3\n2,1,1\n", 2);         // NaN
  expect_line("t,w,r\n1,-2,3\n2,1,1\n", 2);          // negative
  expect_line("t,w,r\n1,2,x\n2,1,1\n", 2);           // junk field
  CHECK_THROWS_AS(scenario_from_csv(""), ValidationError);
  CHECK_THROWS_AS(scenario_from_csv("t,w,r\n1,2,3\n"), ValidationError);
}

TEST_CASE("users parsing validates header and ordering") {
  CHECK_THROWS_AS(users_from_csv("i,g\n1,2\n"), ValidationError);
  CHECK_THROWS_AS(users_from_csv("i,g,nu_max\n2,2,1\n"), ValidationError);
  CHECK_THROWS_AS(users_from_csv("i,g,nu_max\n1,-2,1\n"), ValidationError);
  FlexUserSet ok = users_from_csv("i,g,nu_max\n1,2,0.5\n2,3,0.75\n");
  CHECK(ok.n == 2);
}

TEST_CASE("metadata comments carry slot_hours and are otherwise ignored") {
  Scenario sc = scenario_from_csv(
      "# generated by hand\n# slot_hours: 0.5\nt,w,r\n1,2,3\n2,1,1\n");
  CHECK(sc.slot_hours == 0.5);
  CHECK(sc.T == 2);
}

TEST_CASE("atomic write creates the file with exact content") {
  auto path = (temp_dir() / "atomic.txt").string();
  write_file_atomic(path, "payload\n");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "payload");
  CHECK(!std::filesystem::exists(path + ".tmp~"));
  std::filesystem::remove(path);
}

TEST_CASE("report files round trip and self-verify") {
  Scenario sc = synth_sinusoid(12, 3, 30.0, 29.5, 0.05, 0.05);
  std::mt19937_64 eng(17);
  FlexUserSet users = testutil::random_users(eng, 4, 12);
  EquilibriumReport rep = analytic_se(sc, users);
  ReportFile rf = make_report_file(sc, users, optimal_rule(sc, users), rep,
                                   SolveParams{});

  SUBCASE("json round trip preserves the equilibrium exactly") {
    ReportFile back = report_from_json(report_to_json(rf));
    CHECK(back.report.demand.values == rf.report.demand.values);
    CHECK(back.report.leader_cost == rf.report.leader_cost);
    CHECK(back.scenario.w == rf.scenario.w);
    CHECK(back.scenario_digest == rf.scenario_digest);
    CHECK(back.params.eps == rf.params.eps);
  }

  SUBCASE("verify passes on an untouched report") {
    CHECK_NOTHROW(verify_report(rf));
  }

  SUBCASE("verify catches a tampered leader cost") {
    ReportFile bad = rf;
    bad.report.leader_cost += 1e-3;
    CHECK_THROWS_AS(verify_report(bad), ValidationError);
  }

  SUBCASE("verify catches a tampered digest") {
    ReportFile bad = rf;
    bad.users_digest ^= 1;
    CHECK_THROWS_AS(verify_report(bad), ValidationError);
  }

  SUBCASE("verify catches a tampered demand profile") {
    ReportFile bad = rf;
    bad.report.demand.values(0, 0) += 0.05;
    CHECK_THROWS_AS(verify_report(bad), ValidationError);
  }

  SUBCASE("write_report emits the json and the series companion") {
    auto out = (temp_dir() / "report.json").string();
    std::string series = write_report(out, rf);
    CHECK(series.ends_with(".series.csv"));
    ReportFile loaded = load_report(out);
    CHECK_NOTHROW(verify_report(loaded));
    std::ifstream in(series);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,w,r,c,nu_N,price,nu_1,nu_2,nu_3,nu_4");
    std::filesystem::remove(out);
    std::filesystem::remove(series);
  }

  SUBCASE("malformed report json is an input error") {
    auto out = (temp_dir() / "broken.json").string();
    write_file_atomic(out, "{not json");
    CHECK_THROWS_AS(load_report(out), ValidationError);
    std::filesystem::remove(out);
  }
}
