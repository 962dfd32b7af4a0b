#include "stackgrid/io.hpp"

#include "stackgrid/followers.hpp"
#include "stackgrid/gamecore.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>

namespace stackgrid {

namespace {

using nlohmann::json;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    auto pos = line.find(',');
    if (pos == std::string_view::npos) {
      out.push_back(trim(line));
      return out;
    }
    out.push_back(trim(line.substr(0, pos)));
    line.remove_prefix(pos + 1);
  }
}

double parse_double(std::string_view s, int line_no) {
  double v;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ValidationError("cannot parse number '" + std::string(s) + "'",
                          line_no);
  return v;
}

long parse_long(std::string_view s, int line_no) {
  long v;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ValidationError("cannot parse integer '" + std::string(s) + "'",
                          line_no);
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json vec_to_json(const VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

VectorXd vec_from_json(const json& j) {
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string scenario_to_csv(const Scenario& sc,
                            const std::vector<std::string>& comments) {
  std::string out = "# slot_hours: " + fmt(sc.slot_hours) + "\n";
  for (const auto& c : comments) out += "# " + c + "\n";
  out += "t,w,r\n";
  for (int t = 0; t < sc.T; ++t)
    out += std::to_string(t + 1) + "," + fmt(sc.w[t]) + "," + fmt(sc.r[t]) +
           "\n";
  return out;
}

std::string users_to_csv(const FlexUserSet& users) {
  std::string out = "i,g,nu_max\n";
  for (int i = 0; i < users.n; ++i)
    out += std::to_string(i + 1) + "," + fmt(users.g[i]) + "," +
           fmt(users.nu_max[i]) + "\n";
  return out;
}

Scenario scenario_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  double slot_hours = 1.0;
  bool header_seen = false;
  std::vector<double> w, r;
  int expected_t = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body = trim(line.substr(1));
      if (body.starts_with("slot_hours:"))
        slot_hours = parse_double(trim(body.substr(11)), line_no);
      continue;
    }
    if (!header_seen) {
      if (line != "t,w,r")
        throw ValidationError("expected header 't,w,r'", line_no);
      header_seen = true;
      continue;
    }
    auto f = split_fields(line);
    if (f.size() != 3)
      throw ValidationError("expected 3 columns t,w,r", line_no);
    long t = parse_long(f[0], line_no);
    if (t != expected_t)
      throw ValidationError("slot index must be " +
                                std::to_string(expected_t) + ", got " +
                                std::to_string(t),
                            line_no);
    ++expected_t;
    double wv = parse_double(f[1], line_no);
    double rv = parse_double(f[2], line_no);
    if (std::isnan(wv) || std::isnan(rv))
      throw ValidationError("NaN value", line_no);
    if (wv < 0 || rv < 0) throw ValidationError("negative value", line_no);
    w.push_back(wv);
    r.push_back(rv);
  }
  if (!header_seen) throw ValidationError("missing header 't,w,r'", line_no);
  return Scenario(Eigen::Map<VectorXd>(w.data(), w.size()),
                  Eigen::Map<VectorXd>(r.data(), r.size()), slot_hours);
}

FlexUserSet users_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  bool header_seen = false;
  std::vector<double> g, cap;
  int expected_i = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') continue;
    if (!header_seen) {
      if (line != "i,g,nu_max")
        throw ValidationError("expected header 'i,g,nu_max'", line_no);
      header_seen = true;
      continue;
    }
    auto f = split_fields(line);
    if (f.size() != 3)
      throw ValidationError("expected 3 columns i,g,nu_max", line_no);
    long i = parse_long(f[0], line_no);
    if (i != expected_i)
      throw ValidationError("user index must be " +
                                std::to_string(expected_i) + ", got " +
                                std::to_string(i),
                            line_no);
    ++expected_i;
    g.push_back(parse_double(f[1], line_no));
    cap.push_back(parse_double(f[2], line_no));
  }
  if (!header_seen)
    throw ValidationError("missing header 'i,g,nu_max'", line_no);
  return FlexUserSet(Eigen::Map<VectorXd>(g.data(), g.size()),
                     Eigen::Map<VectorXd>(cap.data(), cap.size()));
}

Scenario read_scenario(const std::string& path) {
  return scenario_from_csv(read_file(path));
}

FlexUserSet read_users(const std::string& path) {
  return users_from_csv(read_file(path));
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp~";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp);
    out << content;
    if (!out) throw ValidationError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

ReportFile make_report_file(const Scenario& sc, const FlexUserSet& users,
                            const PricingRule& rule,
                            const EquilibriumReport& report,
                            const SolveParams& params) {
  return ReportFile{sc,     users,
                    rule,   report,
                    params, fnv1a64(scenario_to_csv(sc)),
                    fnv1a64(users_to_csv(users))};
}

std::string report_to_json(const ReportFile& rf) {
  json j;
  j["tool_version"] = kToolVersion;
  j["digests"] = {{"scenario_fnv1a64", rf.scenario_digest},
                  {"users_fnv1a64", rf.users_digest}};
  j["params"] = {{"mode", rf.params.mode},
                 {"eps", rf.params.eps},
                 {"eps_step", rf.params.eps_step},
                 {"max_iter", rf.params.max_iter},
                 {"seed", rf.params.seed},
                 {"random_init", rf.params.random_init}};
  if (rf.params.has_prediction)
    j["params"]["prediction_b"] = rf.params.prediction_b;
  j["inputs"]["scenario"] = {{"slot_hours", rf.scenario.slot_hours},
                             {"w", vec_to_json(rf.scenario.w)},
                             {"r", vec_to_json(rf.scenario.r)}};
  j["inputs"]["users"] = {{"g", vec_to_json(rf.users.g)},
                          {"nu_max", vec_to_json(rf.users.nu_max)}};
  j["rule"] = {{"a1", vec_to_json(rf.rule.a1)},
               {"a2", vec_to_json(rf.rule.a2)}};
  json eq;
  eq["method"] = method_name(rf.report.method);
  eq["iterations"] = rf.report.iterations;
  eq["final_residual"] = rf.report.final_residual;
  eq["leader_cost"] = rf.report.leader_cost;
  eq["condition12_satisfied"] = rf.report.condition12_satisfied;
  eq["strict_ne_ok"] = rf.report.strict_ne_ok;
  eq["prices"] = vec_to_json(rf.report.prices);
  eq["controllable"] = vec_to_json(rf.report.controllable);
  eq["user_costs"] = vec_to_json(rf.report.user_costs);
  json demand = json::array();
  for (int i = 0; i < rf.report.demand.users(); ++i)
    demand.push_back(vec_to_json(rf.report.demand.values.row(i).transpose()));
  eq["demand"] = std::move(demand);
  j["equilibrium"] = std::move(eq);
  return j.dump(2) + "\n";
}

ReportFile report_from_json(const std::string& text) {
  json j = json::parse(text);
  const json& in_sc = j.at("inputs").at("scenario");
  Scenario sc(vec_from_json(in_sc.at("w")), vec_from_json(in_sc.at("r")),
              in_sc.at("slot_hours").get<double>());
  const json& in_u = j.at("inputs").at("users");
  FlexUserSet users(vec_from_json(in_u.at("g")),
                    vec_from_json(in_u.at("nu_max")));
  PricingRule rule{vec_from_json(j.at("rule").at("a1")),
                   vec_from_json(j.at("rule").at("a2"))};

  const json& eq = j.at("equilibrium");
  EquilibriumReport rep;
  rep.method = eq.at("method").get<std::string>() == "numeric"
                   ? Method::numeric
                   : Method::analytic;
  rep.iterations = eq.at("iterations").get<long>();
  rep.final_residual = eq.at("final_residual").get<double>();
  rep.leader_cost = eq.at("leader_cost").get<double>();
  rep.condition12_satisfied = eq.at("condition12_satisfied").get<bool>();
  rep.strict_ne_ok = eq.at("strict_ne_ok").get<bool>();
  rep.prices = vec_from_json(eq.at("prices"));
  rep.controllable = vec_from_json(eq.at("controllable"));
  rep.user_costs = vec_from_json(eq.at("user_costs"));
  const json& demand = eq.at("demand");
  rep.demand.values.resize(demand.size(), sc.T);
  for (std::size_t i = 0; i < demand.size(); ++i)
    rep.demand.values.row(i) = vec_from_json(demand[i]).transpose();

  SolveParams params;
  const json& p = j.at("params");
  params.mode = p.at("mode").get<std::string>();
  params.eps = p.at("eps").get<double>();
  params.eps_step = p.at("eps_step").get<double>();
  params.max_iter = p.at("max_iter").get<long>();
  params.seed = p.at("seed").get<std::uint64_t>();
  params.random_init = p.at("random_init").get<bool>();
  if (p.contains("prediction_b")) {
    params.has_prediction = true;
    params.prediction_b = p.at("prediction_b").get<double>();
  }

  const json& d = j.at("digests");
  return ReportFile{std::move(sc),
                    std::move(users),
                    std::move(rule),
                    std::move(rep),
                    std::move(params),
                    d.at("scenario_fnv1a64").get<std::uint64_t>(),
                    d.at("users_fnv1a64").get<std::uint64_t>()};
}

std::string report_series_csv(const ReportFile& rf) {
  std::string out = "t,w,r,c,nu_N,price";
  for (int i = 0; i < rf.users.n; ++i)
    out += ",nu_" + std::to_string(i + 1);
  out += "\n";
  VectorXd nu_N = rf.report.demand.aggregate();
  for (int t = 0; t < rf.scenario.T; ++t) {
    out += std::to_string(t + 1) + "," + fmt(rf.scenario.w[t]) + "," +
           fmt(rf.scenario.r[t]) + "," + fmt(rf.report.controllable[t]) +
           "," + fmt(nu_N[t]) + "," + fmt(rf.report.prices[t]);
    for (int i = 0; i < rf.users.n; ++i)
      out += "," + fmt(rf.report.demand.values(i, t));
    out += "\n";
  }
  return out;
}

std::string write_report(const std::string& out_path, const ReportFile& rf) {
  std::string series_path = out_path;
  if (series_path.ends_with(".json"))
    series_path.resize(series_path.size() - 5);
  series_path += ".series.csv";
  write_file_atomic(out_path, report_to_json(rf));
  write_file_atomic(series_path, report_series_csv(rf));
  return series_path;
}

ReportFile load_report(const std::string& path) {
  try {
    return report_from_json(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
}

void verify_report(const ReportFile& rf) {
  if (rf.scenario_digest != fnv1a64(scenario_to_csv(rf.scenario)))
    throw ValidationError("scenario digest mismatch");
  if (rf.users_digest != fnv1a64(users_to_csv(rf.users)))
    throw ValidationError("users digest mismatch");

  const bool use_box = rf.report.method == Method::numeric;
  if (!rf.report.demand.hyperplane_feasible(rf.users))
    throw ValidationError("demand rows do not sum to g");
  if (use_box && !rf.report.demand.box_feasible(rf.users))
    throw ValidationError("demand violates per-slot caps");

  TildePair tp = tilde_transform(rf.scenario, rf.rule);
  VectorXd prices = price_series(tp.w, tp.r, rf.report.demand.aggregate());
  for (int t = 0; t < rf.scenario.T; ++t)
    if (!close_rel(prices[t], rf.report.prices[t], 1e-9))
      throw ValidationError("price mismatch at slot " + std::to_string(t + 1));

  VectorXd c = rf.report.demand.aggregate() + rf.scenario.r - rf.scenario.w;
  if ((c - rf.report.controllable).cwiseAbs().maxCoeff() >
      1e-9 * std::max(1.0, c.cwiseAbs().maxCoeff()))
    throw ValidationError("controllable series mismatch");
  if (!close_rel(population_variance(c), rf.report.leader_cost, 1e-12))
    throw ValidationError("leader cost mismatch");
  for (int i = 0; i < rf.users.n; ++i)
    if (!close_rel(prices.dot(rf.report.demand.values.row(i).transpose()),
                   rf.report.user_costs[i], 1e-9))
      throw ValidationError("user cost mismatch for user " +
                            std::to_string(i + 1));

  // one extra Gauss-Seidel sweep must barely move a converged profile
  DemandProfile swept = rf.report.demand;
  for (int i = 0; i < rf.users.n; ++i) {
    VectorXd br = use_box
                      ? box_best_response(i, swept, tp.w, tp.r, rf.users)
                      : hyperplane_best_response(i, swept, tp.w, tp.r,
                                                 rf.users);
    swept.values.row(i) = br.transpose();
  }
  double residual = profile_norm1(swept.values - rf.report.demand.values);
  double bound = std::max(10.0 * rf.params.eps, 1e-7);
  if (residual > bound)
    throw ValidationError("equilibrium residual " + std::to_string(residual) +
                          " exceeds bound " + std::to_string(bound));
}

}  // namespace stackgrid
