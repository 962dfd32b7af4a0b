#pragma once

#include "stackgrid/types.hpp"

#include <string>
#include <vector>

namespace stackgrid {

inline constexpr const char* kToolVersion = "stackgrid 1.0.0";

/// FNV-1a 64-bit digest of a byte string.
std::uint64_t fnv1a64(const std::string& bytes);

/// Canonical full-precision serializations. Digests are computed over these
/// canonical forms, so they depend only on parsed values, not on incidental
/// comments or formatting in the source files.
std::string scenario_to_csv(const Scenario& sc,
                            const std::vector<std::string>& comments = {});
std::string users_to_csv(const FlexUserSet& users);

Scenario scenario_from_csv(const std::string& text);
FlexUserSet users_from_csv(const std::string& text);

Scenario read_scenario(const std::string& path);
FlexUserSet read_users(const std::string& path);

/// Write via temp file + rename.
void write_file_atomic(const std::string& path, const std::string& content);

struct SolveParams {
  std::string mode = "auto";
  double eps = 1e-6;
  double eps_step = -1;  // <= 0 means "defaulted to eps"
  long max_iter = 5000;
  std::uint64_t seed = 0;
  bool random_init = false;
  bool has_prediction = false;
  double prediction_b = 0;
};

struct ReportFile {
  Scenario scenario;
  FlexUserSet users;
  PricingRule rule;
  EquilibriumReport report;
  SolveParams params;
  std::uint64_t scenario_digest = 0;  // fnv1a64 of the canonical CSV
  std::uint64_t users_digest = 0;
};

/// Bundle solver output with its inputs and fill in the digests.
ReportFile make_report_file(const Scenario& sc, const FlexUserSet& users,
                            const PricingRule& rule,
                            const EquilibriumReport& report,
                            const SolveParams& params);

std::string report_to_json(const ReportFile& rf);
ReportFile report_from_json(const std::string& text);

/// Companion plotting series: t,w,r,c,nu_N,price plus one column per user.
std::string report_series_csv(const ReportFile& rf);

/// Writes the JSON report and the companion CSV next to it
/// (<out>.json -> <out>.series.csv). Returns the companion path.
std::string write_report(const std::string& out_path, const ReportFile& rf);

ReportFile load_report(const std::string& path);

/// Recomputes prices, costs, digests, and a one-sweep best-response residual
/// from the embedded inputs; throws ValidationError on any mismatch.
void verify_report(const ReportFile& rf);

}  // namespace stackgrid
