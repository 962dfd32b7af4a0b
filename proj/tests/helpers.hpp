#pragma once

#include "stackgrid/types.hpp"

#include <random>

namespace testutil {

using namespace stackgrid;

inline double u01(std::mt19937_64& eng) {
  return (eng() >> 11) * 0x1.0p-53;
}

inline VectorXd uniform_vec(std::mt19937_64& eng, int len, double lo,
                            double hi) {
  VectorXd v(len);
  for (int i = 0; i < len; ++i) v[i] = lo + (hi - lo) * u01(eng);
  return v;
}

/// Positive w,r around a unit baseline; amp < 1 keeps everything positive.
inline Scenario random_scenario(std::mt19937_64& eng, int T,
                                double amp = 0.5) {
  return Scenario(uniform_vec(eng, T, 1.0 - amp, 1.0 + amp),
                  uniform_vec(eng, T, 1.0 - amp, 1.0 + amp));
}

inline FlexUserSet random_users(std::mt19937_64& eng, int n, int T,
                                double g_lo = 0.5, double g_hi = 3.0,
                                double cap_over_g = 2.0) {
  VectorXd g = uniform_vec(eng, n, g_lo, g_hi);
  return FlexUserSet(g, (cap_over_g / T) * g);
}

/// Each row is a random positive schedule normalized to total g_i.
inline DemandProfile random_feasible_profile(std::mt19937_64& eng,
                                             const FlexUserSet& users, int T) {
  DemandProfile out;
  out.values.resize(users.n, T);
  for (int i = 0; i < users.n; ++i) {
    VectorXd row = uniform_vec(eng, T, 0.1, 1.0);
    out.values.row(i) = (users.g[i] / row.sum()) * row.transpose();
  }
  return out;
}

}  // namespace testutil
