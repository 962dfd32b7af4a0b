#include "stackgrid/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace stackgrid {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double uniform01(std::mt19937_64& eng) {
  return (eng() >> 11) * 0x1.0p-53;
}

/// Sample `shape` (hours -> nonnegative density) at slot midpoints and
/// rescale so the slot values sum to `total`.
template <class F>
VectorXd sample_day(int T, double total, F&& shape) {
  VectorXd out(T);
  for (int t = 0; t < T; ++t) out[t] = shape((t + 0.5) * 24.0 / T);
  double s = out.sum();
  if (!(s > 0)) throw ValidationError("day shape integrates to zero");
  return out * (total / s);
}

double gauss_bump(double tau, double center, double width) {
  double d = (tau - center) / width;
  return std::exp(-0.5 * d * d);
}

}  // namespace

Scenario synth_sinusoid(int T, std::uint64_t seed, double w_total,
                        double r_total, double w_amp, double r_amp) {
  std::mt19937_64 eng(seed);
  double phi_w = uniform01(eng), phi_r = uniform01(eng);
  VectorXd w = sample_day(T, w_total, [&](double tau) {
    return 1.0 + w_amp * std::sin(kTwoPi * (tau / 24.0 - phi_w));
  });
  VectorXd r = sample_day(T, r_total, [&](double tau) {
    return 1.0 + r_amp * std::sin(kTwoPi * (tau / 24.0 - phi_r));
  });
  return Scenario(std::move(w), std::move(r), 24.0 / T);
}

Scenario synth_two_peak(int T, std::uint64_t seed, double w_total,
                        double r_total) {
  std::mt19937_64 eng(seed);
  double solar_center = 11.0 + 2.0 * uniform01(eng);
  double am_peak = 7.0 + 2.0 * uniform01(eng);
  double pm_peak = 18.0 + 3.0 * uniform01(eng);
  VectorXd w = sample_day(T, w_total, [&](double tau) {
    return 0.25 + gauss_bump(tau, solar_center, 3.0);
  });
  VectorXd r = sample_day(T, r_total, [&](double tau) {
    return 0.6 + 0.8 * gauss_bump(tau, am_peak, 2.0) +
           gauss_bump(tau, pm_peak, 2.5);
  });
  return Scenario(std::move(w), std::move(r), 24.0 / T);
}

FlexUserSet synth_users(int n, std::uint64_t seed, double g_lo, double g_hi,
                        double cap_over_g) {
  std::mt19937_64 eng(seed);
  VectorXd g(n);
  for (int i = 0; i < n; ++i) g[i] = g_lo + (g_hi - g_lo) * uniform01(eng);
  return FlexUserSet(g, cap_over_g * g);
}

}  // namespace stackgrid
