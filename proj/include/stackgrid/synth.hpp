#pragma once

#include "stackgrid/types.hpp"

namespace stackgrid {

/// Deterministic day profiles: a continuous 24 h shape with a seeded random
/// phase, sampled at slot midpoints and rescaled so the slot energies sum to
/// the requested daily totals exactly. Regeneration with the same arguments
/// is byte-identical, and the same seed resampled at a different T describes
/// the same underlying day.
Scenario synth_sinusoid(int T, std::uint64_t seed, double w_total,
                        double r_total, double w_amp = 0.4,
                        double r_amp = 0.3);

/// Solar-like midday generation bump against a morning + evening demand
/// double peak; same sampling and normalization contract as synth_sinusoid.
Scenario synth_two_peak(int T, std::uint64_t seed, double w_total,
                        double r_total);

/// Seeded user population: g_i uniform in [g_lo, g_hi],
/// nu_max_i = cap_over_g * g_i.
FlexUserSet synth_users(int n, std::uint64_t seed, double g_lo, double g_hi,
                        double cap_over_g);

}  // namespace stackgrid
