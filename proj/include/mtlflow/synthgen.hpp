#pragma once

// Synthetic 15-minute traffic flow: a base level plus morning and evening
// gaussian peaks repeated every day, with stationary AR(1) noise on top.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mtlflow/data.hpp"

namespace mtlflow {

inline constexpr std::size_t kPointsPerDay = 96;

struct Peak {
  double center_slot = 0.0;  // slot of day, 0..95
  double width_slots = 1.0;  // gaussian standard deviation, in slots
  double amplitude = 0.0;    // veh/h above base
};

struct SynthConfig {
  std::size_t days = 25;
  double base_flow = 200.0;
  Peak morning{32.0, 6.0, 1000.0};  // 08:00
  Peak evening{72.0, 8.0, 850.0};   // 18:00
  double noise_std = 60.0;
  double ar_coeff = 0.6;
  std::uint64_t seed = 2002;

  std::size_t length() const noexcept { return days * kPointsPerDay; }

  void validate() const;
};

/// The noiseless part of the series (before clipping at zero): base plus
/// both peaks, with slot-of-day distance measured around the clock.
std::vector<double> deterministic_profile(const SynthConfig& cfg);

/// max(0, profile + eps), eps(t) = ar_coeff * eps(t-1) + eta(t), eta white
/// gaussian with std noise_std * sqrt(1 - ar_coeff^2) so that eps has
/// stationary std noise_std. Deterministic per seed.
TimeSeries generate(const SynthConfig& cfg, const std::string& link_id);

}  // namespace mtlflow
