#include "mtlflow/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mtlflow/error.hpp"

namespace mtlflow {

namespace {

void check_peak(const Peak& p, const char* name) {
  if (!std::isfinite(p.center_slot) || !std::isfinite(p.amplitude) || p.amplitude < 0.0)
    throw InvalidArgument(std::string(name) + " peak: amplitude must be finite and >= 0");
  if (!(p.width_slots > 0.0) || !std::isfinite(p.width_slots))
    throw InvalidArgument(std::string(name) + " peak: width must be > 0");
}

double bump(const Peak& p, double slot) {
  double d = std::fmod(slot - p.center_slot, static_cast<double>(kPointsPerDay));
  if (d > kPointsPerDay / 2.0) d -= kPointsPerDay;
  if (d < -(kPointsPerDay / 2.0)) d += kPointsPerDay;
  const double z = d / p.width_slots;
  return p.amplitude * std::exp(-0.5 * z * z);
}

}  // namespace

void SynthConfig::validate() const {
  if (days < 1) throw InvalidArgument("days must be >= 1");
  if (!(base_flow >= 0.0) || !std::isfinite(base_flow))
    throw InvalidArgument("base_flow must be finite and >= 0");
  check_peak(morning, "morning");
  check_peak(evening, "evening");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw InvalidArgument("noise_std must be finite and >= 0");
  if (!(ar_coeff >= 0.0 && ar_coeff < 1.0)) throw InvalidArgument("ar_coeff must lie in [0, 1)");
}

std::vector<double> deterministic_profile(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<double> day(kPointsPerDay);
  for (std::size_t s = 0; s < kPointsPerDay; ++s) {
    const double slot = static_cast<double>(s);
    day[s] = cfg.base_flow + bump(cfg.morning, slot) + bump(cfg.evening, slot);
  }
  std::vector<double> out(cfg.length());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = day[t % kPointsPerDay];
  return out;
}

TimeSeries generate(const SynthConfig& cfg, const std::string& link_id) {
  TimeSeries series{link_id, kIntervalMinutes, deterministic_profile(cfg)};
  if (cfg.noise_std > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double innovation_std = cfg.noise_std * std::sqrt(1.0 - cfg.ar_coeff * cfg.ar_coeff);
    // Start from the stationary law so the first day is not special.
    double eps = cfg.noise_std * gauss(rng);
    for (std::size_t t = 0; t < series.values.size(); ++t) {
      if (t > 0) eps = cfg.ar_coeff * eps + innovation_std * gauss(rng);
      series.values[t] += eps;
    }
  }
  for (double& v : series.values) v = std::max(0.0, v);
  return series;
}

}  // namespace mtlflow
