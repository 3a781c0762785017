#pragma once

// One key=value file drives generation, training and comparison:
//
//   # comment
//   link_ids = Bb,Cf
//   noise_std = 60
//   max_epochs = 300
//
//   [link Cf]
//   hidden = 12
//
// Global keys must precede the first [link ...] block. A block starts from
// the global settings and overrides any synthetic, network or trainer key
// for that link only. Unknown keys are rejected.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mtlflow/experiment.hpp"
#include "mtlflow/synthgen.hpp"

namespace mtlflow {

struct Settings {
  SynthConfig synth;
  ExperimentConfig experiment;
};

struct RunConfig {
  std::vector<std::string> link_ids{"Bb"};
  Settings defaults;
  std::map<std::string, Settings> per_link;

  const Settings& for_link(const std::string& link_id) const;

  /// Generator config for the link at `index` in link_ids: its settings with
  /// seed shifted by the index, so links differ under a shared seed.
  SynthConfig synth_for(std::size_t index) const;

  std::map<std::string, ExperimentConfig> experiment_overrides() const;
};

/// Throws ParseError for syntax problems and unknown keys, InvalidArgument
/// when the resulting settings violate a constraint.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Every key this format accepts, for help text and tests.
std::vector<std::string> config_keys();

}  // namespace mtlflow
