#include "mtlflow/config.hpp"

#include <fstream>
#include <functional>
#include <istream>
#include <set>

#include "mtlflow/error.hpp"
#include "mtlflow/text_format.hpp"

namespace mtlflow {

namespace {

using Setter = std::function<bool(Settings&, std::string_view)>;

Setter real(double SynthConfig::*field) {
  return [field](Settings& s, std::string_view v) { return parse_double(v, s.synth.*field); };
}

Setter peak(Peak SynthConfig::*which, double Peak::*field) {
  return [which, field](Settings& s, std::string_view v) {
    return parse_double(v, (s.synth.*which).*field);
  };
}

Setter lm_real(double LmConfig::*field) {
  return [field](Settings& s, std::string_view v) {
    return parse_double(v, s.experiment.lm.*field);
  };
}

Setter count(std::size_t ExperimentConfig::*field) {
  return [field](Settings& s, std::string_view v) { return parse_size(v, s.experiment.*field); };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"days", [](Settings& s, std::string_view v) { return parse_size(v, s.synth.days); }},
      {"base_flow", real(&SynthConfig::base_flow)},
      {"morning_center", peak(&SynthConfig::morning, &Peak::center_slot)},
      {"morning_width", peak(&SynthConfig::morning, &Peak::width_slots)},
      {"morning_amplitude", peak(&SynthConfig::morning, &Peak::amplitude)},
      {"evening_center", peak(&SynthConfig::evening, &Peak::center_slot)},
      {"evening_width", peak(&SynthConfig::evening, &Peak::width_slots)},
      {"evening_amplitude", peak(&SynthConfig::evening, &Peak::amplitude)},
      {"noise_std", real(&SynthConfig::noise_std)},
      {"ar_coeff", real(&SynthConfig::ar_coeff)},
      {"synth_seed", [](Settings& s, std::string_view v) { return parse_u64(v, s.synth.seed); }},
      {"window_len", count(&ExperimentConfig::window_len)},
      {"hidden", count(&ExperimentConfig::hidden)},
      {"train_count", count(&ExperimentConfig::train_count)},
      {"mu_init", lm_real(&LmConfig::mu_init)},
      {"mu_inc", lm_real(&LmConfig::mu_inc)},
      {"mu_dec", lm_real(&LmConfig::mu_dec)},
      {"mu_max", lm_real(&LmConfig::mu_max)},
      {"max_epochs",
       [](Settings& s, std::string_view v) { return parse_size(v, s.experiment.lm.max_epochs); }},
      {"error_goal", lm_real(&LmConfig::error_goal)},
      {"seed", [](Settings& s, std::string_view v) { return parse_u64(v, s.experiment.lm.seed); }},
  };
  return table;
}

void validate(const Settings& s, const std::string& where) {
  try {
    s.synth.validate();
    s.experiment.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(where + ": " + e.what());
  }
}

}  // namespace

const Settings& RunConfig::for_link(const std::string& link_id) const {
  const auto it = per_link.find(link_id);
  return it == per_link.end() ? defaults : it->second;
}

SynthConfig RunConfig::synth_for(std::size_t index) const {
  SynthConfig s = for_link(link_ids.at(index)).synth;
  s.seed += index;
  return s;
}

std::map<std::string, ExperimentConfig> RunConfig::experiment_overrides() const {
  std::map<std::string, ExperimentConfig> out;
  for (const auto& [link, settings] : per_link) out.emplace(link, settings.experiment);
  return out;
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  Settings* target = &cfg.defaults;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos)
      text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;

    if (text.front() == '[') {
      if (text.back() != ']') throw ParseError(line_no, "unterminated section header");
      const auto inner = trim(text.substr(1, text.size() - 2));
      if (inner.substr(0, 5) != "link " || trim(inner.substr(5)).empty())
        throw ParseError(line_no, "section must be '[link <id>]'");
      const std::string link(trim(inner.substr(5)));
      if (cfg.per_link.count(link)) throw ParseError(line_no, "duplicate block for '" + link + "'");
      target = &cfg.per_link.emplace(link, cfg.defaults).first->second;
      continue;
    }

    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    const auto key = trim(text.substr(0, eq));
    const auto value = trim(text.substr(eq + 1));

    if (key == "link_ids") {
      if (target != &cfg.defaults)
        throw ParseError(line_no, "link_ids is only allowed before any [link] block");
      cfg.link_ids.clear();
      std::set<std::string> seen;
      for (auto id : split(value, ',')) {
        id = trim(id);
        if (id.empty()) throw ParseError(line_no, "empty link id");
        if (!seen.emplace(id).second)
          throw ParseError(line_no, "duplicate link id '" + std::string(id) + "'");
        cfg.link_ids.emplace_back(id);
      }
      continue;
    }
    const auto it = setters().find(key);
    if (it == setters().end()) throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
    if (!it->second(*target, value))
      throw ParseError(line_no, "bad value for '" + std::string(key) + "'");
  }

  validate(cfg.defaults, "config");
  for (const auto& [link, s] : cfg.per_link) validate(s, "[link " + link + "]");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_config(in);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys{"link_ids"};
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

}  // namespace mtlflow
