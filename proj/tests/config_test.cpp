#include <gtest/gtest.h>

#include <sstream>

#include "mtlflow/config.hpp"
#include "mtlflow/error.hpp"

namespace mtlflow {
namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

TEST(Config, EmptyFileGivesDefaults) {
  const RunConfig c = parse("# nothing here\n\n");
  EXPECT_EQ(c.link_ids, std::vector<std::string>{"Bb"});
  EXPECT_EQ(c.defaults.experiment, ExperimentConfig{});
  EXPECT_EQ(c.defaults.synth.length(), 2400u);
  EXPECT_EQ(c.defaults.experiment.lm.max_epochs, 300u);
  EXPECT_EQ(c.defaults.experiment.lm.error_goal, 0.006);
  EXPECT_EQ(c.defaults.experiment.hidden, 15u);
  EXPECT_EQ(c.defaults.experiment.window_len, 5u);
  EXPECT_EQ(c.defaults.experiment.train_count, 2112u);
}

TEST(Config, EveryKeyIsSettable) {
  const RunConfig c = parse(
      "link_ids = Cf, Db\n"
      "days=10\nbase_flow=150\n"
      "morning_center=30\nmorning_width=5\nmorning_amplitude=700\n"
      "evening_center=70\nevening_width=9\nevening_amplitude=600  # trailing comment\n"
      "noise_std=0\nar_coeff=0.3\nsynth_seed=5\n"
      "window_len=4\nhidden=12\ntrain_count=800\n"
      "mu_init=0.01\nmu_inc=5\nmu_dec=0.2\nmu_max=1e8\nmax_epochs=50\nerror_goal=0.001\n"
      "seed=9\n");
  EXPECT_EQ(c.link_ids, (std::vector<std::string>{"Cf", "Db"}));
  const auto& s = c.defaults.synth;
  EXPECT_EQ(s.days, 10u);
  EXPECT_EQ(s.base_flow, 150.0);
  EXPECT_EQ(s.morning.center_slot, 30.0);
  EXPECT_EQ(s.morning.width_slots, 5.0);
  EXPECT_EQ(s.morning.amplitude, 700.0);
  EXPECT_EQ(s.evening.center_slot, 70.0);
  EXPECT_EQ(s.evening.width_slots, 9.0);
  EXPECT_EQ(s.evening.amplitude, 600.0);
  EXPECT_EQ(s.noise_std, 0.0);
  EXPECT_EQ(s.ar_coeff, 0.3);
  EXPECT_EQ(s.seed, 5u);
  const auto& e = c.defaults.experiment;
  EXPECT_EQ(e.window_len, 4u);
  EXPECT_EQ(e.hidden, 12u);
  EXPECT_EQ(e.train_count, 800u);
  EXPECT_EQ(e.lm.mu_init, 0.01);
  EXPECT_EQ(e.lm.mu_inc, 5.0);
  EXPECT_EQ(e.lm.mu_dec, 0.2);
  EXPECT_EQ(e.lm.mu_max, 1e8);
  EXPECT_EQ(e.lm.max_epochs, 50u);
  EXPECT_EQ(e.lm.error_goal, 0.001);
  EXPECT_EQ(e.lm.seed, 9u);
  EXPECT_EQ(config_keys().size(), 22u);
}

TEST(Config, LinkBlocksOverrideOnlyTheirLink) {
  const RunConfig c = parse(
      "link_ids=Bb,Cf\nhidden=10\nseed=3\n"
      "[link Cf]\nhidden=12\nmax_epochs=40\n");
  EXPECT_EQ(c.for_link("Bb").experiment.hidden, 10u);
  EXPECT_EQ(c.for_link("Cf").experiment.hidden, 12u);
  EXPECT_EQ(c.for_link("Cf").experiment.lm.seed, 3u);
  EXPECT_EQ(c.for_link("Cf").experiment.lm.max_epochs, 40u);
  EXPECT_EQ(c.experiment_overrides().size(), 1u);
  EXPECT_EQ(c.synth_for(0).seed + 1, c.synth_for(1).seed);
}

TEST(Config, RejectsProblems) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("hidden=3\nlearning_rate=0.1\n"), 2u);
  EXPECT_EQ(line_of("hidden=three\n"), 1u);
  EXPECT_EQ(line_of("hidden\n"), 1u);
  EXPECT_EQ(line_of("[link Bb\n"), 1u);
  EXPECT_EQ(line_of("[group x]\n"), 1u);
  EXPECT_EQ(line_of("[link A]\n[link A]\n"), 2u);
  EXPECT_EQ(line_of("[link A]\nlink_ids=A\n"), 2u);
  EXPECT_EQ(line_of("link_ids=A,A\n"), 1u);
  EXPECT_EQ(line_of("noise_std=nan\n"), 1u);

  EXPECT_THROW(parse("max_epochs=0\n"), InvalidArgument);
  EXPECT_THROW(parse("ar_coeff=1.5\n"), InvalidArgument);
  EXPECT_THROW(parse("[link Cf]\nmu_dec=2\n"), InvalidArgument);
  EXPECT_THROW(load_config("/nonexistent/cfg.txt"), IoError);
}

}  // namespace
}  // namespace mtlflow
