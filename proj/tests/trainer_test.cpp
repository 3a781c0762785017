#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mtlflow/error.hpp"
#include "mtlflow/trainer.hpp"
#include "oracles.hpp"

namespace mtlflow {
namespace {

// Noiseless sinusoid in [-1, 1], one cycle per 96 slots.
std::vector<double> sinusoid(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t)
    v[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 96.0);
  return v;
}

TEST(LmConfig, Validation) {
  EXPECT_NO_THROW(LmConfig{}.validate());
  auto bad = [](auto mutate) {
    LmConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](LmConfig& c) { c.mu_init = 0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](LmConfig& c) { c.mu_inc = 1; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](LmConfig& c) { c.mu_dec = 1; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](LmConfig& c) { c.mu_max = 1e-3; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](LmConfig& c) { c.max_epochs = 0; }).validate(), InvalidArgument);
  EXPECT_THROW(bad([](LmConfig& c) { c.error_goal = 0; }).validate(), InvalidArgument);
}

TEST(InitParams, DeterministicPerSeed) {
  const NetworkDims d{5, 15, 3};
  EXPECT_EQ(init_params(7, d), init_params(7, d));
  EXPECT_NE(init_params(7, d), init_params(8, d));
  const Vector x = flatten(init_params(7, d));
  for (double v : x) {
    EXPECT_GE(v, -0.5);
    EXPECT_LE(v, 0.5);
  }
}

TEST(InitParams, UniformMeanNearZero) {
  // 100x100 first layer alone gives 10^4 draws; the mean of U(-0.5, 0.5)
  // has standard error 0.2887 / 100.
  const Vector x = flatten(init_params(99, NetworkDims{100, 100, 1}));
  ASSERT_GE(x.size(), 10000u);
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / static_cast<double>(x.size());
  EXPECT_GE(mean, -0.02);
  EXPECT_LE(mean, 0.02);
}

TEST(Mse, Definition) {
  EXPECT_EQ(mse(Vector(4)), 0.0);
  EXPECT_NEAR(mse(Vector{0.1, -0.1}), 0.01, 1e-17);
  EXPECT_THROW(mse(Vector{}), InvalidArgument);
  std::mt19937_64 rng(3);
  const Vector e = test::random_vector(101, rng);
  double second = 0.0;
  for (double v : e) second += v * v;
  EXPECT_NEAR(mse(e), second / 101.0, 1e-15);
}

struct LinearProblem {
  MlpParams base;
  WindowedDataset data;
  test::Grid design;  // [hidden..., 1] per sample
  std::vector<double> targets;
};

// Identity hidden layer, output layer free: e = H w - t with H fixed.
LinearProblem make_linear_problem(std::uint64_t seed) {
  const NetworkDims d{5, 4, 1};
  LinearProblem lp{test::random_params(d, seed, HiddenActivation::kIdentity),
                   test::random_dataset(40, 5, 1, seed + 1), {}, {}};
  for (std::size_t i = 0; i < 40; ++i) {
    std::vector<double> row;
    for (std::size_t h = 0; h < d.hidden; ++h) {
      double a = lp.base.b1[h];
      for (std::size_t q = 0; q < d.input; ++q) a += lp.base.w1(h, q) * lp.data.inputs(i, q);
      row.push_back(a);
    }
    row.push_back(1.0);
    lp.design.push_back(row);
    lp.targets.push_back(lp.data.targets(i, 0));
  }
  return lp;
}

TEST(LmStep, LinearProblemLandsOnNormalEquationSolution) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const LinearProblem lp = make_linear_problem(seed);
    const OutputLayerResidualModel model(lp.base, lp.data);
    LmConfig cfg;
    cfg.mu_init = 1e-12;
    std::mt19937_64 rng(seed);
    const LmState s0 = initial_state(test::random_vector(5, rng), model, cfg);
    const LmState s1 = lm_step(s0, model, cfg);
    ASSERT_FALSE(s1.mu_exceeded);
    EXPECT_EQ(s1.epoch, 1u);
    EXPECT_DOUBLE_EQ(s1.mu, 1e-13);
    const auto optimum = test::normal_equations(lp.design, lp.targets);
    for (std::size_t i = 0; i < optimum.size(); ++i) EXPECT_NEAR(s1.x[i], optimum[i], 1e-8);
  }
}

TEST(LmStep, LargeDampingGivesShortGradientStep) {
  const MlpParams p = test::random_params(NetworkDims{5, 15, 3}, 5);
  const WindowedDataset ds = test::random_dataset(20, 5, 3, 6);
  const Linearization lin = linearize(p, ds);
  const Matrix jtj = gram(lin.jacobian);
  const Vector g = matvec_transposed(lin.jacobian, lin.residuals);
  const auto delta = damped_step(jtj, g, 1e9);
  ASSERT_TRUE(delta.has_value());
  EXPECT_LT(norm_inf(delta->span()), 1e-6 * norm_inf(g.span()));
  const double cosine = dot(delta->span(), g.span()) / (norm2(delta->span()) * norm2(g.span()));
  EXPECT_GT(cosine, 1.0 - 1e-6);
}

TEST(LmStep, AcceptedStepsSatisfyDampedNormalEquations) {
  const NetworkDims d{5, 15, 3};
  const WindowedDataset ds = test::random_dataset(30, 5, 3, 7);
  const MlpResidualModel model(ds, d);
  const LmConfig cfg;
  LmState s = initial_state(flatten(init_params(3, d)), model, cfg);
  for (int k = 0; k < 10; ++k) {
    const Linearization lin = model.linearize(s.x);
    const double sse_before = dot(lin.residuals.span(), lin.residuals.span());
    const LmState next = lm_step(s, model, cfg);
    if (next.mu_exceeded) break;
    Vector delta(s.x.size());
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = s.x[i] - next.x[i];
    Matrix a = gram(lin.jacobian);
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += next.step_mu;
    const Vector lhs = matvec(a, delta);
    const Vector g = matvec_transposed(lin.jacobian, lin.residuals);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(lhs[i] - g[i]));
    EXPECT_LE(worst, 1e-8 * std::max(1.0, norm_inf(g.span())));
    const Vector e_after = model.residuals(next.x);
    EXPECT_LT(dot(e_after.span(), e_after.span()), sse_before);
    s = next;
  }
}

// A quadratic bowl already at its minimum: no proposal can reduce the sum of
// squares, so mu escalates past mu_max without moving x.
TEST(LmStep, MuCeilingStopsWithoutMoving) {
  const NetworkDims d{1, 1, 1};
  MlpParams p(d, HiddenActivation::kIdentity);
  WindowedDataset ds{Matrix{{0.0}}, Matrix{{0.0}}, {1}};
  const MlpResidualModel model(ds, d, HiddenActivation::kIdentity);
  LmConfig cfg;
  cfg.mu_max = 1.0;
  const LmState s0 = initial_state(flatten(p), model, cfg);
  const LmState s1 = lm_step(s0, model, cfg);
  EXPECT_TRUE(s1.mu_exceeded);
  EXPECT_EQ(s1.x, s0.x);
  EXPECT_EQ(s1.epoch, 0u);
  EXPECT_LE(s1.mu, cfg.mu_max);
}

TEST(Train, RealizableTargetsStopImmediately) {
  const NetworkDims d{5, 15, 3};
  LmConfig cfg;
  cfg.seed = 17;
  WindowedDataset ds = test::random_dataset(25, 5, 3, 18);
  const MlpParams init = init_params(cfg.seed, d);
  for (std::size_t i = 0; i < 25; ++i) {
    const auto out = forward(init, ds.inputs.row(i)).output;
    for (std::size_t j = 0; j < 3; ++j) ds.targets(i, j) = out[j];
  }
  const TrainResult r = train(ds, cfg, d);
  EXPECT_EQ(r.reason, StopReason::kGoalReached);
  EXPECT_LE(r.state.epoch, 1u);
  EXPECT_EQ(r.params, init);
}

TEST(Train, NoiselessSinusoidReachesGoal) {
  const auto z = sinusoid(1000);
  const auto layout = TaskLayout::stl(5);
  const WindowedDataset ds = make_windows(z, layout, admissible_anchors(z.size(), layout));
  LmConfig cfg;
  cfg.seed = 42;
  const TrainResult r = train(ds, cfg, NetworkDims{5, 15, 1});
  EXPECT_EQ(r.reason, StopReason::kGoalReached);
  EXPECT_LE(r.state.mse, 0.006);
  EXPECT_LE(r.state.epoch, 300u);
  // history[0] is the initial point, then one record per accepted epoch.
  ASSERT_EQ(r.state.history.size(), r.state.epoch + 1);
  for (std::size_t k = 1; k < r.state.history.size(); ++k)
    EXPECT_LE(r.state.history[k].mse, r.state.history[k - 1].mse);
  EXPECT_EQ(r.state.history.back().mse, r.state.mse);
}

TEST(Train, MaxEpochsAndDeterminism) {
  const auto z = sinusoid(400);
  const auto layout = TaskLayout::mtl(5);
  const WindowedDataset ds = make_windows(z, layout, admissible_anchors(z.size(), layout));
  LmConfig cfg;
  cfg.error_goal = 1e-30;
  cfg.max_epochs = 7;
  const TrainResult a = train(ds, cfg, NetworkDims{5, 15, 3});
  const TrainResult b = train(ds, cfg, NetworkDims{5, 15, 3});
  EXPECT_EQ(a.reason, StopReason::kMaxEpochs);
  EXPECT_EQ(a.state.epoch, 7u);
  EXPECT_EQ(a.state.x, b.state.x);
  EXPECT_EQ(a.params, b.params);
}

TEST(Train, RejectsBadInput) {
  const WindowedDataset ds = test::random_dataset(10, 5, 1, 1);
  LmConfig cfg;
  cfg.max_epochs = 0;
  EXPECT_THROW(train(ds, cfg, NetworkDims{5, 15, 1}), InvalidArgument);
  EXPECT_THROW(train(ds, LmConfig{}, NetworkDims{5, 15, 3}), InvalidArgument);
}

TEST(History, CsvFormat) {
  std::ostringstream out;
  write_history_csv(out, {{0, 0.5, 1e-3}, {1, 0.25, 1e-4}});
  EXPECT_EQ(out.str(), "epoch,mse,mu\n0,0.5,0.001\n1,0.25,0.0001\n");
}

}  // namespace
}  // namespace mtlflow
