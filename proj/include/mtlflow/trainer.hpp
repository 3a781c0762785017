#pragma once

// Levenberg-Marquardt training:
//   x_{k+1} = x_k - (J^T J + mu I)^{-1} J^T e
// with multiplicative damping adaptation and goal / epoch / damping-ceiling
// stopping rules.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mtlflow/data.hpp"
#include "mtlflow/linalg.hpp"
#include "mtlflow/network.hpp"

namespace mtlflow {

struct LmConfig {
  double mu_init = 1e-3;
  double mu_inc = 10.0;
  double mu_dec = 0.1;
  double mu_max = 1e10;
  std::size_t max_epochs = 300;
  double error_goal = 0.006;  // mean squared error, normalized units
  std::uint64_t seed = 42;

  // Throws InvalidArgument naming the first violated constraint.
  void validate() const;

  friend bool operator==(const LmConfig&, const LmConfig&) = default;
};

enum class StopReason { kGoalReached, kMaxEpochs, kMuExceeded };

const char* to_string(StopReason reason);

struct EpochRecord {
  std::size_t epoch;
  double mse;
  double mu;
};

struct LmState {
  Vector x;
  double mu = 0.0;
  std::size_t epoch = 0;
  double mse = 0.0;
  // Damping used by the most recently accepted proposal (0 before the first).
  double step_mu = 0.0;
  // Set when every proposal of the last step was rejected up to mu_max.
  bool mu_exceeded = false;
  // Epoch 0 (initial parameters) plus one record per accepted epoch.
  std::vector<EpochRecord> history;
};

/// Anything with residuals e(x) and Jacobian de/dx that LM can minimize.
class ResidualModel {
 public:
  virtual ~ResidualModel() = default;
  virtual std::size_t parameter_count() const = 0;
  virtual Vector residuals(const Vector& x) const = 0;
  virtual Linearization linearize(const Vector& x) const = 0;
};

/// All network parameters free. Holds a reference to `data`, which must
/// outlive the model.
class MlpResidualModel final : public ResidualModel {
 public:
  MlpResidualModel(const WindowedDataset& data, NetworkDims dims,
                   HiddenActivation activation = HiddenActivation::kTansig);

  std::size_t parameter_count() const override { return dims_.param_count(); }
  Vector residuals(const Vector& x) const override;
  Linearization linearize(const Vector& x) const override;

 private:
  const WindowedDataset& data_;
  NetworkDims dims_;
  HiddenActivation activation_;
};

/// Test hook: hidden layer frozen at `base`, only w2 and b2 free (in that
/// order). The residuals are then affine in the free parameters, so the
/// problem is ordinary linear least squares.
class OutputLayerResidualModel final : public ResidualModel {
 public:
  OutputLayerResidualModel(MlpParams base, const WindowedDataset& data);

  std::size_t parameter_count() const override;
  Vector residuals(const Vector& x) const override;
  Linearization linearize(const Vector& x) const override;

  MlpParams with_output_layer(const Vector& x) const;

 private:
  MlpParams base_;
  const WindowedDataset& data_;
};

/// Weights and biases i.i.d. uniform on [-0.5, 0.5], drawn in flatten()
/// order from mt19937_64(seed).
MlpParams init_params(std::uint64_t seed, NetworkDims dims,
                      HiddenActivation activation = HiddenActivation::kTansig);

/// Mean of squared entries. Throws InvalidArgument on an empty vector.
double mse(const Vector& e);

/// Solves (jtj + mu I) delta = jte. nullopt when the factorization fails.
std::optional<Vector> damped_step(const Matrix& jtj, const Vector& jte, double mu);

LmState initial_state(Vector x0, const ResidualModel& model, const LmConfig& cfg);

/// One accepted epoch: linearize once, then propose with increasing mu until
/// the sum of squares drops or mu passes mu_max (which sets mu_exceeded and
/// leaves x unchanged).
LmState lm_step(LmState state, const ResidualModel& model, const LmConfig& cfg);

struct LmOutcome {
  LmState state;
  StopReason reason;
};

LmOutcome minimize(const ResidualModel& model, Vector x0, const LmConfig& cfg);

struct TrainResult {
  MlpParams params;
  LmState state;
  StopReason reason;
};

/// Seeds the network with init_params(cfg.seed, dims) and runs LM on the full
/// batch. Deterministic in (cfg, data).
TrainResult train(const WindowedDataset& data, const LmConfig& cfg, NetworkDims dims);

/// `epoch,mse,mu` CSV.
void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace mtlflow
