#include "mtlflow/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "mtlflow/error.hpp"
#include "mtlflow/text_format.hpp"

namespace mtlflow {

namespace {

// Keeps repeated mu_dec shrinkage away from denormals.
constexpr double kMuFloor = 1e-20;

double sum_squares(const Vector& e) { return dot(e.span(), e.span()); }

}  // namespace

void LmConfig::validate() const {
  if (!(mu_init > 0.0)) throw InvalidArgument("mu_init must be > 0");
  if (!(mu_inc > 1.0)) throw InvalidArgument("mu_inc must be > 1");
  if (!(mu_dec > 0.0 && mu_dec < 1.0)) throw InvalidArgument("mu_dec must lie in (0, 1)");
  if (!(mu_max > mu_init)) throw InvalidArgument("mu_max must exceed mu_init");
  if (max_epochs < 1) throw InvalidArgument("max_epochs must be >= 1");
  if (!(error_goal > 0.0)) throw InvalidArgument("error_goal must be > 0");
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kGoalReached: return "goal_reached";
    case StopReason::kMaxEpochs: return "max_epochs";
    case StopReason::kMuExceeded: return "mu_exceeded";
  }
  return "unknown";
}

MlpResidualModel::MlpResidualModel(const WindowedDataset& data, NetworkDims dims,
                                   HiddenActivation activation)
    : data_(data), dims_(dims), activation_(activation) {}

Vector MlpResidualModel::residuals(const Vector& x) const {
  return error_vector(unflatten(x.span(), dims_, activation_), data_);
}

Linearization MlpResidualModel::linearize(const Vector& x) const {
  return mtlflow::linearize(unflatten(x.span(), dims_, activation_), data_);
}

OutputLayerResidualModel::OutputLayerResidualModel(MlpParams base, const WindowedDataset& data)
    : base_(std::move(base)), data_(data) {}

std::size_t OutputLayerResidualModel::parameter_count() const {
  const NetworkDims d = base_.dims();
  return d.output * d.hidden + d.output;
}

MlpParams OutputLayerResidualModel::with_output_layer(const Vector& x) const {
  if (x.size() != parameter_count())
    throw InvalidArgument("output-layer parameter vector has wrong length");
  MlpParams p = base_;
  std::size_t k = 0;
  for (double& v : p.w2.data()) v = x[k++];
  for (double& v : p.b2) v = x[k++];
  return p;
}

Vector OutputLayerResidualModel::residuals(const Vector& x) const {
  return error_vector(with_output_layer(x), data_);
}

Linearization OutputLayerResidualModel::linearize(const Vector& x) const {
  Linearization full = mtlflow::linearize(with_output_layer(x), data_);
  const std::size_t free = parameter_count();
  const std::size_t offset = full.jacobian.cols() - free;
  Matrix j(full.jacobian.rows(), free);
  for (std::size_t r = 0; r < j.rows(); ++r) {
    const auto src = full.jacobian.row(r).subspan(offset, free);
    std::copy(src.begin(), src.end(), j.row(r).begin());
  }
  return {std::move(full.residuals), std::move(j)};
}

MlpParams init_params(std::uint64_t seed, NetworkDims dims, HiddenActivation activation) {
  if (dims.input == 0 || dims.hidden == 0 || dims.output == 0)
    throw InvalidArgument("init_params: dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  Vector x(dims.param_count());
  for (double& v : x) v = uniform(rng);
  return unflatten(x.span(), dims, activation);
}

double mse(const Vector& e) {
  if (e.empty()) throw InvalidArgument("mse: empty error vector");
  return sum_squares(e) / static_cast<double>(e.size());
}

std::optional<Vector> damped_step(const Matrix& jtj, const Vector& jte, double mu) {
  Matrix a = jtj;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += mu;
  try {
    return solve_spd(a, jte);
  } catch (const FactorizationError&) {
    return std::nullopt;
  }
}

LmState initial_state(Vector x0, const ResidualModel& model, const LmConfig& cfg) {
  cfg.validate();
  if (x0.size() != model.parameter_count())
    throw InvalidArgument("initial parameter vector has wrong length");
  const Vector e = model.residuals(x0);
  const double m = mse(e);
  if (!std::isfinite(m)) throw NumericError("initial loss is not finite");
  LmState s;
  s.x = std::move(x0);
  s.mu = cfg.mu_init;
  s.mse = m;
  s.history.push_back({0, m, s.mu});
  return s;
}

LmState lm_step(LmState state, const ResidualModel& model, const LmConfig& cfg) {
  const Linearization lin = model.linearize(state.x);
  const double sse = sum_squares(lin.residuals);
  if (!std::isfinite(sse)) throw NumericError("lm_step: loss is not finite");
  const Matrix jtj = gram(lin.jacobian);
  const Vector jte = matvec_transposed(lin.jacobian, lin.residuals);

  double mu = state.mu;
  while (true) {
    if (const auto delta = damped_step(jtj, jte, mu)) {
      Vector candidate = state.x;
      for (std::size_t i = 0; i < candidate.size(); ++i) candidate[i] -= (*delta)[i];
      const Vector e_new = model.residuals(candidate);
      const double sse_new = sum_squares(e_new);
      if (std::isfinite(sse_new) && sse_new < sse) {
        state.x = std::move(candidate);
        state.step_mu = mu;
        state.mu = std::max(mu * cfg.mu_dec, kMuFloor);
        state.mse = sse_new / static_cast<double>(e_new.size());
        state.epoch += 1;
        state.mu_exceeded = false;
        state.history.push_back({state.epoch, state.mse, state.mu});
        return state;
      }
    }
    mu *= cfg.mu_inc;
    if (mu > cfg.mu_max) {
      state.mu_exceeded = true;
      return state;
    }
  }
}

LmOutcome minimize(const ResidualModel& model, Vector x0, const LmConfig& cfg) {
  LmState state = initial_state(std::move(x0), model, cfg);
  while (true) {
    if (state.mse <= cfg.error_goal) return {std::move(state), StopReason::kGoalReached};
    if (state.epoch >= cfg.max_epochs) return {std::move(state), StopReason::kMaxEpochs};
    state = lm_step(std::move(state), model, cfg);
    if (state.mu_exceeded) return {std::move(state), StopReason::kMuExceeded};
  }
}

TrainResult train(const WindowedDataset& data, const LmConfig& cfg, NetworkDims dims) {
  cfg.validate();
  if (data.sample_count() == 0) throw EmptyDatasetError("train: empty dataset");
  if (data.inputs.cols() != dims.input || data.targets.cols() != dims.output)
    throw InvalidArgument("train: network dims do not match the dataset");
  const MlpParams init = init_params(cfg.seed, dims);
  const MlpResidualModel model(data, dims);
  LmOutcome out = minimize(model, flatten(init), cfg);
  MlpParams params = unflatten(out.state.x.span(), dims);
  return {std::move(params), std::move(out.state), out.reason};
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,mse,mu\n";
  for (const auto& r : history)
    out << r.epoch << ',' << format_double(r.mse) << ',' << format_double(r.mu) << '\n';
}

}  // namespace mtlflow
