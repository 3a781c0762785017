#pragma once

// Three-layer perceptron: tansig hidden layer, linear output layer.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>

#include "mtlflow/data.hpp"
#include "mtlflow/linalg.hpp"

namespace mtlflow {

/// 2 / (1 + exp(-2x)) - 1, i.e. tanh. Maps the real line onto (-1, 1).
inline double tansig(double x) { return 2.0 / (1.0 + std::exp(-2.0 * x)) - 1.0; }

/// Derivative of tansig expressed through its output y = tansig(x).
inline double tansig_slope(double y) { return 1.0 - y * y; }

/// kIdentity exists so tests can turn the network into an affine model with a
/// closed-form Jacobian; production networks use kTansig.
enum class HiddenActivation { kTansig, kIdentity };

const char* to_string(HiddenActivation a);

struct NetworkDims {
  std::size_t input = 5;
  std::size_t hidden = 15;
  std::size_t output = 1;

  std::size_t param_count() const noexcept {
    return hidden * input + hidden + output * hidden + output;
  }
  friend bool operator==(const NetworkDims&, const NetworkDims&) = default;
};

struct MlpParams {
  explicit MlpParams(NetworkDims dims, HiddenActivation activation = HiddenActivation::kTansig);

  Matrix w1;  // hidden x input
  Vector b1;  // hidden
  Matrix w2;  // output x hidden
  Vector b2;  // output
  HiddenActivation activation = HiddenActivation::kTansig;

  NetworkDims dims() const noexcept { return {w1.cols(), w1.rows(), w2.rows()}; }

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

// Serialization order of the flat parameter vector: w1 row-major, b1, w2
// row-major, b2. Jacobian columns follow the same order.
Vector flatten(const MlpParams& p);
MlpParams unflatten(std::span<const double> x, NetworkDims dims,
                    HiddenActivation activation = HiddenActivation::kTansig);

struct ForwardResult {
  Vector output;
  Vector hidden;
};

ForwardResult forward(const MlpParams& p, std::span<const double> input);

/// Residuals e = prediction - target, sample-major then output index; length
/// N * k.
Vector error_vector(const MlpParams& p, const WindowedDataset& data);

/// d e_r / d x_c, rows ordered like error_vector, columns like flatten().
/// Throws NumericError if anything non-finite appears.
Matrix jacobian(const MlpParams& p, const WindowedDataset& data);

struct Linearization {
  Vector residuals;
  Matrix jacobian;
};

/// error_vector and jacobian from a single forward pass per sample.
Linearization linearize(const MlpParams& p, const WindowedDataset& data);

// Plain-text model format:
//   mtlflow-model 1
//   dims <input> <hidden> <output>
//   activation tansig|identity
//   w1 <hidden*input values>
//   b1 <hidden values>
//   w2 <output*hidden values>
//   b2 <output values>
// Values are written with 17 significant digits so load(save(p)) == p.
void write_model(std::ostream& out, const MlpParams& p);
MlpParams read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const MlpParams& p);
MlpParams load_model(const std::filesystem::path& path);

}  // namespace mtlflow
