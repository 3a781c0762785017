#include "mtlflow/network.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mtlflow/error.hpp"
#include "mtlflow/text_format.hpp"

namespace mtlflow {

namespace {

struct Layout {
  std::size_t w1, b1, w2, b2, total;
};

Layout param_layout(const NetworkDims& d) {
  Layout l{};
  l.w1 = 0;
  l.b1 = d.hidden * d.input;
  l.w2 = l.b1 + d.hidden;
  l.b2 = l.w2 + d.output * d.hidden;
  l.total = l.b2 + d.output;
  return l;
}

void check_data(const MlpParams& p, const WindowedDataset& data) {
  const NetworkDims d = p.dims();
  if (data.inputs.cols() != d.input || data.targets.cols() != d.output ||
      data.inputs.rows() != data.targets.rows())
    throw InvalidArgument("dataset shape (" + std::to_string(data.inputs.cols()) + " in, " +
                          std::to_string(data.targets.cols()) +
                          " out) does not match the network (" + std::to_string(d.input) +
                          " in, " + std::to_string(d.output) + " out)");
}

double activate(HiddenActivation a, double x) {
  return a == HiddenActivation::kTansig ? tansig(x) : x;
}

double slope(HiddenActivation a, double y) {
  return a == HiddenActivation::kTansig ? tansig_slope(y) : 1.0;
}

// Forward pass into caller-owned buffers; returns nothing, fills hidden/out.
void forward_into(const MlpParams& p, std::span<const double> input, std::span<double> hidden,
                  std::span<double> out) {
  for (std::size_t h = 0; h < hidden.size(); ++h)
    hidden[h] = activate(p.activation, dot(p.w1.row(h), input) + p.b1[h]);
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = dot(p.w2.row(j), hidden) + p.b2[j];
}

}  // namespace

const char* to_string(HiddenActivation a) {
  return a == HiddenActivation::kTansig ? "tansig" : "identity";
}

MlpParams::MlpParams(NetworkDims dims, HiddenActivation act)
    : w1(dims.hidden, dims.input),
      b1(dims.hidden),
      w2(dims.output, dims.hidden),
      b2(dims.output),
      activation(act) {}

Vector flatten(const MlpParams& p) {
  Vector x(p.dims().param_count());
  std::size_t k = 0;
  for (double v : p.w1.data()) x[k++] = v;
  for (double v : p.b1) x[k++] = v;
  for (double v : p.w2.data()) x[k++] = v;
  for (double v : p.b2) x[k++] = v;
  return x;
}

MlpParams unflatten(std::span<const double> x, NetworkDims dims, HiddenActivation activation) {
  if (x.size() != dims.param_count())
    throw InvalidArgument("unflatten: expected " + std::to_string(dims.param_count()) +
                          " parameters, got " + std::to_string(x.size()));
  MlpParams p(dims, activation);
  std::size_t k = 0;
  for (double& v : p.w1.data()) v = x[k++];
  for (double& v : p.b1) v = x[k++];
  for (double& v : p.w2.data()) v = x[k++];
  for (double& v : p.b2) v = x[k++];
  return p;
}

ForwardResult forward(const MlpParams& p, std::span<const double> input) {
  const NetworkDims d = p.dims();
  if (input.size() != d.input)
    throw InvalidArgument("forward: input length " + std::to_string(input.size()) +
                          " does not match network input " + std::to_string(d.input));
  ForwardResult r{Vector(d.output), Vector(d.hidden)};
  forward_into(p, input, r.hidden.span(), r.output.span());
  return r;
}

Vector error_vector(const MlpParams& p, const WindowedDataset& data) {
  check_data(p, data);
  const NetworkDims d = p.dims();
  const std::size_t n = data.inputs.rows();
  Vector e(n * d.output);
  Vector hidden(d.hidden);
  for (std::size_t i = 0; i < n; ++i) {
    auto out = e.span().subspan(i * d.output, d.output);
    forward_into(p, data.inputs.row(i), hidden.span(), out);
    const auto target = data.targets.row(i);
    for (std::size_t j = 0; j < d.output; ++j) out[j] -= target[j];
  }
  return e;
}

Linearization linearize(const MlpParams& p, const WindowedDataset& data) {
  check_data(p, data);
  const NetworkDims d = p.dims();
  const Layout lay = param_layout(d);
  const std::size_t n = data.inputs.rows();

  Linearization lin{Vector(n * d.output), Matrix(n * d.output, lay.total)};
  Vector hidden(d.hidden);
  Vector hidden_slope(d.hidden);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = data.inputs.row(i);
    auto out = lin.residuals.span().subspan(i * d.output, d.output);
    forward_into(p, x, hidden.span(), out);
    const auto target = data.targets.row(i);
    for (std::size_t j = 0; j < d.output; ++j) out[j] -= target[j];
    for (std::size_t h = 0; h < d.hidden; ++h) hidden_slope[h] = slope(p.activation, hidden[h]);

    for (std::size_t j = 0; j < d.output; ++j) {
      auto row = lin.jacobian.row(i * d.output + j);
      const auto w2j = p.w2.row(j);
      for (std::size_t h = 0; h < d.hidden; ++h) {
        // Backpropagated sensitivity of output j to the pre-activation of unit h.
        const double delta = w2j[h] * hidden_slope[h];
        auto w1_block = row.subspan(lay.w1 + h * d.input, d.input);
        for (std::size_t q = 0; q < d.input; ++q) w1_block[q] = delta * x[q];
        row[lay.b1 + h] = delta;
        row[lay.w2 + j * d.hidden + h] = hidden[h];
      }
      row[lay.b2 + j] = 1.0;
    }
  }
  if (!lin.residuals.all_finite() || !lin.jacobian.all_finite())
    throw NumericError("jacobian: non-finite residual or derivative");
  return lin;
}

Matrix jacobian(const MlpParams& p, const WindowedDataset& data) {
  return linearize(p, data).jacobian;
}

void write_model(std::ostream& out, const MlpParams& p) {
  const NetworkDims d = p.dims();
  out << "mtlflow-model 1\n";
  out << "dims " << d.input << ' ' << d.hidden << ' ' << d.output << '\n';
  out << "activation " << to_string(p.activation) << '\n';
  auto block = [&out](const char* name, std::span<const double> values) {
    out << name;
    for (double v : values) out << ' ' << format_double(v);
    out << '\n';
  };
  block("w1", p.w1.data());
  block("b1", p.b1.span());
  block("w2", p.w2.data());
  block("b2", p.b2.span());
}

MlpParams read_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&](const std::string& key) {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, "missing '" + key + "' line");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split(trim(line), ' ');
    if (fields.empty() || fields[0] != key)
      throw ParseError(line_no, "expected '" + key + "'");
    return std::vector<std::string_view>(fields.begin() + 1, fields.end());
  };

  const auto magic = next("mtlflow-model");
  if (magic.size() != 1 || magic[0] != "1") throw ParseError(line_no, "unsupported version");

  const auto dim_fields = next("dims");
  NetworkDims d;
  if (dim_fields.size() != 3 || !parse_size(dim_fields[0], d.input) ||
      !parse_size(dim_fields[1], d.hidden) || !parse_size(dim_fields[2], d.output) ||
      d.input == 0 || d.hidden == 0 || d.output == 0)
    throw ParseError(line_no, "bad dims");

  const auto act = next("activation");
  HiddenActivation activation;
  if (act.size() == 1 && act[0] == "tansig")
    activation = HiddenActivation::kTansig;
  else if (act.size() == 1 && act[0] == "identity")
    activation = HiddenActivation::kIdentity;
  else
    throw ParseError(line_no, "unknown activation");

  MlpParams p(d, activation);
  auto fill = [&](const char* key, std::span<double> dst) {
    const auto fields = next(key);
    if (fields.size() != dst.size())
      throw ParseError(line_no, std::string(key) + ": expected " + std::to_string(dst.size()) +
                                    " values, got " + std::to_string(fields.size()));
    for (std::size_t i = 0; i < dst.size(); ++i)
      if (!parse_double(fields[i], dst[i]))
        throw ParseError(line_no, std::string(key) + ": bad value '" + std::string(fields[i]) +
                                      "'");
  };
  fill("w1", p.w1.data());
  fill("b1", p.b1.span());
  fill("w2", p.w2.data());
  fill("b2", p.b2.span());
  return p;
}

void save_model(const std::filesystem::path& path, const MlpParams& p) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_model(out, p);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

MlpParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_model(in);
}

}  // namespace mtlflow
