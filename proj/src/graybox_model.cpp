// Copyright 2026 The gbsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gbsense/graybox_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "gbsense/dataset_io.hpp"
#include "gbsense/errors.hpp"
#include "gbsense/random.hpp"

namespace gbsense {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kInitialMuBias = 1.5;
constexpr const char* kCheckpointFormat = "gbsense-graybox-checkpoint";

const Operator2& pauli_z() {
  static const Operator2 z = pauli(Axis::Z);
  return z;
}

// rho_tilde * Z for the ideal Ramsey final state from |0><0|.
Operator2 ideal_state_times_z(const PulseSettings& settings) {
  const Operator2 u = u_ramsey(settings);
  return u * QubitState::ground().rho() * u.adjoint() * pauli_z();
}

double contraction_value(const NoiseOperatorParams& p, const Operator2& rho_z) {
  return (reconstruct_noise_operator(p).matrix * rho_z).trace().real();
}

NoiseContraction contraction_with_gradient(const NoiseOperatorParams& p, const Operator2& rho_z) {
  const Operator2 rz1 = axis_rotation(Axis::Z, p.theta1);
  const Operator2 ry2 = axis_rotation(Axis::Y, p.theta2);
  const Operator2 rz3 = axis_rotation(Axis::Z, p.theta3);
  const Operator2 q = rz1 * ry2 * rz3;
  const Operator2 qa = q.adjoint();
  Operator2 d = Operator2::Zero();
  d(0, 0) = p.mu1;
  d(1, 1) = p.mu2;

  NoiseContraction out;
  out.z = (q * d * qa * rho_z).trace().real();

  // Generator derivatives of the Euler product.
  const Operator2 dq1 = -0.5 * kI * pauli_z() * q;
  const Operator2 dq2 = rz1 * (-0.5 * kI * pauli(Axis::Y)) * ry2 * rz3;
  const Operator2 dq3 = q * (-0.5 * kI * pauli_z());
  const Operator2* dqs[3] = {&dq1, &dq2, &dq3};
  for (int k = 0; k < 3; ++k) {
    const Operator2 dv = *dqs[k] * d * qa + q * d * dqs[k]->adjoint();
    out.grad[k] = (dv * rho_z).trace().real();
  }
  out.grad[3] = (q.col(0) * qa.row(0) * rho_z).trace().real();
  out.grad[4] = (q.col(1) * qa.row(1) * rho_z).trace().real();
  return out;
}

// Per-record quantities that do not depend on the network.
struct PreparedData {
  Eigen::MatrixXd features;  // inputs x N
  std::vector<Operator2> rho_z;
  std::vector<double> target;
  std::vector<ReadoutCalibration> calib;
};

PreparedData prepare(const GrayboxParams& gb, std::span<const DatasetRecord> records) {
  PreparedData d;
  d.features.resize(static_cast<Eigen::Index>(gb.net.input_width), static_cast<Eigen::Index>(records.size()));
  d.rho_z.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    d.features.col(static_cast<Eigen::Index>(i)) = gb_features(gb, records[i].settings);
    d.rho_z.push_back(ideal_state_times_z(records[i].settings));
    d.target.push_back(records[i].p_cl);
    d.calib.push_back(records[i].calib);
  }
  return d;
}

struct BatchEval {
  double loss = 0.0;
  std::vector<double> predictions;
  NetworkParams gradient;
};

BatchEval evaluate(const GrayboxParams& gb, const PreparedData& data, std::span<const std::size_t> indices,
                   LossKind kind, bool want_gradient) {
  if (indices.empty()) throw InvalidArgument("graybox: empty batch");
  const auto n = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd inputs(data.features.rows(), n);
  for (Eigen::Index b = 0; b < n; ++b) inputs.col(b) = data.features.col(static_cast<Eigen::Index>(indices[b]));
  ForwardResult fwd = network_forward(gb.net, inputs, want_gradient);

  BatchEval out;
  out.predictions.resize(indices.size());
  std::vector<double> targets(indices.size());
  std::vector<std::array<double, 5>> dp_dhead(indices.size());
  for (Eigen::Index b = 0; b < n; ++b) {
    const std::size_t idx = indices[b];
    const auto p = NoiseOperatorParams::from_head(fwd.head.col(b));
    const ReadoutCalibration& c = data.calib[idx];
    const double slope = c.alpha() * c.visibility();
    if (want_gradient) {
      const NoiseContraction nc = contraction_with_gradient(p, data.rho_z[idx]);
      out.predictions[b] = c.alpha() * (1.0 + c.visibility() * nc.z);
      for (int k = 0; k < 5; ++k) dp_dhead[b][k] = slope * nc.grad[k];
    } else {
      out.predictions[b] = c.alpha() * (1.0 + c.visibility() * contraction_value(p, data.rho_z[idx]));
    }
    if (!std::isfinite(out.predictions[b]))
      throw NumericError("graybox: non-finite prediction for record " + std::to_string(idx));
    targets[b] = data.target[idx];
  }
  const LossResult loss = log_mse_loss(out.predictions, targets, kind);
  if (!std::isfinite(loss.loss)) throw NumericError("graybox: non-finite loss");
  out.loss = loss.loss;
  if (want_gradient) {
    Eigen::MatrixXd head_grad(static_cast<Eigen::Index>(kHeadWidth), n);
    for (Eigen::Index b = 0; b < n; ++b)
      for (int k = 0; k < 5; ++k) head_grad(k, b) = loss.gradient[b] * dp_dhead[b][k];
    out.gradient = backward(gb.net, fwd.tape, head_grad);
  }
  return out;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

void append_vector(std::string& s, const double* data, Eigen::Index n) {
  s += "[";
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i) s += ",";
    s += format_double(data[i]);
  }
  s += "]";
}

void append_layer(std::string& s, const DenseLayer& layer) {
  s += "\"weights\":[";
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
    if (r) s += ",";
    const Eigen::VectorXd row = layer.weights.row(r).transpose();
    append_vector(s, row.data(), row.size());
  }
  s += "],\"bias\":";
  append_vector(s, layer.bias.data(), layer.bias.size());
}

DenseLayer parse_layer(const nlohmann::json& j, Activation act) {
  const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
  const auto bias = j.at("bias").get<std::vector<double>>();
  if (rows.empty() || rows.size() != bias.size()) throw CorruptFile("layer weights/bias shape mismatch");
  DenseLayer L;
  L.activation = act;
  L.weights.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw CorruptFile("ragged weight matrix");
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      L.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  L.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
  return L;
}

}  // namespace

void NoiseOperatorParams::validate() const {
  if (!std::isfinite(theta1) || !std::isfinite(theta2) || !std::isfinite(theta3))
    throw InvalidArgument("NoiseOperatorParams: thetas must be finite");
  if (!(std::abs(mu1) < 1.0) || !(std::abs(mu2) < 1.0))
    throw InvalidArgument("NoiseOperatorParams: mu values must lie in (-1, 1)");
}

NoiseOperatorParams NoiseOperatorParams::from_head(const Eigen::Ref<const Eigen::VectorXd>& head) {
  if (head.size() != static_cast<Eigen::Index>(kHeadWidth)) throw InvalidArgument("head must have 5 values");
  return {head[0], head[1], head[2], head[3], head[4]};
}

NoiseOperator reconstruct_noise_operator(const NoiseOperatorParams& p) {
  const Operator2 q = axis_rotation(Axis::Z, p.theta1) * axis_rotation(Axis::Y, p.theta2) *
                      axis_rotation(Axis::Z, p.theta3);
  Operator2 d = Operator2::Zero();
  d(0, 0) = p.mu1;
  d(1, 1) = p.mu2;
  return {q * d * q.adjoint()};
}

NoiseContraction contract_noise_operator(const NoiseOperatorParams& p, const QubitState& rho_tilde) {
  return contraction_with_gradient(p, rho_tilde.rho() * pauli_z());
}

void GrayboxParams::validate() const {
  net.validate();
  if (feature_layout.size() != net.input_width)
    throw InvalidArgument("GrayboxParams: feature layout length != network input width");
  if (normalization.size() != net.input_width)
    throw InvalidArgument("GrayboxParams: normalization length != network input width");
  for (const auto& s : normalization)
    if (!(s.scale > 0.0) || !std::isfinite(s.offset) || !std::isfinite(s.scale))
      throw InvalidArgument("GrayboxParams: normalization scales must be positive");
}

std::size_t GrayboxParams::chi_size() const { return feature_layout.size() >= 3 ? feature_layout.size() - 3 : 0; }

std::vector<std::string> default_feature_layout(std::size_t chi_size) {
  std::vector<std::string> layout{"tau_us", "phi_rad", "fB_MHz"};
  for (std::size_t i = 0; i < chi_size; ++i) layout.push_back("chi" + std::to_string(i));
  return layout;
}

GrayboxParams make_graybox(const std::vector<LayerSpec>& hidden, std::size_t chi_size, std::uint64_t seed) {
  GrayboxParams gb;
  gb.feature_layout = default_feature_layout(chi_size);
  gb.net = NetworkParams::glorot(gb.feature_layout.size(), hidden, seed);
  gb.net.head.bias[3] = kInitialMuBias;
  gb.net.head.bias[4] = kInitialMuBias;
  gb.normalization.assign(gb.feature_layout.size(), FeatureScaling{});
  return gb;
}

void fit_normalization(GrayboxParams& gb, std::span<const DatasetRecord> records) {
  if (records.empty()) throw InvalidArgument("fit_normalization: no records");
  const std::size_t n = gb.feature_layout.size();
  std::vector<double> lo(n, std::numeric_limits<double>::infinity());
  std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
  for (const auto& r : records) {
    if (r.settings.chi.size() + 3 != n) throw InvalidArgument("fit_normalization: chi size mismatch");
    const double raw[3] = {r.settings.tau_us, r.settings.phi_rad, r.settings.fB_MHz};
    for (std::size_t i = 0; i < n; ++i) {
      const double x = i < 3 ? raw[i] : r.settings.chi[i - 3];
      lo[i] = std::min(lo[i], x);
      hi[i] = std::max(hi[i], x);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double half = 0.5 * (hi[i] - lo[i]);
    gb.normalization[i] = {0.5 * (hi[i] + lo[i]), half > 0.0 ? half : 1.0};
  }
}

Eigen::VectorXd gb_features(const GrayboxParams& gb, const PulseSettings& settings) {
  const std::size_t n = gb.feature_layout.size();
  if (settings.chi.size() + 3 != n)
    throw InvalidArgument("graybox: settings carry " + std::to_string(settings.chi.size()) +
                          " chi values, model expects " + std::to_string(n - 3));
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  x[0] = settings.tau_us;
  x[1] = settings.phi_rad;
  x[2] = settings.fB_MHz;
  for (std::size_t i = 3; i < n; ++i) x[static_cast<Eigen::Index>(i)] = settings.chi[i - 3];
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    x[k] = (x[k] - gb.normalization[i].offset) / gb.normalization[i].scale;
  }
  return x;
}

GbPrediction gb_forward(const GrayboxParams& gb, const PulseSettings& settings, const ReadoutCalibration& calib) {
  settings.validate();
  calib.validate();
  ForwardResult fwd = network_forward(gb.net, gb_features(gb, settings), true);
  GbPrediction out;
  out.noise = NoiseOperatorParams::from_head(fwd.head.col(0));
  out.z_expectation = contraction_value(out.noise, ideal_state_times_z(settings));
  out.p_cl = click_probability(out.z_expectation, calib);
  out.tape = std::move(fwd.tape);
  return out;
}

GbLossGradient gb_loss_gradient(const GrayboxParams& gb, std::span<const DatasetRecord> batch, LossKind kind) {
  if (batch.empty()) throw InvalidArgument("gb_loss_gradient: empty batch");
  const PreparedData data = prepare(gb, batch);
  BatchEval e = evaluate(gb, data, all_indices(batch.size()), kind, true);
  return {e.loss, std::move(e.gradient)};
}

double gb_loss(const GrayboxParams& gb, std::span<const DatasetRecord> records, std::span<const std::size_t> indices,
               LossKind kind) {
  const PreparedData data = prepare(gb, records);
  return evaluate(gb, data, indices, kind, false).loss;
}

double gb_mse(const GrayboxParams& gb, std::span<const DatasetRecord> records, std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  const PreparedData data = prepare(gb, records);
  const BatchEval e = evaluate(gb, data, indices, LossKind::LogOfMean, false);
  double sse = 0.0;
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const double d = e.predictions[b] - data.target[indices[b]];
    sse += d * d;
  }
  return sse / static_cast<double>(indices.size());
}

DataSplit split_dataset(std::size_t n, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("split ratio must lie in (0, 1]");
  std::vector<std::size_t> idx = all_indices(n);
  Rng rng(splitmix64(seed));
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  DataSplit s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return s;
}

void TrainConfig::validate() const {
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw InvalidArgument("TrainConfig: split ratio must lie in (0, 1)");
  if (eval_every == 0) throw InvalidArgument("TrainConfig: eval_every must be >= 1");
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0))
    throw InvalidArgument("TrainConfig: final_lr_fraction must lie in (0, 1]");
  adam.validate();
}

TrainResult train(const GrayboxParams& gb_init, std::span<const DatasetRecord> dataset, const TrainConfig& config) {
  config.validate();
  gb_init.validate();
  if (dataset.size() < 10) throw InvalidArgument("train: need at least 10 records");

  TrainResult result{gb_init, {}};
  GrayboxParams& gb = result.gb;
  TrainReport& report = result.report;
  report.seed = config.seed;
  report.split = split_dataset(dataset.size(), config.split_ratio, config.seed);
  const auto& train_idx = report.split.train;
  const auto& test_idx = report.split.test;
  if (train_idx.empty() || test_idx.empty()) throw InvalidArgument("train: split leaves an empty partition");

  const PreparedData data = prepare(gb, dataset);
  auto test_loss = [&] { return evaluate(gb, data, test_idx, config.loss, false).loss; };
  report.train_loss.push_back(evaluate(gb, data, train_idx, config.loss, false).loss);
  report.test_iterations.push_back(0);
  report.test_loss.push_back(test_loss());

  AdamState adam = AdamState::init(gb.net, config.adam);
  const bool minibatch = config.batch_size > 0 && config.batch_size < train_idx.size();
  std::vector<std::size_t> order = train_idx;
  std::size_t cursor = order.size();
  Rng batch_rng = derive_stream(config.seed, {0xba7c4ULL});
  NetworkParams last_good = gb.net;

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    std::span<const std::size_t> batch(train_idx);
    if (minibatch) {
      if (cursor + config.batch_size > order.size()) {
        std::shuffle(order.begin(), order.end(), batch_rng);
        cursor = 0;
      }
      batch = std::span<const std::size_t>(order).subspan(cursor, config.batch_size);
      cursor += config.batch_size;
    }
    BatchEval e;
    try {
      e = evaluate(gb, data, batch, config.loss, true);
      if (!e.gradient.all_finite()) throw NumericError("non-finite gradient");
    } catch (const NumericError&) {
      gb.net = std::move(last_good);
      report.diverged = true;
      break;
    }
    report.train_loss.push_back(e.loss);
    last_good = gb.net;
    const double progress = static_cast<double>(it - 1) / static_cast<double>(config.iterations);
    adam.hyper.learning_rate = config.adam.learning_rate * std::pow(config.final_lr_fraction, progress);
    adam_step(gb.net, e.gradient, adam);
    report.iterations = it;
    if (it % config.eval_every == 0 || it == config.iterations) {
      double tl;
      try {
        tl = test_loss();
      } catch (const NumericError&) {
        gb.net = std::move(last_good);
        report.diverged = true;
        break;
      }
      report.test_iterations.push_back(it);
      report.test_loss.push_back(tl);
    }
  }
  report.final_train_mse = gb_mse(gb, dataset, train_idx);
  report.final_test_mse = gb_mse(gb, dataset, test_idx);
  return result;
}

std::vector<double> gb_predict_grid(const GrayboxParams& gb, double tau_us, double phi_rad,
                                    const ReadoutCalibration& calib, const std::vector<double>& chi,
                                    std::span<const double> f_grid) {
  if (f_grid.empty()) throw InvalidArgument("gb_predict_grid: empty frequency grid");
  for (std::size_t i = 1; i < f_grid.size(); ++i)
    if (!(f_grid[i] > f_grid[i - 1])) throw InvalidArgument("gb_predict_grid: grid must be ascending");
  calib.validate();
  const auto n = static_cast<Eigen::Index>(f_grid.size());
  PulseSettings s{tau_us, phi_rad, f_grid[0], chi};
  s.validate();
  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(gb.net.input_width), n);
  std::vector<Operator2> rho_z(f_grid.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    s.fB_MHz = f_grid[static_cast<std::size_t>(i)];
    inputs.col(i) = gb_features(gb, s);
    rho_z[static_cast<std::size_t>(i)] = ideal_state_times_z(s);
  }
  const ForwardResult fwd = network_forward(gb.net, inputs, false);
  std::vector<double> out(f_grid.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = contraction_value(NoiseOperatorParams::from_head(fwd.head.col(i)), rho_z[static_cast<std::size_t>(i)]);
    out[static_cast<std::size_t>(i)] = click_probability(z, calib);
  }
  return out;
}

void save_checkpoint(const GrayboxParams& gb, const std::filesystem::path& path) {
  gb.validate();
  std::string s = "{\n\"format\":\"" + std::string(kCheckpointFormat) + "\",\n";
  s += "\"version\":" + std::to_string(kCheckpointVersion) + ",\n";
  s += "\"input_width\":" + std::to_string(gb.net.input_width) + ",\n";
  s += "\"feature_layout\":[";
  for (std::size_t i = 0; i < gb.feature_layout.size(); ++i)
    s += (i ? ",\"" : "\"") + gb.feature_layout[i] + "\"";
  s += "],\n\"normalization\":[";
  for (std::size_t i = 0; i < gb.normalization.size(); ++i) {
    if (i) s += ",";
    s += "{\"offset\":" + format_double(gb.normalization[i].offset) +
         ",\"scale\":" + format_double(gb.normalization[i].scale) + "}";
  }
  s += "],\n\"hidden\":[\n";
  for (std::size_t l = 0; l < gb.net.hidden.size(); ++l) {
    const DenseLayer& L = gb.net.hidden[l];
    s += l ? ",\n{" : "{";
    s += "\"width\":" + std::to_string(L.weights.rows());
    s += ",\"activation\":\"" + std::string(L.activation == Activation::Tanh ? "tanh" : "linear") + "\",";
    append_layer(s, L);
    s += "}";
  }
  s += "\n],\n\"head\":{\"linear_units\":" + std::to_string(kHeadLinearUnits) + ",\"tanh_units\":" +
       std::to_string(kHeadWidth - kHeadLinearUnits) + ",";
  append_layer(s, gb.net.head);
  s += "}\n}\n";
  write_text_file(path, s);
}

GrayboxParams load_checkpoint(const std::filesystem::path& path,
                              const std::optional<std::vector<std::string>>& expected_layout) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw CorruptFile(path.string() + ": " + e.what());
  }
  GrayboxParams gb;
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw CorruptFile("not a graybox checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw VersionMismatch(path.string() + ": checkpoint version " + std::to_string(version) + ", expected " +
                            std::to_string(kCheckpointVersion));
    gb.feature_layout = j.at("feature_layout").get<std::vector<std::string>>();
    for (const auto& n : j.at("normalization"))
      gb.normalization.push_back({n.at("offset").get<double>(), n.at("scale").get<double>()});
    gb.net.input_width = j.at("input_width").get<std::size_t>();
    for (const auto& h : j.at("hidden")) {
      const std::string act = h.at("activation").get<std::string>();
      if (act != "tanh" && act != "linear") throw CorruptFile("unknown activation " + act);
      gb.net.hidden.push_back(parse_layer(h, act == "tanh" ? Activation::Tanh : Activation::Linear));
      if (gb.net.hidden.back().weights.rows() != h.at("width").get<Eigen::Index>())
        throw CorruptFile("layer width does not match weights");
    }
    gb.net.head = parse_layer(j.at("head"), Activation::Linear);
    gb.validate();
    if (!gb.net.all_finite()) throw CorruptFile("non-finite weights");
  } catch (const IoError& e) {
    if (dynamic_cast<const VersionMismatch*>(&e)) throw;
    throw CorruptFile(path.string() + ": " + e.what());
  } catch (const std::exception& e) {
    throw CorruptFile(path.string() + ": " + e.what());
  }
  if (expected_layout && *expected_layout != gb.feature_layout) {
    std::string want, got;
    for (const auto& s : *expected_layout) want += s + " ";
    for (const auto& s : gb.feature_layout) got += s + " ";
    throw LayoutMismatch(path.string() + ": feature layout [" + got + "] does not match expected [" + want + "]");
  }
  return gb;
}

std::string train_report_csv(const TrainReport& report) {
  std::string s = "iteration,train_loss,test_loss\n";
  std::size_t t = 0;
  for (std::size_t it = 0; it < report.train_loss.size(); ++it) {
    s += std::to_string(it) + "," + format_double(report.train_loss[it]) + ",";
    if (t < report.test_iterations.size() && report.test_iterations[t] == it) s += format_double(report.test_loss[t++]);
    s += "\n";
  }
  return s;
}

}  // namespace gbsense
