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

#include "gbsense/cli/config.hpp"

#include <algorithm>
#include <cmath>

#include "gbsense/dataset_io.hpp"
#include "gbsense/errors.hpp"

namespace gbsense::cli {

Json load_config_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFile(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw InvalidArgument(path.string() + ": config must be a JSON object");
  return j;
}

void set_default(Json& obj, const std::string& key, const Json& value) {
  if (!obj.contains(key)) obj[key] = value;
}

void check_keys(const Json& obj, const std::string& where, const std::vector<std::string>& allowed) {
  if (!obj.is_object()) throw InvalidArgument(where + " must be a JSON object");
  for (const auto& item : obj.items())
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw InvalidArgument(where + ": unknown key '" + item.key() + "'");
}

NoiseConfig resolve_noise(Json& j) {
  if (j.is_null()) j = Json::object();
  check_keys(j, "noise", {"prep_epsilon", "sigma_f_MHz", "t2_star_us", "ou_amplitude_MHz", "ou_tau_c_us",
                          "pulse_width_us", "distortion_tau_us", "amp_error", "calib_jitter"});
  if (j.contains("t2_star_us")) {
    if (j.contains("sigma_f_MHz")) throw InvalidArgument("noise: give either sigma_f_MHz or t2_star_us, not both");
    const double t2 = get_value<double>(j, "noise", "t2_star_us");
    if (!(t2 > 0.0)) throw InvalidArgument("noise: t2_star_us must be > 0");
    j["sigma_f_MHz"] = NoiseConfig::sigma_f_for_t2_star(t2);
  }
  const NoiseConfig d;
  set_default(j, "prep_epsilon", d.prep_epsilon);
  set_default(j, "sigma_f_MHz", d.sigma_f_MHz);
  set_default(j, "ou_amplitude_MHz", d.ou_amplitude_MHz);
  set_default(j, "ou_tau_c_us", d.ou_tau_c_us);
  set_default(j, "pulse_width_us", d.pulse_width_us);
  set_default(j, "distortion_tau_us", d.distortion_tau_us);
  set_default(j, "amp_error", d.amp_error);
  set_default(j, "calib_jitter", d.calib_jitter);
  NoiseConfig c;
  c.prep_epsilon = get_value<double>(j, "noise", "prep_epsilon");
  c.sigma_f_MHz = get_value<double>(j, "noise", "sigma_f_MHz");
  c.ou_amplitude_MHz = get_value<double>(j, "noise", "ou_amplitude_MHz");
  c.ou_tau_c_us = get_value<double>(j, "noise", "ou_tau_c_us");
  c.pulse_width_us = get_value<double>(j, "noise", "pulse_width_us");
  c.distortion_tau_us = get_value<double>(j, "noise", "distortion_tau_us");
  c.amp_error = get_value<double>(j, "noise", "amp_error");
  c.calib_jitter = get_value<double>(j, "noise", "calib_jitter");
  c.validate();
  return c;
}

DatasetPlan resolve_plan(Json& j) {
  if (j.is_null()) j = Json::object();
  check_keys(j, "plan", {"n_frequency_sets", "taus_per_set", "f_min_MHz", "f_max_MHz", "tau_min_us", "tau_max_us",
                         "R", "n_shots", "pi0", "pi1", "chi_size"});
  const DatasetPlan d;
  set_default(j, "n_frequency_sets", d.n_frequency_sets);
  set_default(j, "taus_per_set", d.taus_per_set);
  set_default(j, "f_min_MHz", d.f_min_MHz);
  set_default(j, "f_max_MHz", d.f_max_MHz);
  set_default(j, "tau_min_us", d.tau_min_us);
  set_default(j, "tau_max_us", d.tau_max_us);
  set_default(j, "R", d.R);
  set_default(j, "n_shots", d.n_shots);
  set_default(j, "pi0", d.calib.pi0);
  set_default(j, "pi1", d.calib.pi1);
  set_default(j, "chi_size", d.chi_size);
  DatasetPlan p;
  p.n_frequency_sets = get_value<std::size_t>(j, "plan", "n_frequency_sets");
  p.taus_per_set = get_value<std::size_t>(j, "plan", "taus_per_set");
  p.f_min_MHz = get_value<double>(j, "plan", "f_min_MHz");
  p.f_max_MHz = get_value<double>(j, "plan", "f_max_MHz");
  p.tau_min_us = get_value<double>(j, "plan", "tau_min_us");
  p.tau_max_us = get_value<double>(j, "plan", "tau_max_us");
  p.R = get_value<std::int64_t>(j, "plan", "R");
  p.n_shots = get_value<std::size_t>(j, "plan", "n_shots");
  p.calib = {get_value<double>(j, "plan", "pi0"), get_value<double>(j, "plan", "pi1")};
  p.chi_size = get_value<std::size_t>(j, "plan", "chi_size");
  p.validate();
  return p;
}

std::string loss_kind_name(LossKind kind) { return kind == LossKind::MeanOfLog ? "mean_of_log" : "log_of_mean"; }

LossKind parse_loss_kind(const std::string& s) {
  if (s == "log_of_mean") return LossKind::LogOfMean;
  if (s == "mean_of_log") return LossKind::MeanOfLog;
  throw InvalidArgument("unknown loss '" + s + "' (expected log_of_mean or mean_of_log)");
}

TrainSettings resolve_train(Json& j, std::uint64_t seed) {
  if (j.is_null()) j = Json::object();
  check_keys(j, "train", {"iterations", "hidden", "split_ratio", "learning_rate", "beta1", "beta2", "epsilon",
                          "batch_size", "eval_every", "loss", "final_lr_fraction", "init_seed"});
  const TrainConfig d;
  std::vector<std::size_t> ref;
  for (const auto& l : reference_hidden_layers()) ref.push_back(l.width);
  set_default(j, "iterations", d.iterations);
  set_default(j, "hidden", ref);
  set_default(j, "split_ratio", d.split_ratio);
  set_default(j, "learning_rate", d.adam.learning_rate);
  set_default(j, "beta1", d.adam.beta1);
  set_default(j, "beta2", d.adam.beta2);
  set_default(j, "epsilon", d.adam.epsilon);
  set_default(j, "batch_size", d.batch_size);
  set_default(j, "eval_every", d.eval_every);
  set_default(j, "loss", loss_kind_name(d.loss));
  set_default(j, "final_lr_fraction", d.final_lr_fraction);
  set_default(j, "init_seed", seed);
  TrainSettings s;
  s.config.seed = seed;
  s.config.iterations = get_value<std::size_t>(j, "train", "iterations");
  s.hidden_widths = get_value<std::vector<std::size_t>>(j, "train", "hidden");
  s.config.split_ratio = get_value<double>(j, "train", "split_ratio");
  s.config.adam.learning_rate = get_value<double>(j, "train", "learning_rate");
  s.config.adam.beta1 = get_value<double>(j, "train", "beta1");
  s.config.adam.beta2 = get_value<double>(j, "train", "beta2");
  s.config.adam.epsilon = get_value<double>(j, "train", "epsilon");
  s.config.batch_size = get_value<std::size_t>(j, "train", "batch_size");
  s.config.eval_every = get_value<std::size_t>(j, "train", "eval_every");
  s.config.loss = parse_loss_kind(get_value<std::string>(j, "train", "loss"));
  s.config.final_lr_fraction = get_value<double>(j, "train", "final_lr_fraction");
  s.init_seed = get_value<std::uint64_t>(j, "train", "init_seed");
  s.config.validate();
  if (s.hidden_widths.empty()) throw InvalidArgument("train: hidden must list at least one width");
  return s;
}

}  // namespace gbsense::cli
