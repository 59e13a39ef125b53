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

#pragma once

// Run configuration: JSON file values, overridden by flags, with every
// default filled in so the resolved object can be recorded next to outputs.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "gbsense/errors.hpp"

#include "gbsense/graybox_model.hpp"
#include "gbsense/sensor_sim.hpp"

namespace gbsense::cli {

using Json = nlohmann::json;

Json load_config_file(const std::filesystem::path& path);

/// Sets obj[key] = value unless the key is already present.
void set_default(Json& obj, const std::string& key, const Json& value);

/// Rejects keys outside `allowed` so typos fail loudly.
void check_keys(const Json& obj, const std::string& where, const std::vector<std::string>& allowed);

template <class T>
T get_value(const Json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) throw InvalidArgument(where + ": missing '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument(where + ": '" + key + "' has the wrong type (" + obj.at(key).dump() + ")");
  }
}

/// Fills defaults in `j` and returns the parsed value.
NoiseConfig resolve_noise(Json& j);
DatasetPlan resolve_plan(Json& j);
struct TrainSettings {
  TrainConfig config;
  std::vector<std::size_t> hidden_widths;
  std::uint64_t init_seed = 0;
};
TrainSettings resolve_train(Json& j, std::uint64_t seed);

std::string loss_kind_name(LossKind kind);
LossKind parse_loss_kind(const std::string& s);

}  // namespace gbsense::cli
