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

// JSON-Lines datasets, truth sidecars and small text helpers shared by the
// file formats. Floats are written with 17 significant digits.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gbsense/sensor_sim.hpp"

namespace gbsense {

/// "%.17g"; throws NumericError for non-finite values.
std::string format_double(double x);

std::string record_to_json_line(const DatasetRecord& rec);
DatasetRecord record_from_json_line(const std::string& line);

void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);
/// Throws IoError if the file is missing and CorruptFile on a malformed line
/// (the message names the line number).
std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path);

using TruthMap = std::map<std::int64_t, double>;

TruthMap truth_from_dataset(const std::vector<DatasetRecord>& records);
void write_truth(const std::filesystem::path& path, const TruthMap& truth);
TruthMap read_truth(const std::filesystem::path& path);

/// Records grouped by set_id, preserving acquisition order within each set.
std::map<std::int64_t, std::vector<DatasetRecord>> group_by_set(const std::vector<DatasetRecord>& records);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace gbsense
