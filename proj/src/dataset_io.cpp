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

#include "gbsense/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "gbsense/errors.hpp"

namespace gbsense {

using nlohmann::json;

std::string format_double(double x) {
  if (!std::isfinite(x)) throw NumericError("refusing to serialize a non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string record_to_json_line(const DatasetRecord& rec) {
  std::string s = "{\"tau_us\":" + format_double(rec.settings.tau_us);
  s += ",\"phi_rad\":" + format_double(rec.settings.phi_rad);
  s += ",\"fB_MHz\":" + format_double(rec.settings.fB_MHz);
  s += ",\"chi\":[";
  for (std::size_t i = 0; i < rec.settings.chi.size(); ++i) {
    if (i) s += ",";
    s += format_double(rec.settings.chi[i]);
  }
  s += "],\"pi0\":" + format_double(rec.calib.pi0);
  s += ",\"pi1\":" + format_double(rec.calib.pi1);
  s += ",\"R\":" + std::to_string(rec.R);
  s += ",\"r\":" + std::to_string(rec.r);
  s += ",\"p_cl\":" + format_double(rec.p_cl);
  s += ",\"set_id\":" + std::to_string(rec.set_id);
  s += ",\"truth_fB_MHz\":" + format_double(rec.truth_fB_MHz);
  s += "}";
  return s;
}

DatasetRecord record_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  DatasetRecord rec;
  rec.settings.tau_us = j.at("tau_us").get<double>();
  rec.settings.phi_rad = j.at("phi_rad").get<double>();
  rec.settings.fB_MHz = j.at("fB_MHz").get<double>();
  rec.settings.chi = j.at("chi").get<std::vector<double>>();
  rec.calib.pi0 = j.at("pi0").get<double>();
  rec.calib.pi1 = j.at("pi1").get<double>();
  rec.R = j.at("R").get<std::int64_t>();
  rec.r = j.at("r").get<std::int64_t>();
  rec.p_cl = j.at("p_cl").get<double>();
  rec.set_id = j.at("set_id").get<std::int64_t>();
  rec.truth_fB_MHz = j.at("truth_fB_MHz").get<double>();
  rec.validate();
  return rec;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << contents;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records) {
  std::string text;
  for (const auto& rec : records) text += record_to_json_line(rec) + "\n";
  write_text_file(path, text);
}

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json_line(line));
    } catch (const std::exception& e) {
      throw CorruptFile(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

TruthMap truth_from_dataset(const std::vector<DatasetRecord>& records) {
  TruthMap t;
  for (const auto& r : records) t[r.set_id] = r.truth_fB_MHz;
  return t;
}

void write_truth(const std::filesystem::path& path, const TruthMap& truth) {
  std::string s = "{\"format\":\"gbsense-truth\",\"version\":1,\"sets\":{";
  bool first = true;
  for (const auto& [id, f] : truth) {
    if (!first) s += ",";
    first = false;
    s += "\"" + std::to_string(id) + "\":" + format_double(f);
  }
  s += "}}\n";
  write_text_file(path, s);
}

TruthMap read_truth(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "gbsense-truth") throw CorruptFile("not a truth file");
    TruthMap t;
    for (const auto& [key, value] : j.at("sets").items()) t[std::stoll(key)] = value.get<double>();
    return t;
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptFile(path.string() + ": " + e.what());
  }
}

std::map<std::int64_t, std::vector<DatasetRecord>> group_by_set(const std::vector<DatasetRecord>& records) {
  std::map<std::int64_t, std::vector<DatasetRecord>> out;
  for (const auto& r : records) out[r.set_id].push_back(r);
  return out;
}

}  // namespace gbsense
