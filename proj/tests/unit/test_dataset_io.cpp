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

#include "doctest.h"

#include <fstream>

#include "gbsense/dataset_io.hpp"
#include "gbsense/errors.hpp"
#include "test_util.hpp"

using namespace gbsense;

namespace {

DatasetRecord sample_record() {
  DatasetRecord r;
  r.settings = {1.0 / 3.0, -2.5, 0.123456789012345678, {0.1, 1e-300}};
  r.calib = {0.03, 0.02};
  r.R = 100000;
  r.r = 2517;
  r.p_cl = 0.02517;
  r.set_id = 7;
  r.truth_fB_MHz = 0.123456789012345678;
  return r;
}

}  // namespace

TEST_CASE("format_double round-trips and rejects non-finite values") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, 123456789.123456789}) {
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK_THROWS_AS(format_double(std::nan("")), NumericError);
  CHECK_THROWS_AS(format_double(INFINITY), NumericError);
}

TEST_CASE("record JSON line round trip is exact") {
  const DatasetRecord r = sample_record();
  const std::string line = record_to_json_line(r);
  CHECK(line.find('\n') == std::string::npos);
  const DatasetRecord back = record_from_json_line(line);
  CHECK(back.settings.tau_us == r.settings.tau_us);
  CHECK(back.settings.phi_rad == r.settings.phi_rad);
  CHECK(back.settings.fB_MHz == r.settings.fB_MHz);
  CHECK(back.settings.chi == r.settings.chi);
  CHECK(back.calib.pi0 == r.calib.pi0);
  CHECK(back.calib.pi1 == r.calib.pi1);
  CHECK(back.R == r.R);
  CHECK(back.r == r.r);
  CHECK(back.p_cl == r.p_cl);
  CHECK(back.set_id == r.set_id);
  CHECK(back.truth_fB_MHz == r.truth_fB_MHz);
  CHECK(record_to_json_line(back) == line);
  for (const char* key : {"tau_us", "phi_rad", "fB_MHz", "chi", "pi0", "pi1", "\"R\"", "\"r\"", "p_cl", "set_id",
                          "truth_fB_MHz"})
    CHECK(line.find(key) != std::string::npos);
}

TEST_CASE("dataset file round trip and errors") {
  const auto dir = testing::scratch_dir("dataset_io");
  std::vector<DatasetRecord> recs{sample_record(), sample_record()};
  recs[1].set_id = 8;
  write_dataset(dir / "d.jsonl", recs);
  const auto back = read_dataset(dir / "d.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[1].set_id == 8);

  CHECK_THROWS_AS(read_dataset(dir / "missing.jsonl"), IoError);

  {
    std::ofstream bad(dir / "bad.jsonl");
    bad << record_to_json_line(recs[0]) << "\n{\"tau_us\": 1.0\n";
  }
  try {
    read_dataset(dir / "bad.jsonl");
    FAIL("expected CorruptFile");
  } catch (const CorruptFile& e) {
    CHECK(std::string(e.what()).find("bad.jsonl:2") != std::string::npos);
  }

  DatasetRecord inconsistent = recs[0];
  inconsistent.r = inconsistent.R + 1;
  {
    std::ofstream bad(dir / "range.jsonl");
    bad << record_to_json_line(inconsistent) << "\n";
  }
  CHECK_THROWS_AS(read_dataset(dir / "range.jsonl"), CorruptFile);
  std::filesystem::remove_all(dir);
}

TEST_CASE("truth sidecar round trip") {
  const auto dir = testing::scratch_dir("truth_io");
  TruthMap t{{0, 0.5}, {3, 1.0 / 7.0}, {12, 2.25}};
  write_truth(dir / "truth.json", t);
  CHECK(read_truth(dir / "truth.json") == t);
  {
    std::ofstream bad(dir / "bad.json");
    bad << "{\"format\":\"other\"}";
  }
  CHECK_THROWS_AS(read_truth(dir / "bad.json"), CorruptFile);
  CHECK_THROWS_AS(read_truth(dir / "nope.json"), IoError);
  std::vector<DatasetRecord> recs(3, sample_record());
  recs[2].set_id = 9;
  recs[2].truth_fB_MHz = 1.5;
  const TruthMap fromds = truth_from_dataset(recs);
  CHECK(fromds.size() == 2);
  CHECK(fromds.at(9) == 1.5);
  const auto groups = group_by_set(recs);
  CHECK(groups.at(7).size() == 2);
  CHECK(groups.at(9).size() == 1);
  std::filesystem::remove_all(dir);
}
