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

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "gbsense/cli/commands.hpp"
#include "gbsense/dataset_io.hpp"
#include "gbsense/graybox_model.hpp"
#include "test_util.hpp"

using namespace gbsense;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gbsense");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string p(const fs::path& path) { return path.string(); }

cli::Json read_json(const fs::path& path) { return cli::Json::parse(read_text_file(path)); }

// Small noiseless dataset shared by several cases.
fs::path make_dataset(const fs::path& dir, const std::string& sets = "3") {
  const fs::path cfg = dir / "gen.json";
  write_text_file(cfg, R"({"plan": {"taus_per_set": 8, "f_min_MHz": 0.2, "f_max_MHz": 1.8, "tau_max_us": 3.0,
                          "R": 100000, "pi0": 0.3, "pi1": 0.15}})");
  const CliResult r = run_cli({"generate", "--config", p(cfg), "--sets", sets, "--seed", "5", "--out", p(dir / "gen")});
  REQUIRE(r.code == 0);
  return dir / "gen";
}

}  // namespace

TEST_CASE("generate writes dataset, truth and resolved config") {
  const auto dir = testing::scratch_dir("cli_generate");
  const CliResult r = run_cli({"generate", "--sets", "159", "--seed", "3", "--out", p(dir / "a")});
  REQUIRE(r.code == 0);
  CHECK(read_dataset(dir / "a" / "dataset.jsonl").size() == 5088);
  CHECK(read_truth(dir / "a" / "truth.json").size() == 159);
  const cli::Json cfg = read_json(dir / "a" / "config.json");
  CHECK(cfg.at("seed") == 3);
  CHECK(cfg.at("command") == "generate");
  CHECK(cfg.at("plan").at("n_frequency_sets") == 159);
  CHECK(cfg.at("noise").at("prep_epsilon") == 0.0);

  REQUIRE(run_cli({"generate", "--sets", "159", "--seed", "3", "--out", p(dir / "b")}).code == 0);
  CHECK(read_text_file(dir / "a" / "dataset.jsonl") == read_text_file(dir / "b" / "dataset.jsonl"));
  CHECK(read_text_file(dir / "a" / "truth.json") == read_text_file(dir / "b" / "truth.json"));

  CHECK(run_cli({"generate", "--sets", "0", "--out", p(dir / "c")}).code == cli::kExitValidation);
  CHECK(run_cli({"generate", "--sets", "-4", "--out", p(dir / "c")}).code == cli::kExitValidation);
  CHECK(run_cli({"generate", "--sets", "2"}).code == cli::kExitValidation);
  fs::remove_all(dir);
}

TEST_CASE("flags override config file values") {
  const auto dir = testing::scratch_dir("cli_override");
  write_text_file(dir / "cfg.json", R"({"seed": 1, "plan": {"n_frequency_sets": 4, "taus_per_set": 2},
                                        "noise": {"t2_star_us": 5.4, "prep_epsilon": 0.05}})");
  REQUIRE(run_cli({"generate", "--config", p(dir / "cfg.json"), "--seed", "9", "--out", p(dir / "o")}).code == 0);
  const cli::Json cfg = read_json(dir / "o" / "config.json");
  CHECK(cfg.at("seed") == 9);
  CHECK(cfg.at("plan").at("n_frequency_sets") == 4);
  CHECK(cfg.at("noise").at("sigma_f_MHz").get<double>() ==
        doctest::Approx(NoiseConfig::sigma_f_for_t2_star(5.4)).epsilon(1e-15));
  CHECK(read_dataset(dir / "o" / "dataset.jsonl").size() == 8);

  write_text_file(dir / "shared.json", R"({"plan": {"n_frequency_sets": 1, "taus_per_set": 2},
                                           "train": {"iterations": 3},
                                           "estimator": {"fmin_mhz": 0, "fmax_mhz": 1, "tolerance_mhz": 0.1}})");
  CHECK(run_cli({"generate", "--config", p(dir / "shared.json"), "--out", p(dir / "s")}).code == 0);

  write_text_file(dir / "typo.json", R"({"plan": {"n_frequency_set": 4}})");
  CHECK(run_cli({"generate", "--config", p(dir / "typo.json"), "--out", p(dir / "t")}).code == cli::kExitValidation);
  write_text_file(dir / "broken.json", "{\"plan\": ");
  CHECK(run_cli({"generate", "--config", p(dir / "broken.json"), "--out", p(dir / "t")}).code == cli::kExitIo);
  CHECK(run_cli({"generate", "--config", p(dir / "none.json"), "--out", p(dir / "t")}).code == cli::kExitIo);
  fs::remove_all(dir);
}

TEST_CASE("train outputs and zero-iteration checkpoint") {
  const auto dir = testing::scratch_dir("cli_train");
  const fs::path gen = make_dataset(dir);
  write_text_file(dir / "train.json", R"({"train": {"hidden": [6, 4], "eval_every": 10}})");
  const CliResult zero = run_cli({"train", "--config", p(dir / "train.json"), "--dataset", p(gen / "dataset.jsonl"),
                                  "--iterations", "0", "--seed", "2", "--out", p(dir / "t0")});
  REQUIRE(zero.code == 0);
  const auto records = read_dataset(gen / "dataset.jsonl");
  GrayboxParams init = make_graybox(hidden_layers_from_widths({6, 4}), 0, 2);
  fit_normalization(init, records);
  save_checkpoint(init, dir / "expected.json");
  CHECK(read_text_file(dir / "t0" / "checkpoint.json") == read_text_file(dir / "expected.json"));

  const CliResult r = run_cli({"train", "--config", p(dir / "train.json"), "--dataset", p(gen / "dataset.jsonl"),
                               "--iterations", "30", "--seed", "2", "--out", p(dir / "t1")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("test_mse=") != std::string::npos);
  const cli::Json rep = read_json(dir / "t1" / "train_report.json");
  CHECK(rep.at("iterations") == 30);
  CHECK(rep.at("n_train") == 22);
  CHECK(rep.at("n_test") == 2);
  const std::string csv = read_text_file(dir / "t1" / "train_loss.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 32);
  CHECK(read_json(dir / "t1" / "config.json").at("train").at("iterations") == 30);

  CHECK(run_cli({"train", "--dataset", p(dir / "missing.jsonl"), "--out", p(dir / "t2")}).code == cli::kExitIo);
  fs::remove_all(dir);
}

TEST_CASE("estimate with both providers on the same batches") {
  const auto dir = testing::scratch_dir("cli_estimate");
  const fs::path gen = make_dataset(dir);
  const std::string ds = p(gen / "dataset.jsonl");
  write_text_file(dir / "train.json", R"({"train": {"hidden": [6, 4]}})");
  REQUIRE(run_cli({"train", "--config", p(dir / "train.json"), "--dataset", ds, "--iterations", "5", "--out",
                   p(dir / "t")})
              .code == 0);
  const std::vector<std::string> common{"--dataset", ds, "--fmin-mhz", "0", "--fmax-mhz", "2", "--grid-m", "400",
                                        "--orderings", "5", "--set-id", "1"};
  auto args = [&](std::vector<std::string> extra) {
    std::vector<std::string> a{"estimate"};
    a.insert(a.end(), common.begin(), common.end());
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  const CliResult wb = run_cli(args({"--provider", "wb", "--t2star-us", "5.4", "--out", p(dir / "wb")}));
  REQUIRE(wb.code == 0);
  const CliResult gb =
      run_cli(args({"--provider", "gb", "--checkpoint", p(dir / "t" / "checkpoint.json"), "--out", p(dir / "gb")}));
  REQUIRE(gb.code == 0);
  auto first_column = [](const std::string& csv) {
    std::vector<std::string> col;
    std::stringstream ss(csv);
    for (std::string line; std::getline(ss, line);) col.push_back(line.substr(0, line.find(',')));
    return col;
  };
  const auto a = first_column(read_text_file(dir / "wb" / "trace.csv"));
  CHECK(a.size() == 9);
  CHECK(a == first_column(read_text_file(dir / "gb" / "trace.csv")));
  const cli::Json s = read_json(dir / "wb" / "summary.json");
  CHECK(s.at("provider") == "wb");
  CHECK(s.at("orderings") == 5);
  CHECK(read_json(dir / "wb" / "config.json").at("estimator").at("t2star_us") == 5.4);

  CHECK(run_cli(args({"--provider", "wb", "--out", p(dir / "x")})).code == cli::kExitValidation);
  CHECK(run_cli(args({"--provider", "gb", "--out", p(dir / "x")})).code == cli::kExitValidation);
  CHECK(run_cli(args({"--provider", "qq", "--t2star-us", "5", "--out", p(dir / "x")})).code == cli::kExitValidation);
  CHECK(run_cli({"estimate", "--dataset", ds, "--fmin-mhz", "0", "--fmax-mhz", "2", "--provider", "wb",
                 "--t2star-us", "inf", "--set-id", "42", "--out", p(dir / "x")})
            .code == cli::kExitValidation);
  CHECK(run_cli({"estimate", "--dataset", ds, "--provider", "wb", "--t2star-us", "5", "--set-id", "1", "--out",
                 p(dir / "x")})
            .code == cli::kExitValidation);
  // The checkpoint has no chi inputs; a dataset with chi values is a provider mismatch.
  write_text_file(dir / "chi.json", R"({"plan": {"n_frequency_sets": 1, "taus_per_set": 4, "chi_size": 1}})");
  REQUIRE(run_cli({"generate", "--config", p(dir / "chi.json"), "--out", p(dir / "chi")}).code == 0);
  CHECK(run_cli({"estimate", "--dataset", p(dir / "chi" / "dataset.jsonl"), "--fmin-mhz", "0", "--fmax-mhz", "1",
                 "--provider", "gb", "--checkpoint", p(dir / "t" / "checkpoint.json"), "--out", p(dir / "x")})
            .code == cli::kExitValidation);
  fs::remove_all(dir);
}

TEST_CASE("benchmark and report") {
  const auto dir = testing::scratch_dir("cli_benchmark");
  const fs::path gen = make_dataset(dir);
  const std::string ds = p(gen / "dataset.jsonl");
  const std::vector<std::string> base{"benchmark", "--dataset", ds, "--fmin-mhz", "0", "--fmax-mhz", "2",
                                      "--grid-m", "400", "--orderings", "4", "--t2star-us", "inf"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  const CliResult self = run_cli(with({"--provider", "wb,wb", "--out", p(dir / "self")}));
  REQUIRE(self.code == 0);
  const cli::Json sum = read_json(dir / "self" / "summary.json");
  CHECK(sum.at("providers").at("wb").at("final_E_MHz2") == sum.at("providers").at("wb_2").at("final_E_MHz2"));
  CHECK(sum.at("providers").at("wb").at("n_converged") == 3);
  CHECK(sum.at("tolerance_MHz").get<double>() == doctest::Approx(10.0 * 2.0 / 400.0));
  const std::string per_set = read_text_file(dir / "self" / "per_set.csv");
  CHECK(std::count(per_set.begin(), per_set.end(), '\n') == 7);

  const CliResult rep = run_cli({"report", "--input", p(dir / "self"), "--out", p(dir / "rep")});
  REQUIRE(rep.code == 0);
  const std::string plot = read_text_file(dir / "rep" / "plot_data.csv");
  CHECK(plot.rfind("provider,set_id,iteration,metric,value\n", 0) == 0);
  CHECK(plot.find("\nwb,0,1,fhat_MHz,") != std::string::npos);
  CHECK(plot.find("\nwb_2,2,8,E_MHz2,") != std::string::npos);
  const cli::Json dist = read_json(dir / "rep" / "distributions.json");
  CHECK(dist.contains("wb"));
  CHECK(dist.contains("wb_2"));
  REQUIRE(run_cli({"report", "--input", p(dir / "self"), "--out", p(dir / "rep")}).code == 0);
  CHECK(read_text_file(dir / "rep" / "plot_data.csv") == plot);

  write_text_file(dir / "self" / "traces" / "wb__set0.csv", "iteration,mean_fhat_MHz,mean_E_MHz2,mean_V_MHz2,skip_rate\n1,abc,,0,0\n");
  const CliResult bad = run_cli({"report", "--input", p(dir / "self"), "--out", p(dir / "rep2")});
  CHECK(bad.code == cli::kExitIo);
  CHECK(bad.err.find("wb__set0.csv") != std::string::npos);

  fs::remove(gen / "truth.json");
  CHECK(run_cli(with({"--provider", "wb", "--out", p(dir / "nt")})).code == cli::kExitIo);
  write_text_file(dir / "empty.jsonl", "");
  CHECK(run_cli({"benchmark", "--dataset", p(dir / "empty.jsonl"), "--fmin-mhz", "0", "--fmax-mhz", "2",
                 "--provider", "wb", "--t2star-us", "5", "--out", p(dir / "e")})
            .code == cli::kExitValidation);
  fs::remove_all(dir);
}

TEST_CASE("binary exit codes") {
  const char* bin = std::getenv("GBSENSE_CLI");
  if (bin == nullptr) {
    MESSAGE("GBSENSE_CLI not set; skipping binary checks");
    return;
  }
  auto status = [&](const std::string& args) {
    const int s = std::system((std::string(bin) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status("--help") == 0);
  CHECK(status("") == cli::kExitValidation);
  CHECK(status("generate --bogus 1 --out /tmp/x") == cli::kExitValidation);
  CHECK(status("train --dataset /nonexistent/d.jsonl --out /tmp/gbsense_cli_bin") == cli::kExitIo);
}
