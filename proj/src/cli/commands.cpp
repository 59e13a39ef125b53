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

#include "gbsense/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "gbsense/bayes_estimator.hpp"
#include "gbsense/dataset_io.hpp"
#include "gbsense/errors.hpp"
#include "gbsense/providers.hpp"
#include "gbsense/random.hpp"

namespace gbsense::cli {

namespace fs = std::filesystem;

namespace {

// One config file may carry sections for several subcommands; each reads what it needs.
const std::vector<std::string> kTopLevelKeys{"command", "seed",  "out",       "input",    "dataset",  "truth",
                                             "checkpoint", "plan", "noise", "train", "estimator"};

fs::path output_dir(Json& config) {
  const auto out = get_value<std::string>(config, "config", "out");
  if (out.empty()) throw InvalidArgument("--out must not be empty");
  return out;
}

std::uint64_t resolve_seed(Json& config) {
  set_default(config, "seed", 0);
  return get_value<std::uint64_t>(config, "config", "seed");
}

void record_config(const fs::path& out, const std::string& command, const Json& config) {
  Json j = config;
  j["command"] = command;
  write_text_file(out / "config.json", j.dump(2) + "\n");
}

Json summary_json(std::span<const double> values) {
  if (values.empty()) return nullptr;
  const DistributionSummary s = summarize(values);
  return {{"count", s.count}, {"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

struct EstimatorSettings {
  EstimationOptions options;
  std::vector<std::string> providers;
  WhiteboxConfig wb;
  std::optional<std::int64_t> set_id;
  double tolerance_MHz = 0.0;
};

EstimatorSettings resolve_estimator(Json& config, bool benchmark) {
  Json& e = config["estimator"];
  if (e.is_null()) e = Json::object();
  check_keys(e, "estimator",
             {"provider", "t2star_us", "fmin_mhz", "fmax_mhz", "grid_m", "orderings", "mode", "set_id", "tolerance_mhz"});
  if (!e.contains("fmin_mhz") || !e.contains("fmax_mhz"))
    throw InvalidArgument("estimator: the prior bounds --fmin-mhz and --fmax-mhz are required");
  set_default(e, "grid_m", 5000);
  set_default(e, "orderings", 100);
  set_default(e, "mode", "auto");
  set_default(e, "provider", benchmark ? Json("gb,wb") : Json("wb"));

  EstimatorSettings s;
  s.options.f_min_MHz = get_value<double>(e, "estimator", "fmin_mhz");
  s.options.f_max_MHz = get_value<double>(e, "estimator", "fmax_mhz");
  s.options.m_subintervals = get_value<std::size_t>(e, "estimator", "grid_m");
  s.options.orderings = get_value<std::size_t>(e, "estimator", "orderings");
  s.options.mode = parse_count_mode(get_value<std::string>(e, "estimator", "mode"));
  s.options.validate();

  std::stringstream list(get_value<std::string>(e, "estimator", "provider"));
  for (std::string item; std::getline(list, item, ',');) {
    if (item != "gb" && item != "wb") throw InvalidArgument("estimator: unknown provider '" + item + "' (gb or wb)");
    s.providers.push_back(item);
  }
  if (s.providers.empty()) throw InvalidArgument("estimator: no provider given");
  if (!benchmark && s.providers.size() != 1) throw InvalidArgument("estimate takes exactly one provider");

  if (std::count(s.providers.begin(), s.providers.end(), "wb") > 0) {
    if (!e.contains("t2star_us")) throw InvalidArgument("estimator: the wb provider needs --t2star-us");
    const Json& t2 = e.at("t2star_us");
    if (t2.is_string() && t2.get<std::string>() == "inf") {
      s.wb = WhiteboxConfig::infinite();
    } else {
      s.wb.t2_star_us = get_value<double>(e, "estimator", "t2star_us");
      s.wb.validate();
    }
  }
  if (!benchmark && e.contains("set_id")) s.set_id = get_value<std::int64_t>(e, "estimator", "set_id");
  const double spacing = (s.options.f_max_MHz - s.options.f_min_MHz) / static_cast<double>(s.options.m_subintervals);
  if (benchmark) {
    set_default(e, "tolerance_mhz", 10.0 * spacing);
    s.tolerance_MHz = get_value<double>(e, "estimator", "tolerance_mhz");
    if (!(s.tolerance_MHz > 0.0)) throw InvalidArgument("estimator: tolerance_mhz must be > 0");
  }
  return s;
}

std::unique_ptr<LikelihoodProvider> make_provider(const std::string& kind, Json& config, const EstimatorSettings& s,
                                                  std::size_t chi_size) {
  if (kind == "wb") return std::make_unique<WhiteboxProvider>(s.wb);
  if (!config.contains("checkpoint")) throw InvalidArgument("the gb provider needs --checkpoint");
  const fs::path path = get_value<std::string>(config, "config", "checkpoint");
  return std::make_unique<GrayboxProvider>(load_checkpoint(path, default_feature_layout(chi_size)));
}

std::vector<MeasurementBatch> to_batches(const std::vector<DatasetRecord>& records) {
  std::vector<MeasurementBatch> b;
  b.reserve(records.size());
  for (const auto& r : records) b.push_back(MeasurementBatch::from_record(r));
  return b;
}

std::uint64_t set_seed(std::uint64_t seed, std::int64_t set_id) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(set_id)));
}

std::vector<DatasetRecord> load_dataset(Json& config) {
  const fs::path path = get_value<std::string>(config, "config", "dataset");
  auto records = read_dataset(path);
  if (records.empty()) throw InvalidArgument(path.string() + ": dataset is empty");
  return records;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, const fs::path& file, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw CorruptFile(file.string() + ":" + std::to_string(line) + ": not a number: '" + cell + "'");
}

}  // namespace

int cmd_generate(Json& config, std::ostream& log) {
  check_keys(config, "config", kTopLevelKeys);
  const fs::path out = output_dir(config);
  const std::uint64_t seed = resolve_seed(config);
  const DatasetPlan plan = resolve_plan(config["plan"]);
  const NoiseConfig noise = resolve_noise(config["noise"]);
  const auto records = generate_dataset(plan, noise, seed);
  write_dataset(out / "dataset.jsonl", records);
  write_truth(out / "truth.json", truth_from_dataset(records));
  record_config(out, "generate", config);
  log << "generate: " << records.size() << " records in " << plan.n_frequency_sets << " sets -> "
      << (out / "dataset.jsonl").string() << "\n";
  return kExitOk;
}

int cmd_train(Json& config, std::ostream& log) {
  check_keys(config, "config", kTopLevelKeys);
  const fs::path out = output_dir(config);
  const std::uint64_t seed = resolve_seed(config);
  const TrainSettings ts = resolve_train(config["train"], seed);
  const auto records = load_dataset(config);
  const std::size_t chi_size = records.front().settings.chi.size();

  GrayboxParams gb = make_graybox(hidden_layers_from_widths(ts.hidden_widths), chi_size, ts.init_seed);
  fit_normalization(gb, records);
  record_config(out, "train", config);
  const TrainResult result = train(gb, records, ts.config);
  save_checkpoint(result.gb, out / "checkpoint.json");
  write_text_file(out / "train_loss.csv", train_report_csv(result.report));
  const Json report{{"iterations", result.report.iterations},
                    {"diverged", result.report.diverged},
                    {"seed", seed},
                    {"n_train", result.report.split.train.size()},
                    {"n_test", result.report.split.test.size()},
                    {"final_train_mse", result.report.final_train_mse},
                    {"final_test_mse", result.report.final_test_mse}};
  write_text_file(out / "train_report.json", report.dump(2) + "\n");
  log << "train: iterations=" << result.report.iterations << " train_mse=" << format_double(result.report.final_train_mse)
      << " test_mse=" << format_double(result.report.final_test_mse) << "\n";
  if (result.report.diverged) {
    log << "train: diverged; the checkpoint holds the last finite parameters\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_estimate(Json& config, std::ostream& log) {
  check_keys(config, "config", kTopLevelKeys);
  const fs::path out = output_dir(config);
  const std::uint64_t seed = resolve_seed(config);
  EstimatorSettings s = resolve_estimator(config, false);
  const auto sets = group_by_set(load_dataset(config));
  if (!s.set_id) {
    if (sets.size() != 1)
      throw InvalidArgument("dataset holds " + std::to_string(sets.size()) + " sets; choose one with set_id");
    s.set_id = sets.begin()->first;
    config["estimator"]["set_id"] = *s.set_id;
  }
  const auto it = sets.find(*s.set_id);
  if (it == sets.end()) throw InvalidArgument("unknown set_id " + std::to_string(*s.set_id));
  const auto& records = it->second;

  const auto provider = make_provider(s.providers.front(), config, s, records.front().settings.chi.size());
  s.options.seed = set_seed(seed, *s.set_id);
  s.options.truth_MHz = records.front().truth_fB_MHz;
  record_config(out, "estimate", config);
  const EstimationTrace trace = run_estimation(to_batches(records), *provider, s.options);
  write_text_file(out / "trace.csv", estimation_trace_csv(trace));
  const auto fhat = trace.final_fhat();
  const auto E = trace.final_E();
  const auto V = trace.final_V();
  const Json summary{{"provider", provider->name()},
                     {"set_id", *s.set_id},
                     {"truth_fB_MHz", *s.options.truth_MHz},
                     {"iterations", trace.iterations()},
                     {"orderings", s.options.orderings},
                     {"final_mean_fhat_MHz", trace.mean_fhat_MHz.back()},
                     {"final_mean_E_MHz2", trace.mean_E_MHz2.back()},
                     {"final_mean_V_MHz2", trace.mean_V_MHz2.back()},
                     {"final_skip_rate", trace.skip_rate.back()},
                     {"final_fhat_MHz", summary_json(fhat)},
                     {"final_E_MHz2", summary_json(E)},
                     {"final_V_MHz2", summary_json(V)}};
  write_text_file(out / "summary.json", summary.dump(2) + "\n");
  log << "estimate: provider=" << provider->name() << " set=" << *s.set_id
      << " fhat=" << format_double(trace.mean_fhat_MHz.back()) << " MHz truth=" << format_double(*s.options.truth_MHz)
      << " MHz E=" << format_double(trace.mean_E_MHz2.back()) << " MHz^2\n";
  return kExitOk;
}

int cmd_benchmark(Json& config, std::ostream& log) {
  check_keys(config, "config", kTopLevelKeys);
  const fs::path out = output_dir(config);
  const std::uint64_t seed = resolve_seed(config);
  EstimatorSettings s = resolve_estimator(config, true);
  const fs::path dataset_path = get_value<std::string>(config, "config", "dataset");
  set_default(config, "truth", (dataset_path.parent_path() / "truth.json").string());
  const auto records = load_dataset(config);
  const TruthMap truth = read_truth(get_value<std::string>(config, "config", "truth"));
  const auto sets = group_by_set(records);
  const std::size_t chi_size = records.front().settings.chi.size();

  std::vector<std::string> labels;
  std::vector<std::unique_ptr<LikelihoodProvider>> providers;
  for (const auto& kind : s.providers) {
    std::string label = kind;
    for (int k = 2; std::find(labels.begin(), labels.end(), label) != labels.end(); ++k)
      label = kind + "_" + std::to_string(k);
    labels.push_back(label);
    providers.push_back(make_provider(kind, config, s, chi_size));
  }
  record_config(out, "benchmark", config);

  std::string per_set = "provider,set_id,f_true_MHz,final_fhat_MHz,final_E_MHz2,final_V_MHz2,skip_rate,converged\n";
  std::map<std::string, std::vector<double>> final_E, final_V;
  std::map<std::string, std::vector<std::int64_t>> non_converged;
  fs::create_directories(out / "traces");
  for (const auto& [set_id, set_records] : sets) {
    const auto t = truth.find(set_id);
    if (t == truth.end()) throw InvalidArgument("truth file has no entry for set " + std::to_string(set_id));
    const auto batches = to_batches(set_records);
    for (std::size_t p = 0; p < providers.size(); ++p) {
      EstimationOptions opt = s.options;
      opt.seed = set_seed(seed, set_id);
      opt.truth_MHz = t->second;
      const EstimationTrace trace = run_estimation(batches, *providers[p], opt);
      const double fhat = trace.mean_fhat_MHz.back();
      const double E = trace.mean_E_MHz2.back();
      const double V = trace.mean_V_MHz2.back();
      const bool converged = std::abs(fhat - t->second) <= s.tolerance_MHz;
      final_E[labels[p]].push_back(E);
      final_V[labels[p]].push_back(V);
      if (!converged) non_converged[labels[p]].push_back(set_id);
      per_set += labels[p] + "," + std::to_string(set_id) + "," + format_double(t->second) + "," +
                 format_double(fhat) + "," + format_double(E) + "," + format_double(V) + "," +
                 format_double(trace.skip_rate.back()) + "," + (converged ? "1" : "0") + "\n";
      write_text_file(out / "traces" / (labels[p] + "__set" + std::to_string(set_id) + ".csv"),
                      estimation_trace_csv(trace));
    }
  }
  write_text_file(out / "per_set.csv", per_set);

  Json summary{{"tolerance_MHz", s.tolerance_MHz},
               {"grid_spacing_MHz", (s.options.f_max_MHz - s.options.f_min_MHz) /
                                        static_cast<double>(s.options.m_subintervals)},
               {"n_sets", sets.size()},
               {"providers", Json::object()}};
  for (const auto& label : labels) {
    const auto& nc = non_converged[label];
    summary["providers"][label] = {{"final_E_MHz2", summary_json(final_E[label])},
                                   {"final_V_MHz2", summary_json(final_V[label])},
                                   {"n_converged", sets.size() - nc.size()},
                                   {"non_converged_sets", nc}};
    log << "benchmark: " << label << " converged " << sets.size() - nc.size() << "/" << sets.size()
        << " median final E=" << format_double(summarize(final_E[label]).median) << " MHz^2\n";
  }
  write_text_file(out / "summary.json", summary.dump(2) + "\n");
  return kExitOk;
}

int cmd_report(Json& config, std::ostream& log) {
  check_keys(config, "config", kTopLevelKeys);
  const fs::path out = output_dir(config);
  resolve_seed(config);
  set_default(config, "input", out.string());
  const fs::path input = get_value<std::string>(config, "config", "input");
  const fs::path per_set_path = input / "per_set.csv";
  const fs::path trace_dir = input / "traces";
  if (!fs::is_directory(trace_dir)) throw IoError(trace_dir.string() + ": no traces directory");

  std::vector<fs::path> traces;
  for (const auto& entry : fs::directory_iterator(trace_dir))
    if (entry.path().extension() == ".csv") traces.push_back(entry.path());
  std::sort(traces.begin(), traces.end());
  if (traces.empty()) throw IoError(trace_dir.string() + ": no trace files");

  std::string plot = "provider,set_id,iteration,metric,value\n";
  static const char* kMetrics[] = {"fhat_MHz", "E_MHz2", "V_MHz2", "skip_rate"};
  for (const auto& path : traces) {
    const std::string stem = path.stem().string();
    const auto sep = stem.rfind("__set");
    if (sep == std::string::npos) throw CorruptFile(path.string() + ": trace name must be <provider>__set<id>.csv");
    const std::string label = stem.substr(0, sep);
    const std::string set_id = stem.substr(sep + 5);
    std::stringstream text(read_text_file(path));
    std::string line;
    std::getline(text, line);
    if (line != "iteration,mean_fhat_MHz,mean_E_MHz2,mean_V_MHz2,skip_rate")
      throw CorruptFile(path.string() + ":1: unexpected header");
    for (std::size_t n = 2; std::getline(text, line); ++n) {
      const auto cells = split_csv_line(line);
      if (cells.size() != 5) throw CorruptFile(path.string() + ":" + std::to_string(n) + ": expected 5 columns");
      const auto iteration = static_cast<long long>(parse_cell(cells[0], path, n));
      for (int m = 0; m < 4; ++m) {
        if (cells[m + 1].empty()) continue;
        const double v = parse_cell(cells[m + 1], path, n);
        plot += label + "," + set_id + "," + std::to_string(iteration) + "," + kMetrics[m] + "," + format_double(v) + "\n";
      }
    }
  }

  std::stringstream text(read_text_file(per_set_path));
  std::string line;
  std::getline(text, line);
  if (line.rfind("provider,set_id,f_true_MHz,final_fhat_MHz,final_E_MHz2,final_V_MHz2", 0) != 0)
    throw CorruptFile(per_set_path.string() + ":1: unexpected header");
  std::map<std::string, std::vector<double>> E, V;
  for (std::size_t n = 2; std::getline(text, line); ++n) {
    const auto cells = split_csv_line(line);
    if (cells.size() != 8) throw CorruptFile(per_set_path.string() + ":" + std::to_string(n) + ": expected 8 columns");
    E[cells[0]].push_back(parse_cell(cells[4], per_set_path, n));
    V[cells[0]].push_back(parse_cell(cells[5], per_set_path, n));
  }
  Json dist = Json::object();
  for (const auto& [label, values] : E)
    dist[label] = {{"final_E_MHz2", {{"summary", summary_json(values)}, {"values", values}}},
                   {"final_V_MHz2", {{"summary", summary_json(V[label])}, {"values", V[label]}}}};

  write_text_file(out / "plot_data.csv", plot);
  write_text_file(out / "distributions.json", dist.dump(2) + "\n");
  record_config(out, "report", config);
  log << "report: " << traces.size() << " traces -> " << (out / "plot_data.csv").string() << "\n";
  return kExitOk;
}

namespace {

enum class FlagKind { U64, Size, Double, DoubleOrInf, Str };

struct FlagSpec {
  std::string flag;
  std::vector<std::string> path;
  FlagKind kind;
  std::string help;
};

Json convert_flag(const FlagSpec& spec, const std::string& v) {
  auto bad = [&] { return InvalidArgument(spec.flag + ": invalid value '" + v + "'"); };
  try {
    std::size_t used = 0;
    switch (spec.kind) {
      case FlagKind::Str: return v;
      case FlagKind::DoubleOrInf:
        if (v == "inf") return v;
        [[fallthrough]];
      case FlagKind::Double: {
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) throw bad();
        return d;
      }
      case FlagKind::U64:
      case FlagKind::Size: {
        if (v.empty() || v[0] == '-') throw bad();
        const unsigned long long u = std::stoull(v, &used, 10);
        if (used != v.size()) throw bad();
        return static_cast<std::uint64_t>(u);
      }
    }
  } catch (const InvalidArgument&) {
    throw;
  } catch (const std::exception&) {
    throw bad();
  }
  throw bad();
}

std::vector<FlagSpec> flags_for(const std::string& command) {
  const FlagSpec seed{"--seed", {"seed"}, FlagKind::U64, "Random seed"};
  const FlagSpec out{"--out", {"out"}, FlagKind::Str, "Output directory"};
  const FlagSpec dataset{"--dataset", {"dataset"}, FlagKind::Str, "Dataset (JSON Lines)"};
  const FlagSpec checkpoint{"--checkpoint", {"checkpoint"}, FlagKind::Str, "Graybox checkpoint"};
  const std::vector<FlagSpec> estimator{
      {"--provider", {"estimator", "provider"}, FlagKind::Str, "gb or wb (benchmark: comma list)"},
      {"--t2star-us", {"estimator", "t2star_us"}, FlagKind::DoubleOrInf, "Whitebox T2* in us, or inf"},
      {"--fmin-mhz", {"estimator", "fmin_mhz"}, FlagKind::Double, "Prior lower bound (MHz)"},
      {"--fmax-mhz", {"estimator", "fmax_mhz"}, FlagKind::Double, "Prior upper bound (MHz)"},
      {"--grid-m", {"estimator", "grid_m"}, FlagKind::Size, "Grid subintervals"},
      {"--orderings", {"estimator", "orderings"}, FlagKind::Size, "Randomized orderings"},
      {"--mode", {"estimator", "mode"}, FlagKind::Str, "Count likelihood: auto, gaussian or binomial"}};
  std::vector<FlagSpec> f{seed, out};
  if (command == "generate") {
    f.push_back({"--sets", {"plan", "n_frequency_sets"}, FlagKind::Size, "Number of frequency sets"});
    f.push_back({"--fmin-mhz", {"plan", "f_min_MHz"}, FlagKind::Double, "Lowest detuning (MHz)"});
    f.push_back({"--fmax-mhz", {"plan", "f_max_MHz"}, FlagKind::Double, "Highest detuning (MHz)"});
    f.push_back({"--t2star-us", {"noise", "t2_star_us"}, FlagKind::Double, "Quasi-static dephasing T2* (us)"});
  } else if (command == "train") {
    f.push_back(dataset);
    f.push_back({"--iterations", {"train", "iterations"}, FlagKind::Size, "Adam iterations"});
  } else if (command == "estimate") {
    f.push_back(dataset);
    f.push_back(checkpoint);
    f.insert(f.end(), estimator.begin(), estimator.end());
    f.push_back({"--set-id", {"estimator", "set_id"}, FlagKind::U64, "Frequency set to estimate"});
  } else if (command == "benchmark") {
    f.push_back(dataset);
    f.push_back(checkpoint);
    f.push_back({"--truth", {"truth"}, FlagKind::Str, "Truth sidecar (default: next to the dataset)"});
    f.insert(f.end(), estimator.begin(), estimator.end());
    f.push_back({"--tolerance-mhz", {"estimator", "tolerance_mhz"}, FlagKind::Double, "Convergence tolerance"});
  } else if (command == "report") {
    f.push_back({"--input", {"input"}, FlagKind::Str, "Benchmark output directory (default: --out)"});
  }
  return f;
}

using Command = int (*)(Json&, std::ostream&);

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graybox Bayesian frequency estimation for Ramsey sensing"};
  app.name("gbsense");
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> commands{
      {"generate", "Simulate a Ramsey dataset and its truth sidecar"},
      {"train", "Train a graybox model on a dataset"},
      {"estimate", "Run Bayesian estimation on one frequency set"},
      {"benchmark", "Compare providers over every set of a dataset"},
      {"report", "Consolidate benchmark outputs into plot-ready files"}};
  const std::map<std::string, Command> handlers{{"generate", cmd_generate},
                                                {"train", cmd_train},
                                                {"estimate", cmd_estimate},
                                                {"benchmark", cmd_benchmark},
                                                {"report", cmd_report}};

  std::map<std::string, std::string> config_path;
  std::map<std::string, std::vector<std::pair<FlagSpec, CLI::Option*>>> bound;
  std::map<std::string, std::map<std::string, std::string>> values;
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path[name], "JSON config file; flags override its values");
    for (const auto& spec : flags_for(name))
      bound[name].emplace_back(spec, sub->add_option(spec.flag, values[name][spec.flag], spec.help));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  std::string name;
  for (const auto& c : commands)
    if (app.got_subcommand(c.first)) name = c.first;

  try {
    Json config = config_path[name].empty() ? Json::object() : load_config_file(config_path[name]);
    for (const auto& [spec, opt] : bound[name]) {
      if (opt->count() == 0) continue;
      Json* node = &config;
      for (std::size_t i = 0; i + 1 < spec.path.size(); ++i) {
        Json& child = (*node)[spec.path[i]];
        if (child.is_null()) child = Json::object();
        node = &child;
      }
      (*node)[spec.path.back()] = convert_flag(spec, values[name][spec.flag]);
    }
    if (!config.contains("out")) throw InvalidArgument("--out is required");
    return handlers.at(name)(config, out);
  } catch (const LayoutMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

}  // namespace gbsense::cli
