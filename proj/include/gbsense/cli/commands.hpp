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

#include <iosfwd>

#include "gbsense/cli/config.hpp"

namespace gbsense::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitValidation = 2,
  kExitIo = 3,
  kExitNumeric = 4,
};

/// Each command resolves `config` in place (defaults filled), writes its
/// outputs plus config.json under config["out"] and returns an exit code.
int cmd_generate(Json& config, std::ostream& log);
int cmd_train(Json& config, std::ostream& log);
int cmd_estimate(Json& config, std::ostream& log);
int cmd_benchmark(Json& config, std::ostream& log);
int cmd_report(Json& config, std::ostream& log);

/// Full command-line entry point; exceptions are mapped to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gbsense::cli
