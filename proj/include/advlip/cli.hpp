// include/advlip/cli.hpp

// Copyright 2026 The advlip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ADVLIP_CLI_HPP_
#define ADVLIP_CLI_HPP_

#include <ostream>
#include <string_view>

namespace advlip {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,  // bad flags or config
  kExitData = 3,
  kExitNumerical = 4,
};

/// Commands: gen-synth, train, eval, gradcheck, experiment. Returns the
/// process exit code; nothing is thrown.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace advlip

#endif  // ADVLIP_CLI_HPP_
