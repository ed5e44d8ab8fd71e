// Copyright 2026 The nvtrap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NVTRAP_TOOLS_APP_HPP
#define NVTRAP_TOOLS_APP_HPP

#include <ostream>

namespace nvtrap::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitIo = 4 };

/// `nvtrap run [PIPELINE] --config PATH ...` and `nvtrap validate ...`.
/// Diagnostics and help go to `out`; logging goes to stderr.
int run_cli(int argc, const char* const* argv, std::ostream& out);

}  // namespace nvtrap::cli

#endif  // NVTRAP_TOOLS_APP_HPP
