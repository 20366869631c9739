// Copyright 2026 The nlu-forge Authors.
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

#ifndef NLUFORGE_TOOLS_CLI_H_
#define NLUFORGE_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace nluforge::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kData = 2;
inline constexpr int kBackend = 3;

// Runs `nlu-forge <args...>` (args excludes the program name). Errors are
// reported on `err` as a single line "error[usage|data|io]: message".
int run_cli(const std::vector<std::string> &args, std::istream &in, std::ostream &out,
            std::ostream &err);

}  // namespace nluforge::cli

#endif  // NLUFORGE_TOOLS_CLI_H_
