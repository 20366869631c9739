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

#ifndef NLUFORGE_ERROR_H_
#define NLUFORGE_ERROR_H_

#include <stdexcept>
#include <string>

namespace nluforge {

// Error categories map onto the CLI exit codes (1, 2, 3).
enum class ErrorKind { kUsage, kData, kBackend };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error UsageError(const std::string &what) {
  return Error(ErrorKind::kUsage, what);
}
inline Error DataError(const std::string &what) {
  return Error(ErrorKind::kData, what);
}
inline Error BackendError(const std::string &what) {
  return Error(ErrorKind::kBackend, what);
}

// Warnings go to stderr unless a sink is installed (tests capture them).
using WarningSink = void (*)(const std::string &);
void set_warning_sink(WarningSink sink);
void warn(const std::string &message);

}  // namespace nluforge

#endif  // NLUFORGE_ERROR_H_
