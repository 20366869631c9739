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

#ifndef NLUFORGE_IO_H_
#define NLUFORGE_IO_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace nluforge {

// Whole-file read; throws a backend (IO) error when the file is unreadable.
std::string read_file(const std::string &path);

// Writes to "<path>.tmp.<pid>" and renames over `path`.
void write_file_atomic(const std::string &path, std::string_view contents);

bool file_exists(const std::string &path);

// FNV-1a 64-bit, hex encoded. Used for manifests and model references.
std::string checksum_hex(std::string_view bytes);
std::string file_checksum(const std::string &path);

}  // namespace nluforge

#endif  // NLUFORGE_IO_H_
