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

#ifndef NVTRAP_TOOLS_OUTPUT_HPP
#define NVTRAP_TOOLS_OUTPUT_HPP

#include <filesystem>
#include <functional>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace nvtrap::cli {

/// Writes through a sibling temporary file and renames it into place.
/// Failures raise IoError and leave no partial file behind.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& body);
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest round-trip decimal form; "nan", "inf", "-inf" otherwise.
std::string format_double(double v);

/// Comma-separated text with a header row and LF line endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string_view> header);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(std::string_view v);
  void end_row();
  const std::string& str() const { return text_; }

 private:
  std::string text_;
  bool row_started_ = false;
};

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace nvtrap::cli

#endif  // NVTRAP_TOOLS_OUTPUT_HPP
