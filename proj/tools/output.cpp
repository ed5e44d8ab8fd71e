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

#include "output.hpp"

#include <cmath>
#include <fstream>
#include <system_error>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <unistd.h>

#include "nvtrap/error.hpp"

namespace nvtrap::cli {

void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& body) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    try {
      body(out);
    } catch (...) {
      out.close();
      fs::remove(tmp, ec);
      throw;
    }
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw IoError("write to '" + tmp.string() + "' failed");
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  write_atomic(path, [&](std::ostream& os) { os.write(content.data(), content.size()); });
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

CsvWriter::CsvWriter(std::initializer_list<std::string_view> header) {
  for (auto h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::string_view(std::to_string(v))); }

CsvWriter& CsvWriter::cell(std::string_view v) {
  if (row_started_) text_ += ',';
  if (v.find_first_of(",\"\n") != std::string_view::npos) {
    text_ += '"';
    for (char ch : v) {
      if (ch == '"') text_ += '"';
      text_ += ch;
    }
    text_ += '"';
  } else {
    text_ += v;
  }
  row_started_ = true;
  return *this;
}

void CsvWriter::end_row() {
  text_ += '\n';
  row_started_ = false;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

}  // namespace nvtrap::cli
