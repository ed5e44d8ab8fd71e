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

#ifndef NVTRAP_TRACE_IO_HPP
#define NVTRAP_TRACE_IO_HPP

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "nvtrap/brownian_sim.hpp"
#include "nvtrap/error.hpp"

// Trace files. CSV: header "t_s,x_m,segment_label", one row per sample,
// values printed with 17 significant digits so a round trip is exact.
// Binary (little-endian): "NVTR", u32 version, f64 dt, u32 segment count,
// per segment {u32 label length, label bytes, u64 begin, u64 end},
// u64 sample count, f64 samples.
namespace nvtrap::brownian {

static_assert(std::endian::native == std::endian::little,
              "binary trace format assumes a little-endian host");

inline void write_trace_csv(std::ostream& os, const SegmentedAcquisition& acq) {
  os << "t_s,x_m,segment_label\n";
  char buf[96];
  for (const Segment& seg : acq.segments) {
    for (std::size_t i = seg.begin; i < seg.end; ++i) {
      const int len = std::snprintf(buf, sizeof buf, "%.17g,%.17g,",
                                    acq.dt * static_cast<double>(i), acq.samples[i]);
      os.write(buf, len);
      os << seg.label << '\n';
    }
  }
  if (!os) throw IoError("write_trace_csv: stream write failed");
}

namespace internal {

inline double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError("trace CSV line " + std::to_string(line) + ": bad number '" +
                  std::string(s) + "'");
  }
  return v;
}

}  // namespace internal

/// Reads the CSV schema. Segments are the maximal runs of equal labels; the
/// sample spacing is taken from the time column and must be uniform.
inline SegmentedAcquisition read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("read_trace_csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_s,x_m,segment_label") {
    throw IoError("read_trace_csv: unexpected header '" + line + "'");
  }
  SegmentedAcquisition acq;
  std::vector<double> times;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw IoError("trace CSV line " + std::to_string(lineno) + ": expected 3 columns");
    }
    const std::string_view sv(line);
    times.push_back(internal::parse_double(sv.substr(0, c1), lineno));
    acq.samples.push_back(internal::parse_double(sv.substr(c1 + 1, c2 - c1 - 1), lineno));
    const std::string label(sv.substr(c2 + 1));
    const std::size_t idx = acq.samples.size() - 1;
    if (acq.segments.empty() || acq.segments.back().label != label) {
      acq.segments.push_back({label, idx, idx + 1});
    } else {
      acq.segments.back().end = idx + 1;
    }
  }
  if (acq.samples.size() < 2) throw IoError("read_trace_csv: fewer than 2 samples");
  acq.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(acq.dt > 0.0)) throw IoError("read_trace_csv: time column is not increasing");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - acq.dt) > 1e-6 * acq.dt + 1e-12 * std::abs(times[i])) {
      throw IoError("read_trace_csv: non-uniform sampling at row " + std::to_string(i + 1));
    }
  }
  return acq;
}

namespace internal {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw IoError("read_trace_binary: truncated input");
  }
  return v;
}

}  // namespace internal

inline constexpr std::uint32_t kTraceBinaryVersion = 1;

inline void write_trace_binary(std::ostream& os, const SegmentedAcquisition& acq) {
  os.write("NVTR", 4);
  internal::put<std::uint32_t>(os, kTraceBinaryVersion);
  internal::put<double>(os, acq.dt);
  internal::put<std::uint32_t>(os, static_cast<std::uint32_t>(acq.segments.size()));
  for (const Segment& s : acq.segments) {
    internal::put<std::uint32_t>(os, static_cast<std::uint32_t>(s.label.size()));
    os.write(s.label.data(), static_cast<std::streamsize>(s.label.size()));
    internal::put<std::uint64_t>(os, s.begin);
    internal::put<std::uint64_t>(os, s.end);
  }
  internal::put<std::uint64_t>(os, acq.samples.size());
  os.write(reinterpret_cast<const char*>(acq.samples.data()),
           static_cast<std::streamsize>(acq.samples.size() * sizeof(double)));
  if (!os) throw IoError("write_trace_binary: stream write failed");
}

inline SegmentedAcquisition read_trace_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != "NVTR") {
    throw IoError("read_trace_binary: bad magic");
  }
  if (internal::get<std::uint32_t>(is) != kTraceBinaryVersion) {
    throw IoError("read_trace_binary: unsupported version");
  }
  SegmentedAcquisition acq;
  acq.dt = internal::get<double>(is);
  const auto nseg = internal::get<std::uint32_t>(is);
  for (std::uint32_t k = 0; k < nseg; ++k) {
    Segment s;
    s.label.resize(internal::get<std::uint32_t>(is));
    if (!is.read(s.label.data(), static_cast<std::streamsize>(s.label.size()))) {
      throw IoError("read_trace_binary: truncated label");
    }
    s.begin = internal::get<std::uint64_t>(is);
    s.end = internal::get<std::uint64_t>(is);
    acq.segments.push_back(std::move(s));
  }
  const auto n = internal::get<std::uint64_t>(is);
  if (n > (std::uint64_t{1} << 34)) throw IoError("read_trace_binary: implausible length");
  acq.samples.resize(n);
  if (!is.read(reinterpret_cast<char*>(acq.samples.data()),
               static_cast<std::streamsize>(n * sizeof(double)))) {
    throw IoError("read_trace_binary: truncated samples");
  }
  std::size_t expect = 0;
  for (const Segment& s : acq.segments) {
    if (s.begin != expect || s.end < s.begin || s.end > n) {
      throw IoError("read_trace_binary: inconsistent segment table");
    }
    expect = s.end;
  }
  if (!(acq.dt > 0.0)) throw IoError("read_trace_binary: dt must be > 0");
  return acq;
}

/// Picks the format from the extension: ".bin" is binary, anything else CSV.
inline SegmentedAcquisition read_trace_file(const std::string& path) {
  const bool binary = path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
  std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
  if (!f) throw IoError("cannot open trace file '" + path + "'");
  return binary ? read_trace_binary(f) : read_trace_csv(f);
}

}  // namespace nvtrap::brownian

#endif  // NVTRAP_TRACE_IO_HPP
