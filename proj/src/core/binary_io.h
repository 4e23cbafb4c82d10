// src/core/binary_io.h

// Copyright 2026  The longalign Authors

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

#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "longalign/errors.h"

namespace longalign::internal {

inline void write_f32_le(std::ostream &out, const std::vector<float> &values) {
  std::string buf;
  buf.resize(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    buf[4 * i + 0] = static_cast<char>(bits & 0xff);
    buf[4 * i + 1] = static_cast<char>((bits >> 8) & 0xff);
    buf[4 * i + 2] = static_cast<char>((bits >> 16) & 0xff);
    buf[4 * i + 3] = static_cast<char>((bits >> 24) & 0xff);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline std::vector<float> read_f32_le(std::istream &in, std::size_t count, const std::string &what) {
  std::string buf(count * 4, '\0');
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    throw FormatError(what + ": truncated payload");
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto b = [&](int k) { return static_cast<std::uint32_t>(static_cast<unsigned char>(buf[4 * i + k])); };
    values[i] = std::bit_cast<float>(b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24));
  }
  return values;
}

// Reads one '\n'-terminated header line.
inline std::string read_header_line(std::istream &in, const std::string &what) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(what + ": missing header");
  return line;
}

}  // namespace longalign::internal
