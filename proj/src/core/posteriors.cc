// src/core/posteriors.cc

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

#include "longalign/posteriors.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <regex>

#include "binary_io.h"
#include "longalign/errors.h"

namespace longalign {

namespace {
constexpr char kMagic[] = "LPOST1";
}

PosteriorMatrix::PosteriorMatrix(int frames, int vocab_size, int hop_ms)
    : PosteriorMatrix(frames, vocab_size, hop_ms,
                      std::vector<float>(static_cast<std::size_t>(frames) * vocab_size,
                                         -std::numeric_limits<float>::infinity())) {}

PosteriorMatrix::PosteriorMatrix(int frames, int vocab_size, int hop_ms, std::vector<float> logp)
    : frames_(frames), vocab_size_(vocab_size), hop_ms_(hop_ms), data_(std::move(logp)) {
  if (frames < 1) throw FormatError("posterior matrix needs at least one frame");
  if (vocab_size < 1) throw FormatError("posterior matrix needs a non-empty vocabulary");
  if (hop_ms < 1) throw FormatError("frame hop must be positive");
  if (data_.size() != static_cast<std::size_t>(frames) * vocab_size) {
    throw FormatError("posterior payload size does not match T x V");
  }
}

PosteriorMatrix PosteriorMatrix::slice(int begin, int end) const {
  begin = std::clamp(begin, 0, frames_);
  end = std::clamp(end, begin, frames_);
  std::vector<float> sub(data_.begin() + static_cast<std::ptrdiff_t>(begin) * vocab_size_,
                         data_.begin() + static_cast<std::ptrdiff_t>(end) * vocab_size_);
  return PosteriorMatrix(end - begin, vocab_size_, hop_ms_, std::move(sub));
}

PosteriorMatrix PosteriorMatrix::floored(float floor) const {
  std::vector<float> out(data_);
  for (float &x : out) x = std::max(x, floor);
  return PosteriorMatrix(frames_, vocab_size_, hop_ms_, std::move(out));
}

double logsumexp(std::span<const float> row) {
  float mx = -std::numeric_limits<float>::infinity();
  for (float v : row) mx = std::max(mx, v);
  if (std::isinf(mx)) return mx;
  double acc = 0.0;
  for (float v : row) acc += std::exp(static_cast<double>(v) - mx);
  return mx + std::log(acc);
}

void PosteriorMatrix::check_normalized(double tol) const {
  for (int t = 0; t < frames_; ++t) {
    const double s = logsumexp(row(t));
    if (!(std::fabs(s) <= tol)) throw NormalizationError(static_cast<std::size_t>(t), s);
  }
}

bool PosteriorMatrix::bit_equal(const PosteriorMatrix &other) const {
  return frames_ == other.frames_ && vocab_size_ == other.vocab_size_ && hop_ms_ == other.hop_ms_ &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0;
}

PosteriorMatrix read_posteriors(const std::filesystem::path &path, bool validate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open posteriors " + path.string());
  const std::string what = "posteriors " + path.string();
  if (internal::read_header_line(in, what) != kMagic) throw FormatError(what + ": bad magic");
  const std::string header = internal::read_header_line(in, what);
  static const std::regex kHeader(R"(V=(\d+) T=(\d+) HOP_MS=(\d+))");
  std::smatch m;
  if (!std::regex_match(header, m, kHeader)) throw FormatError(what + ": bad header '" + header + "'");
  const int v = std::stoi(m[1]);
  const int t = std::stoi(m[2]);
  const int hop = std::stoi(m[3]);
  auto values = internal::read_f32_le(in, static_cast<std::size_t>(t) * v, what);
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(what + ": trailing bytes");
  PosteriorMatrix mat(t, v, hop, std::move(values));
  if (validate) mat.check_normalized();
  return mat;
}

void write_posteriors(const PosteriorMatrix &m, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write posteriors " + path.string());
  out << kMagic << '\n'
      << "V=" << m.vocab_size() << " T=" << m.frames() << " HOP_MS=" << m.hop_ms() << '\n';
  internal::write_f32_le(out, m.data());
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace longalign
