// include/longalign/posteriors.h

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

#include <filesystem>
#include <span>
#include <vector>

namespace longalign {

// Frame-synchronous natural-log token posteriors, T rows of V entries.
class PosteriorMatrix {
 public:
  PosteriorMatrix() = default;
  PosteriorMatrix(int frames, int vocab_size, int hop_ms);
  PosteriorMatrix(int frames, int vocab_size, int hop_ms, std::vector<float> logp);

  int frames() const { return frames_; }
  int vocab_size() const { return vocab_size_; }
  int hop_ms() const { return hop_ms_; }

  float operator()(int t, int v) const { return data_[static_cast<std::size_t>(t) * vocab_size_ + v]; }
  float &operator()(int t, int v) { return data_[static_cast<std::size_t>(t) * vocab_size_ + v]; }
  std::span<const float> row(int t) const {
    return {data_.data() + static_cast<std::size_t>(t) * vocab_size_, static_cast<std::size_t>(vocab_size_)};
  }
  const std::vector<float> &data() const { return data_; }

  // Rows [begin, end) as a new matrix with the same hop.
  PosteriorMatrix slice(int begin, int end) const;

  // Copy with every entry raised to at least floor. Real posteriors are
  // never exactly zero; one-hot input otherwise leaves no path through a
  // single mistranscribed token.
  PosteriorMatrix floored(float floor) const;

  // Throws NormalizationError for the first row whose logsumexp strays more
  // than tol from zero.
  void check_normalized(double tol = 1e-3) const;

  // Bitwise equality (NaN payloads and -0.0 included).
  bool bit_equal(const PosteriorMatrix &other) const;

 private:
  int frames_ = 0;
  int vocab_size_ = 0;
  int hop_ms_ = 0;
  std::vector<float> data_;
};

double logsumexp(std::span<const float> row);

// LPOST1 binary format: magic line, "V=.. T=.. HOP_MS=.." line, float32 LE.
PosteriorMatrix read_posteriors(const std::filesystem::path &path, bool validate = true);
void write_posteriors(const PosteriorMatrix &m, const std::filesystem::path &path);

}  // namespace longalign
