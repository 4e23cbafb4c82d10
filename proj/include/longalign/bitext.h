// include/longalign/bitext.h

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

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "longalign/embeddings.h"

namespace longalign::bitext {

inline constexpr double kDefaultFilterThreshold = 0.627;

struct Span {
  int start = 0;
  int len = 0;
  bool operator==(const Span &) const = default;
};

struct AlignmentPair {
  Span src;
  Span tgt;
  double cost = 0.0;  // lower is better
  bool operator==(const AlignmentPair &) const = default;
};

struct AlignParams {
  int max_merge = 4;
  int window = 10;
  int base_size = 128;
  double penalty_ins = 0.5;  // target sentence with no source
  double penalty_del = 0.5;  // source sentence with no target
  // Added per sentence beyond the first on either side of a merged pair.
  double penalty_merge = 0.25;
  // Build missing merged-span embeddings as the normalized mean of their rows.
  bool fallback_merge = true;
  std::uint64_t seed = 0;
  int baseline_samples = 500;
};

// Looks up or builds span embeddings and prices alignment pairs.
class PairScorer {
 public:
  PairScorer(const EmbeddingSet &src, const EmbeddingSet &tgt, const AlignParams &params);

  int n_src() const { return src_.num_sentences(); }
  int n_tgt() const { return tgt_.num_sentences(); }
  double baseline() const { return baseline_; }

  // Cost of aligning src[i, i+a) with tgt[j, j+b); a or b may be zero.
  double cost(int i, int a, int j, int b) const;

  // 1 - cos of the two span embeddings.
  double distance(int i, int a, int j, int b) const;

 private:
  std::vector<float> span_vector(const EmbeddingSet &set, int start, int len) const;

  const EmbeddingSet &src_;
  const EmbeddingSet &tgt_;
  AlignParams params_;
  double baseline_ = 1.0;
};

// Mean of (1 - cos) over min(samples, n_src * n_tgt) seeded random single
// sentence pairs.
double random_pair_baseline(const EmbeddingSet &src, const EmbeddingSet &tgt, std::uint64_t seed, int samples = 500);

// Allowed (a, b) step shapes: 1-0, 0-1, 1-1, then 1-k and k-1 for
// 2 <= k <= max_merge.
std::vector<std::pair<int, int>> pair_types(int max_merge);

struct Alignment {
  std::vector<AlignmentPair> pairs;
  double total_cost = 0.0;
};

// Monotone segmentation minimizing total pair cost. Documents longer than
// base_size are halved recursively; the coarsest level is solved in full and
// each finer level is searched within `window` cells of the projected path.
// Throws DimError on mismatched dimensions and MissingEmbeddingError when a
// merged span is absent and fallback_merge is off.
Alignment align_sentences(const EmbeddingSet &src, const EmbeddingSet &tgt, const AlignParams &params = {});

// Full DP over an explicit per-row band [lo, hi] of target positions.
Alignment band_dp(const PairScorer &scorer, int max_merge, const std::vector<std::pair<int, int>> &band);

struct FilterResult {
  std::vector<AlignmentPair> kept;
  std::vector<AlignmentPair> dropped;
};

// kept: cost <= threshold.
FilterResult filter_alignments(std::span<const AlignmentPair> pairs, double threshold = kDefaultFilterThreshold);

}  // namespace longalign::bitext
