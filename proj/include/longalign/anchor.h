// include/longalign/anchor.h

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

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "longalign/lm.h"
#include "longalign/posteriors.h"

namespace longalign::anchor {

enum class EditKind { kMatch, kSub, kIns, kDel };

// kIns consumes a hypothesis token only, kDel a reference token only.
struct EditOp {
  EditKind kind = EditKind::kMatch;
  int hyp = -1;
  int ref = -1;
  bool operator==(const EditOp &) const = default;
};

struct EditCosts {
  double sub = 1.0;
  double ins = 1.0;
  double del = 1.0;
};

// Minimal-cost global alignment. Among equal costs the one with the fewest
// runs of errors wins, so a transcript-only stretch stays one block of
// deletions instead of lending stray matches to its neighbours. With
// ref_sentence (sentence index per reference token) deletion runs that start
// and end on sentence boundaries win next. Remaining ties prefer match, then
// sub, del, ins, looking from the end.
std::vector<EditOp> align_text(std::span<const int> hyp, std::span<const int> ref, const EditCosts &costs = {},
                               std::span<const int> ref_sentence = {});

double edit_cost(std::span<const EditOp> ops, const EditCosts &costs = {});

inline bool is_error(const EditOp &op) { return op.kind != EditKind::kMatch; }

struct AnchorCriteria {
  double max_cer = 0.2;
  int max_consec = 4;
  int max_abs = 8;
  int min_len = 6;
};

struct RegionStats {
  double cer = 0.0;  // errors over reference tokens
  int max_consecutive_errors = 0;
  int abs_errors = 0;
  int hyp_tokens = 0;
  int ref_tokens = 0;
};

RegionStats region_stats(std::span<const EditOp> ops, int begin, int end);

// An op region qualifies when it is long enough, starts and ends on a match
// and its stats are within every limit.
bool qualifies(std::span<const EditOp> ops, int begin, int end, const AnchorCriteria &criteria);

struct Anchor {
  int op_begin = 0;
  int op_end = 0;
  std::pair<int, int> hyp_span;  // [first, last) hypothesis tokens
  std::pair<int, int> ref_span;  // [first, last) reference tokens
  RegionStats stats;
};

// Scans left to right and takes the longest qualifying region starting at
// each position, then resumes after it.
std::vector<Anchor> find_anchors(std::span<const EditOp> ops, const AnchorCriteria &criteria = {});

struct RegionPair {
  int audio_start = 0;  // frames, [start, end)
  int audio_end = 0;
  int sent_begin = 0;  // sentences, [begin, end)
  int sent_end = 0;
  bool operator==(const RegionPair &) const = default;
};

// hyp_frames holds the [start, end) frames of each hypothesis token;
// ref_sentence maps each reference token to its sentence. The widened
// reference span is snapped out to whole sentences and timed through the
// hypothesis tokens aligned to it. Overlapping regions are merged.
std::vector<RegionPair> map_anchors_to_audio(std::span<const Anchor> anchors, std::span<const EditOp> ops,
                                             std::span<const std::pair<int, int>> hyp_frames,
                                             std::span<const int> ref_sentence, int expand_tokens = 2);

// Frame range each sentence may occupy: its region's audio, or for sentences
// between regions the audio gap, padded by pad frames.
std::vector<std::pair<int, int>> candidate_ranges(std::span<const RegionPair> regions, int num_sentences,
                                                  int frames, int pad = 1);

struct FirstPassOptions {
  AnchorCriteria criteria;
  int expand_tokens = 2;
  std::optional<double> beam = 20.0;
  int jobs = 1;
};

struct FirstPassResult {
  std::vector<int> hyp;
  std::vector<std::pair<int, int>> hyp_frames;  // global frames
  std::vector<EditOp> ops;
  std::vector<Anchor> anchors;
  std::vector<RegionPair> regions;
  int skipped_segments = 0;
};

// Decodes every segment of post against the LM, concatenates the results
// and anchors them to the document's sentences.
FirstPassResult first_pass(const PosteriorMatrix &post, std::span<const std::pair<int, int>> segments,
                           std::span<const std::vector<int>> sentences, const lm::NgramLM &lm,
                           const FirstPassOptions &opts = {});

}  // namespace longalign::anchor
