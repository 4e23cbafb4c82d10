// include/longalign/decode.h

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

#include "longalign/fsa.h"
#include "longalign/posteriors.h"

namespace longalign::decode {

struct DecodeResult {
  std::vector<int> labels;
  std::vector<std::pair<int, int>> spans;  // [start_frame, end_frame) per label
  std::vector<int> arcs;                   // graph arc consumed by each label
  double total_logprob = 0.0;              // emissions + graph weights
};

// Best path of the CTC topology composed with graph. Blank may be emitted
// anywhere, a label may repeat on consecutive frames, and two equal labels in a
// row need a blank between them. Epsilon arcs are taken freely before each
// label and before finishing; kBackoff arcs are followed only for labels with
// no explicit arc at the current state. Exact when beam is unset, otherwise
// hypotheses more than beam below the frame best are dropped. Throws
// NoPathError when the graph cannot account for the frames.
DecodeResult viterbi_align(const PosteriorMatrix &post, const Fsa &graph, std::optional<double> beam = {});

// Best weight of a path through graph accepting labels exactly, with the same
// epsilon / backoff semantics as viterbi_align; -inf if none.
double best_path_score(const Fsa &graph, std::span<const int> labels);

// Per-frame labels of a decode: the label inside its spans, blank elsewhere.
std::vector<int> frame_labels(const DecodeResult &result, int frames);

struct GraphEdges {
  // Epsilon arcs from the start state to every state, so decoding may begin
  // mid-transcript.
  bool free_entry = false;
  // Every state final, so decoding may stop mid-transcript.
  bool free_exit = false;
};

struct FlexGraph {
  Fsa fsa;
  std::vector<int> arc_sentence;    // sentence of each arc, -1 for entry arcs
  std::vector<int> arc_position;    // token position, -1 for skip and entry arcs
  std::vector<int> sentence_start;  // first state of each sentence
};

// Linear chain over the sentences' tokens with one epsilon skip arc per
// sentence, from its first state to its last, carrying skip_weight. Without
// free edges: 1 + sum(L) states and sum(L) + N arcs.
// Throws EmptyInputError on an empty list or an empty sentence.
FlexGraph build_flexible_graph(std::span<const std::vector<int>> sentences, double skip_weight,
                               GraphEdges edges = {});

// Linear chain over the concatenated tokens with an epsilon arc from the start
// state to every other state and every state final.
Fsa build_factor_transducer(std::span<const std::vector<int>> sentences, double entry_weight = 0.0);

enum class SentenceStatus { kAligned, kSkipped };

struct SentenceAlignment {
  SentenceStatus status = SentenceStatus::kSkipped;
  int start_frame = -1;
  int end_frame = -1;
  double conf = 0.0;  // geometric-mean per-frame path probability inside the span
  int window = -1;    // window that supplied the span
  bool operator==(const SentenceAlignment &) const = default;
};

struct FlexAlignment {
  std::vector<SentenceAlignment> sentences;
};

// Single decode of post against the flexible graph of all sentences. Empty
// sentences are reported skipped. Sentences only partly covered (possible
// with free edges) are reported skipped. Spans are offset by frame_offset.
FlexAlignment flexible_align(const PosteriorMatrix &post, std::span<const std::vector<int>> sentences,
                             double skip_weight, GraphEdges edges = {}, int frame_offset = 0,
                             std::optional<double> beam = {});

struct WindowOptions {
  int len_frames = 1500;
  int overlap_frames = 500;
  int jobs = 1;
  std::optional<double> beam;
  // A window with no path at all is decoded again with log-posteriors
  // clamped from below at this value. Unset disables the retry.
  std::optional<float> emission_floor;
};

// Frame windows [start, end) covering [0, frames) with the given overlap.
std::vector<std::pair<int, int>> make_windows(int frames, int len_frames, int overlap_frames);

// Sliding-window flexible alignment. Each window decodes the sentences whose
// candidate frame range intersects it (all sentences when candidates is
// empty); interior window edges are free, edges at the ends of the audio are
// not. A sentence takes its span from the window in which the span midpoint
// lies farthest from the window edges (earlier window on ties); sentences
// aligned in no window are skipped. Windows that fail to decode contribute
// nothing. Output is independent of jobs.
FlexAlignment flex_align_window(const PosteriorMatrix &post, std::span<const std::vector<int>> sentences,
                                double skip_weight, const WindowOptions &window,
                                std::span<const std::pair<int, int>> candidates = {},
                                int *failed_windows = nullptr);

}  // namespace longalign::decode
