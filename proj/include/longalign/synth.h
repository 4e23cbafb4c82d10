// include/longalign/synth.h

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
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "longalign/decode.h"
#include "longalign/embeddings.h"
#include "longalign/jsonl.h"
#include "longalign/manifest.h"
#include "longalign/posteriors.h"
#include "longalign/vocab.h"

namespace longalign::synth {

struct NoiseParams {
  double p_sub = 0.0;       // per token, written form differs from the spoken one
  double p_reorder = 0.0;   // per position, swap with one of the next two tokens
  double p_unspoken = 0.0;  // per sentence, transcript-only
  double p_acoustic = 0.0;  // posterior mass spread off the gold symbol
  int dur_min = 2;          // frames per token
  int dur_max = 5;
};

void validate(const NoiseParams &p);

struct MeetingSize {
  int n_speakers = 2;
  int n_sentences = 10;
  int vocab_size = 100;
  int min_sentence_len = 5;
  int max_sentence_len = 12;
};

struct Edit {
  enum class Kind { kSub, kReorder } kind = Kind::kSub;
  int pos = 0;
  int other = 0;    // kSub: spoken token; kReorder: swapped position
  int written = 0;  // kSub only
  bool operator==(const Edit &) const = default;
};

struct SynthSentence {
  std::string speaker;
  std::vector<int> spoken;   // vocab ids
  std::vector<int> written;  // transcript form
  std::vector<Edit> edits;   // in the order applied to the spoken form
  bool unspoken = false;
  int start_frame = -1;  // [start, end) of the spoken tokens
  int end_frame = -1;
};

// Undoes the edits of a sentence; equals s.spoken for every generated one.
std::vector<int> reconstruct_spoken(const SynthSentence &s);

struct Meeting {
  std::vector<SynthSentence> sentences;
  PosteriorMatrix post;
  std::vector<int> frame_symbols;  // gold symbol per frame, 0 for blank
};

inline constexpr int kHopMs = 40;
inline constexpr int kFirstTokenId = 2;  // after <blk> and <unk>

// Long pauses (>= 30 blank frames) between sentences occur with p_pause.
Meeting gen_meeting(const NoiseParams &params, const MeetingSize &size, std::uint64_t seed,
                    std::vector<std::string> speakers = {}, double p_pause = 0.1);

// <blk>, <unk>, then one CJK ideograph per token id.
Vocab synth_vocab(int vocab_size);

struct GoldSentence {
  std::string sent_id;
  bool unspoken = false;
  int start_frame = -1;
  int end_frame = -1;
  bool operator==(const GoldSentence &) const = default;
};

struct Gold {
  int hop_ms = kHopMs;
  std::vector<GoldSentence> sentences;
};

Gold gold_of(const Meeting &m, const std::string &doc_id);
Json to_json(const Gold &g);
Gold gold_from_json(const nlohmann::json &j);

struct Scores {
  double boundary_accuracy = 0.0;  // over gold spoken sentences
  double skip_precision = 0.0;
  double skip_recall = 0.0;
  int spoken = 0;
  int predicted_skips = 0;
  int unspoken = 0;
};

// boundary_accuracy@k counts gold-spoken sentences predicted aligned with
// both endpoints within k frames. Empty denominators score 1.
Scores score_alignment(const decode::FlexAlignment &pred, const Gold &gold, int k_frames);

struct BundleConfig {
  int n_docs = 2;
  int n_speakers_total = 6;
  int speakers_per_doc = 2;
  MeetingSize size;
  NoiseParams noise;
  double p_pause = 0.1;
  int emb_dim = 32;
  double emb_noise = 0.25;
  int max_merge = 4;
};

BundleConfig bundle_config_from_json(const nlohmann::json &j);
Json to_json(const BundleConfig &c);

std::string doc_name(int index);
std::string speaker_name(int index);

// Writes transcripts, translations, embeddings, posteriors, gold and
// provenance per document plus vocab, lexicon and speaker metadata.
void write_bundle(const BundleConfig &config, std::uint64_t seed, const std::filesystem::path &dir,
                  int jobs = 1);

// Row-level metadata for split planning: docs draw their speakers from pairs
// of one male and one female speaker.
std::vector<UtteranceManifestRow> synthetic_manifest(int n_docs, int n_speakers, std::uint64_t seed);

}  // namespace longalign::synth
