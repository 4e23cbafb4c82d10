// include/longalign/textproc.h

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
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace longalign::textproc {

// UTF-8 helpers. Invalid bytes decode to U+FFFD, one per byte.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(char32_t cp);
std::string encode_utf8(std::u32string_view text);

bool is_cjk_ideograph(char32_t cp);
bool is_space(char32_t cp);

struct SpeakerTurn {
  std::string speaker_id;
  std::string text;
  int order = 0;
};

// Recognizes "NAME:" at the start of a line: 1..max_name_chars non-space
// codepoints followed by one of the colon forms. Plain-text stand-in for the
// bold speaker headers of the source documents.
struct MarkerRule {
  int max_name_chars = 12;
  std::vector<std::string> colons = {":", "\xef\xbc\x9a"};  // ":" and fullwidth "："
};

struct TurnExtraction {
  std::vector<SpeakerTurn> turns;
  int dropped_lines = 0;  // non-empty lines seen before the first marker
};

// Throws NoSpeakerMarkersError if the document has no marker line.
TurnExtraction extract_speaker_turns(std::string_view raw_text, const MarkerRule &rule = {});

struct Sentence {
  std::string sent_id;
  int turn_ref = -1;
  std::string speaker_id;
  std::string text;
  std::vector<std::string> tokens;
};

struct SplitOptions {
  std::set<char32_t> terminators = {U'。', U'！', U'？', U'；', U'.', U'!', U'?', U';'};
  // Closing quotes and brackets that stay with the sentence they close.
  std::set<char32_t> closers = {U'”', U'’', U'」', U'』', U'）', U'】', U'》', U'〉', U')', U']', U'"', U'\''};
};

// Splits at terminators (runs of terminators and trailing closers stay
// together). Sentence text is whitespace-trimmed; empty sentences are dropped.
// An ASCII '.' between two digits is not a terminator.
std::vector<Sentence> split_sentences(std::string_view text, const SplitOptions &opts = {});

// One token per CJK codepoint; maximal [A-Za-z0-9'-] runs form one token;
// whitespace is discarded; any other codepoint is a token of its own.
std::vector<std::string> tokenize(std::string_view text);

// True for tokens with no letter, digit or ideograph (punctuation, symbols).
bool is_punctuation(std::string_view token);

// Tokens that can be spoken: tokenize() minus punctuation.
std::vector<std::string> lexical_tokens(std::span<const std::string> tokens);

// One romanization per token (the first listed wins).
class PronLexicon {
 public:
  PronLexicon() = default;
  explicit PronLexicon(std::map<std::string, std::vector<std::string>> entries);

  // Returns false when the token was already present (first entry kept).
  bool add(const std::string &token, std::vector<std::string> syllables);
  const std::vector<std::string> *find(const std::string &token) const;
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, std::vector<std::string>> &entries() const { return entries_; }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

// TSV: token \t syllable1 syllable2 ...
PronLexicon read_lexicon(const std::filesystem::path &path);
void write_lexicon(const PronLexicon &lexicon, const std::filesystem::path &path);

struct Romanized {
  std::vector<std::string> tokens;
  int unmapped_count = 0;
};

Romanized romanize(std::span<const std::string> tokens, const PronLexicon &lexicon);

// Speaker turns -> sentences with ids "<doc_id>-<NNNNN>" in document order.
std::vector<Sentence> prepare_document(std::string_view raw_text, const std::string &doc_id,
                                       const MarkerRule &rule = {}, const SplitOptions &opts = {},
                                       int *dropped_lines = nullptr);

std::string make_sentence_id(const std::string &doc_id, int index);

// Sentence JSONL: {sent_id, speaker, turn, text, tokens}.
std::vector<Sentence> read_sentences(const std::filesystem::path &path);
void write_sentences(const std::vector<Sentence> &sentences, const std::filesystem::path &path);

}  // namespace longalign::textproc
