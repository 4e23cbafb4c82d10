// src/core/vocab.cc

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

#include "longalign/vocab.h"

#include <algorithm>
#include <fstream>
#include <map>

#include "longalign/errors.h"

namespace longalign {

Vocab::Vocab() : Vocab(std::vector<std::string>{std::string(kBlankToken), std::string(kUnkToken)}) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[0] != kBlankToken || tokens_[1] != kUnkToken) {
    throw FormatError("vocabulary must start with <blk> and <unk>");
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw FormatError("empty token at id " + std::to_string(i));
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw FormatError("duplicate token '" + tokens_[i] + "'");
    }
  }
}

int Vocab::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

std::vector<int> Vocab::lookup(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto &t : tokens) ids.push_back(lookup(t));
  return ids;
}

Vocab build_vocab(std::span<const std::vector<std::string>> corpus) {
  std::map<std::string, long> counts;
  for (const auto &seq : corpus) {
    for (const auto &tok : seq) {
      if (tok.empty() || tok == Vocab::kBlankToken || tok == Vocab::kUnkToken) continue;
      ++counts[tok];
    }
  }
  if (counts.empty()) throw EmptyCorpusError("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, long>> sorted(counts.begin(), counts.end());
  // std::map iteration is already lexicographic; stable sort keeps that order for ties.
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto &a, const auto &b) { return a.second > b.second; });

  std::vector<std::string> tokens{std::string(Vocab::kBlankToken), std::string(Vocab::kUnkToken)};
  for (auto &[tok, n] : sorted) tokens.push_back(tok);
  return Vocab(std::move(tokens));
}

Vocab read_vocab(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocab(std::move(tokens));
}

void write_vocab(const Vocab &vocab, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (const auto &t : vocab.tokens()) out << t << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace longalign
