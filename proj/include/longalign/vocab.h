// include/longalign/vocab.h

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
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace longalign {

// Token inventory shared by posteriors, language models and graphs.
// Id 0 is the CTC blank and id 1 the unknown token.
class Vocab {
 public:
  static constexpr int kBlank = 0;
  static constexpr int kUnk = 1;
  static constexpr std::string_view kBlankToken = "<blk>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocab();
  // tokens[0] and tokens[1] must be <blk> and <unk>; duplicates are rejected.
  explicit Vocab(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string &token(int id) const { return tokens_.at(id); }
  const std::vector<std::string> &tokens() const { return tokens_; }

  // Falls back to kUnk for unknown strings.
  int lookup(std::string_view token) const;
  bool contains(std::string_view token) const;
  std::vector<int> lookup(std::span<const std::string> tokens) const;

  bool operator==(const Vocab &other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Builds a vocabulary ordered by descending frequency, ties broken by byte
// order of the token string. Reserved tokens in the corpus are not counted.
Vocab build_vocab(std::span<const std::vector<std::string>> corpus);

Vocab read_vocab(const std::filesystem::path &path);
void write_vocab(const Vocab &vocab, const std::filesystem::path &path);

}  // namespace longalign
