// include/longalign/embeddings.h

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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace longalign {

struct EmbeddingIndexEntry {
  std::string sent_id;
  int merge_start = 0;
  int merge_len = 1;
  bool operator==(const EmbeddingIndexEntry &) const = default;
};

// Sentence embeddings for single sentences and merged spans.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  EmbeddingSet(int dim, std::vector<float> rows, std::vector<EmbeddingIndexEntry> index);

  int dim() const { return dim_; }
  int rows() const { return static_cast<int>(index_.size()); }
  // Number of single sentences (entries with merge_len == 1).
  int num_sentences() const { return num_sentences_; }
  std::span<const float> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * dim_, static_cast<std::size_t>(dim_)};
  }
  const std::vector<float> &data() const { return data_; }
  const std::vector<EmbeddingIndexEntry> &index() const { return index_; }

  // Row holding the span (start, len), if present.
  std::optional<int> find(int start, int len) const;

  // Throws FormatError if a row is not unit length within tol or the singles
  // do not cover 0..n-1.
  void validate(double tol = 1e-4) const;

  bool bit_equal(const EmbeddingSet &other) const;

 private:
  int dim_ = 0;
  int num_sentences_ = 0;
  std::vector<float> data_;
  std::vector<EmbeddingIndexEntry> index_;
  std::map<std::pair<int, int>, int> lookup_;
};

// Sidecar path used when none is given: "<path>.jsonl".
std::filesystem::path embedding_sidecar_path(const std::filesystem::path &path);

// LEMB1 binary format plus JSONL sidecar index.
EmbeddingSet read_embeddings(const std::filesystem::path &path, bool validate = true);
void write_embeddings(const EmbeddingSet &set, const std::filesystem::path &path);

}  // namespace longalign
