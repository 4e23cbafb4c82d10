// src/core/embeddings.cc

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

#include "longalign/embeddings.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <regex>
#include <set>

#include "binary_io.h"
#include "longalign/errors.h"
#include "longalign/jsonl.h"

namespace longalign {

namespace {
constexpr char kMagic[] = "LEMB1";
}

EmbeddingSet::EmbeddingSet(int dim, std::vector<float> rows, std::vector<EmbeddingIndexEntry> index)
    : dim_(dim), data_(std::move(rows)), index_(std::move(index)) {
  if (dim < 1) throw FormatError("embedding dimension must be positive");
  if (data_.size() != index_.size() * static_cast<std::size_t>(dim)) {
    throw FormatError("embedding rows do not match index size");
  }
  for (std::size_t r = 0; r < index_.size(); ++r) {
    const auto &e = index_[r];
    if (e.merge_len < 1 || e.merge_start < 0) {
      throw FormatError("bad index entry at row " + std::to_string(r));
    }
    if (!lookup_.emplace(std::make_pair(e.merge_start, e.merge_len), static_cast<int>(r)).second) {
      throw FormatError("duplicate span in embedding index at row " + std::to_string(r));
    }
    if (e.merge_len == 1) ++num_sentences_;
  }
}

std::optional<int> EmbeddingSet::find(int start, int len) const {
  auto it = lookup_.find({start, len});
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingSet::validate(double tol) const {
  for (int r = 0; r < rows(); ++r) {
    double sq = 0.0;
    for (float x : row(r)) sq += static_cast<double>(x) * x;
    if (std::fabs(std::sqrt(sq) - 1.0) > tol) {
      throw FormatError("embedding row " + std::to_string(r) + " is not L2-normalized");
    }
  }
  for (int s = 0; s < num_sentences_; ++s) {
    if (!find(s, 1)) throw FormatError("embedding index misses sentence " + std::to_string(s));
  }
  for (const auto &e : index_) {
    if (e.merge_start + e.merge_len > num_sentences_) {
      throw FormatError("merged span past the last sentence: start " + std::to_string(e.merge_start));
    }
  }
}

bool EmbeddingSet::bit_equal(const EmbeddingSet &other) const {
  return dim_ == other.dim_ && index_ == other.index_ && data_.size() == other.data_.size() &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0;
}

std::filesystem::path embedding_sidecar_path(const std::filesystem::path &path) {
  return std::filesystem::path(path.string() + ".jsonl");
}

EmbeddingSet read_embeddings(const std::filesystem::path &path, bool validate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embeddings " + path.string());
  const std::string what = "embeddings " + path.string();
  if (internal::read_header_line(in, what) != kMagic) throw FormatError(what + ": bad magic");
  const std::string header = internal::read_header_line(in, what);
  static const std::regex kHeader(R"(N=(\d+) D=(\d+))");
  std::smatch m;
  if (!std::regex_match(header, m, kHeader)) throw FormatError(what + ": bad header '" + header + "'");
  const int n = std::stoi(m[1]);
  const int d = std::stoi(m[2]);
  auto values = internal::read_f32_le(in, static_cast<std::size_t>(n) * d, what);
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError(what + ": trailing bytes");

  const auto sidecar = embedding_sidecar_path(path);
  std::vector<EmbeddingIndexEntry> index;
  for (const auto &j : read_jsonl(sidecar)) {
    index.push_back({j.at("sent_id").get<std::string>(), j.at("merge_start").get<int>(),
                     j.at("merge_len").get<int>()});
  }
  if (static_cast<int>(index.size()) != n) {
    throw FormatError(what + ": sidecar has " + std::to_string(index.size()) + " rows, expected " +
                      std::to_string(n));
  }
  EmbeddingSet set(d, std::move(values), std::move(index));
  if (validate) set.validate();
  return set;
}

void write_embeddings(const EmbeddingSet &set, const std::filesystem::path &path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write embeddings " + path.string());
    out << kMagic << '\n' << "N=" << set.rows() << " D=" << set.dim() << '\n';
    internal::write_f32_le(out, set.data());
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
  }
  std::vector<Json> rows;
  rows.reserve(set.index().size());
  for (const auto &e : set.index()) {
    Json j;
    j["sent_id"] = e.sent_id;
    j["merge_start"] = e.merge_start;
    j["merge_len"] = e.merge_len;
    rows.push_back(std::move(j));
  }
  write_jsonl(rows, embedding_sidecar_path(path));
}

}  // namespace longalign
