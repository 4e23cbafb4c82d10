// src/bitext/bitext.cc

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

#include "longalign/bitext.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "longalign/errors.h"
#include "longalign/rng.h"

namespace longalign::bitext {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<double>(a[k]) * b[k];
  return s;
}

void normalize(std::vector<float> &v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  const double n = std::sqrt(sq);
  if (n > 0.0) {
    for (float &x : v) x = static_cast<float>(x / n);
  }
}

// Pairs adjacent sentences into one normalized row each.
EmbeddingSet downsample(const EmbeddingSet &set) {
  const int n = set.num_sentences();
  const int d = set.dim();
  const int coarse = (n + 1) / 2;
  std::vector<float> rows;
  rows.reserve(static_cast<std::size_t>(coarse) * d);
  std::vector<EmbeddingIndexEntry> index;
  for (int k = 0; k < coarse; ++k) {
    std::vector<float> v(d, 0.0f);
    for (int s = 2 * k; s < std::min(n, 2 * k + 2); ++s) {
      const auto r = set.row(*set.find(s, 1));
      for (int x = 0; x < d; ++x) v[x] += r[x];
    }
    normalize(v);
    rows.insert(rows.end(), v.begin(), v.end());
    index.push_back({std::to_string(k), k, 1});
  }
  return EmbeddingSet(d, std::move(rows), std::move(index));
}

}  // namespace

double random_pair_baseline(const EmbeddingSet &src, const EmbeddingSet &tgt, std::uint64_t seed, int samples) {
  const long n = src.num_sentences();
  const long m = tgt.num_sentences();
  const long count = std::min<long>(samples, n * m);
  if (count <= 0) return 1.0;
  Rng rng(seed);
  double total = 0.0;
  for (long k = 0; k < count; ++k) {
    const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
    total += 1.0 - dot(src.row(*src.find(i, 1)), tgt.row(*tgt.find(j, 1)));
  }
  return total / static_cast<double>(count);
}

std::vector<std::pair<int, int>> pair_types(int max_merge) {
  std::vector<std::pair<int, int>> types{{1, 1}, {1, 0}, {0, 1}};
  for (int k = 2; k <= max_merge; ++k) {
    types.push_back({1, k});
    types.push_back({k, 1});
  }
  return types;
}

PairScorer::PairScorer(const EmbeddingSet &src, const EmbeddingSet &tgt, const AlignParams &params)
    : src_(src), tgt_(tgt), params_(params) {
  if (src.dim() != tgt.dim()) {
    throw DimError("embedding dimensions differ: " + std::to_string(src.dim()) + " vs " + std::to_string(tgt.dim()));
  }
  if (src.num_sentences() == 0 || tgt.num_sentences() == 0) throw EmptyInputError("bitext side without sentences");
  if (params.max_merge < 1) throw ConfigError("max_merge must be >= 1");
  baseline_ = std::max(1e-6, random_pair_baseline(src, tgt, params.seed, params.baseline_samples));
}

std::vector<float> PairScorer::span_vector(const EmbeddingSet &set, int start, int len) const {
  if (auto r = set.find(start, len)) {
    const auto row = set.row(*r);
    return std::vector<float>(row.begin(), row.end());
  }
  if (!params_.fallback_merge) {
    throw MissingEmbeddingError("no embedding for span (" + std::to_string(start) + ", " + std::to_string(len) + ")");
  }
  std::vector<float> v(set.dim(), 0.0f);
  for (int s = start; s < start + len; ++s) {
    const auto row = set.row(*set.find(s, 1));
    for (int x = 0; x < set.dim(); ++x) v[x] += row[x];
  }
  normalize(v);
  return v;
}

double PairScorer::distance(int i, int a, int j, int b) const {
  if (a == 1 && b == 1) return 1.0 - dot(src_.row(*src_.find(i, 1)), tgt_.row(*tgt_.find(j, 1)));
  const auto u = span_vector(src_, i, a);
  const auto v = span_vector(tgt_, j, b);
  return 1.0 - dot(u, v);
}

double PairScorer::cost(int i, int a, int j, int b) const {
  if (a == 0) return params_.penalty_ins;
  if (b == 0) return params_.penalty_del;
  return distance(i, a, j, b) / baseline_ + params_.penalty_merge * (a + b - 2);
}

Alignment band_dp(const PairScorer &scorer, int max_merge, const std::vector<std::pair<int, int>> &band) {
  const int n = scorer.n_src();
  const int m = scorer.n_tgt();
  const auto types = pair_types(max_merge);
  std::vector<std::vector<double>> dp(n + 1);
  std::vector<std::vector<int>> choice(n + 1);
  auto in_band = [&](int i, int j) { return i >= 0 && j >= band[i].first && j <= band[i].second; };
  for (int i = 0; i <= n; ++i) {
    const int width = band[i].second - band[i].first + 1;
    dp[i].assign(std::max(width, 0), kInf);
    choice[i].assign(std::max(width, 0), -1);
  }
  if (!in_band(0, 0) || !in_band(n, m)) throw ConfigError("alignment band must contain both corners");
  dp[0][0 - band[0].first] = 0.0;
  for (int i = 0; i <= n; ++i) {
    for (int j = band[i].first; j <= band[i].second; ++j) {
      if (i == 0 && j == 0) continue;
      double best = kInf;
      int arg = -1;
      for (int t = 0; t < static_cast<int>(types.size()); ++t) {
        const auto [a, b] = types[t];
        const int pi = i - a, pj = j - b;
        if (pi < 0 || pj < 0 || !in_band(pi, pj)) continue;
        const double prev = dp[pi][pj - band[pi].first];
        if (prev == kInf) continue;
        const double c = prev + scorer.cost(pi, a, pj, b);
        if (c < best) {
          best = c;
          arg = t;
        }
      }
      dp[i][j - band[i].first] = best;
      choice[i][j - band[i].first] = arg;
    }
  }
  Alignment out;
  out.total_cost = dp[n][m - band[n].first];
  if (out.total_cost == kInf) throw ConfigError("alignment band admits no path");
  for (int i = n, j = m; i > 0 || j > 0;) {
    const auto [a, b] = types[choice[i][j - band[i].first]];
    out.pairs.push_back({{i - a, a}, {j - b, b}, scorer.cost(i - a, a, j - b, b)});
    i -= a;
    j -= b;
  }
  std::reverse(out.pairs.begin(), out.pairs.end());
  return out;
}

namespace {

Alignment align_level(const EmbeddingSet &src, const EmbeddingSet &tgt, const AlignParams &params) {
  const PairScorer scorer(src, tgt, params);
  const int n = scorer.n_src();
  const int m = scorer.n_tgt();
  if (std::max(n, m) <= std::max(params.base_size, 2)) {
    return band_dp(scorer, params.max_merge, std::vector<std::pair<int, int>>(n + 1, {0, m}));
  }

  AlignParams coarse_params = params;
  coarse_params.fallback_merge = true;
  const EmbeddingSet coarse_src = downsample(src);
  const EmbeddingSet coarse_tgt = downsample(tgt);
  const Alignment coarse = align_level(coarse_src, coarse_tgt, coarse_params);

  // Project every lattice point covered by the coarse path, then widen.
  const int w = std::max(params.window, 0);
  std::vector<std::pair<int, int>> band(n + 1, {m + 1, -1});
  auto cover = [&](int r, int c) {
    r = std::clamp(r, 0, n);
    c = std::clamp(c, 0, m);
    for (int rr = std::max(0, r - w); rr <= std::min(n, r + w); ++rr) {
      band[rr].first = std::min(band[rr].first, std::max(0, c - w));
      band[rr].second = std::max(band[rr].second, std::min(m, c + w));
    }
  };
  cover(0, 0);
  cover(n, m);
  int ci = 0, cj = 0;
  for (const auto &p : coarse.pairs) {
    const int ni = ci + p.src.len, nj = cj + p.tgt.len;
    for (int r = 2 * ci; r <= 2 * ni; ++r) {
      for (int c = 2 * cj; c <= 2 * nj; ++c) cover(r, c);
    }
    ci = ni;
    cj = nj;
  }
  return band_dp(scorer, params.max_merge, band);
}

}  // namespace

Alignment align_sentences(const EmbeddingSet &src, const EmbeddingSet &tgt, const AlignParams &params) {
  if (src.dim() != tgt.dim()) {
    throw DimError("embedding dimensions differ: " + std::to_string(src.dim()) + " vs " + std::to_string(tgt.dim()));
  }
  return align_level(src, tgt, params);
}

FilterResult filter_alignments(std::span<const AlignmentPair> pairs, double threshold) {
  FilterResult r;
  for (const auto &p : pairs) (p.cost <= threshold ? r.kept : r.dropped).push_back(p);
  return r;
}

}  // namespace longalign::bitext
