// src/anchor/anchor.cc

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

#include "longalign/anchor.h"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <thread>

#include "longalign/decode.h"
#include "longalign/errors.h"

namespace longalign::anchor {

namespace {

// Alignment prefix score: edit cost, then number of error runs, then
// deletion runs with an end inside a reference sentence.
struct Score {
  double cost = std::numeric_limits<double>::infinity();
  int runs = 0;
  int ragged = 0;
  bool operator<(const Score &o) const {
    if (cost != o.cost) return cost < o.cost;
    if (runs != o.runs) return runs < o.runs;
    return ragged < o.ragged;
  }
};

constexpr int kStates = 4;  // indexed by EditKind: match, sub, ins, del

}  // namespace

std::vector<EditOp> align_text(std::span<const int> hyp, std::span<const int> ref, const EditCosts &costs,
                               std::span<const int> ref_sentence) {
  const std::size_t n = hyp.size(), m = ref.size();
  if (!ref_sentence.empty() && ref_sentence.size() != m) {
    throw ConfigError("ref_sentence must have one entry per reference token");
  }
  // Same sentence on both sides of the boundary before reference token j.
  auto inside = [&](std::size_t j) {
    return !ref_sentence.empty() && j > 0 && j < m && ref_sentence[j - 1] == ref_sentence[j];
  };
  const std::size_t width = m + 1;
  // back[(i * width + j) * kStates + k]: state before the op ending in state k at (i, j).
  std::vector<std::uint8_t> back((n + 1) * width * kStates, 0);
  std::vector<Score> prev(width * kStates), cur(width * kStates);
  const int match = static_cast<int>(EditKind::kMatch), sub = static_cast<int>(EditKind::kSub),
            ins = static_cast<int>(EditKind::kIns), del = static_cast<int>(EditKind::kDel);
  // Preference on ties, first wins.
  const int order[kStates] = {match, sub, del, ins};

  // Best way into state k from the kStates scores at `from`; runs grow when
  // an error op follows a different op. j is the reference boundary the
  // previous op ended on.
  auto enter = [&](const Score *from, int k, double cost, std::size_t j, std::uint8_t *bp) {
    Score best;
    for (int p : order) {
      if (from[p].cost == std::numeric_limits<double>::infinity()) continue;
      Score c{from[p].cost + cost, from[p].runs + (k != match && p != k ? 1 : 0), from[p].ragged};
      if ((k == del) != (p == del) && inside(j)) ++c.ragged;
      if (c < best) {
        best = c;
        *bp = static_cast<std::uint8_t>(p);
      }
    }
    return best;
  };

  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      Score *here = &cur[j * kStates];
      std::uint8_t *bp = &back[(i * width + j) * kStates];
      for (int k = 0; k < kStates; ++k) here[k] = Score{};
      if (i == 0 && j == 0) {
        here[match] = {0.0, 0};
        continue;
      }
      if (i > 0 && j > 0) {
        const Score *diag = &prev[(j - 1) * kStates];
        if (hyp[i - 1] == ref[j - 1]) {
          here[match] = enter(diag, match, 0.0, j - 1, &bp[match]);
        } else {
          here[sub] = enter(diag, sub, costs.sub, j - 1, &bp[sub]);
        }
      }
      if (j > 0) here[del] = enter(&cur[(j - 1) * kStates], del, costs.del, j - 1, &bp[del]);
      if (i > 0) here[ins] = enter(&prev[j * kStates], ins, costs.ins, j, &bp[ins]);
    }
    std::swap(prev, cur);
  }

  int state = match;
  {
    Score best;
    for (int k : order) {
      if (prev[m * kStates + k] < best) {
        best = prev[m * kStates + k];
        state = k;
      }
    }
  }
  std::vector<EditOp> ops;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const int before = back[(i * width + j) * kStates + state];
    const auto kind = static_cast<EditKind>(state);
    if (kind == EditKind::kMatch || kind == EditKind::kSub) {
      ops.push_back({kind, int(i - 1), int(j - 1)});
      --i, --j;
    } else if (kind == EditKind::kDel) {
      ops.push_back({kind, -1, int(j - 1)});
      --j;
    } else {
      ops.push_back({kind, int(i - 1), -1});
      --i;
    }
    state = before;
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

double edit_cost(std::span<const EditOp> ops, const EditCosts &costs) {
  double total = 0.0;
  for (const auto &op : ops) {
    if (op.kind == EditKind::kSub) total += costs.sub;
    if (op.kind == EditKind::kIns) total += costs.ins;
    if (op.kind == EditKind::kDel) total += costs.del;
  }
  return total;
}

RegionStats region_stats(std::span<const EditOp> ops, int begin, int end) {
  RegionStats st;
  int run = 0;
  for (int k = begin; k < end; ++k) {
    const EditOp &op = ops[k];
    if (op.hyp >= 0) ++st.hyp_tokens;
    if (op.ref >= 0) ++st.ref_tokens;
    if (is_error(op)) {
      ++st.abs_errors;
      st.max_consecutive_errors = std::max(st.max_consecutive_errors, ++run);
    } else {
      run = 0;
    }
  }
  st.cer = st.ref_tokens > 0 ? static_cast<double>(st.abs_errors) / st.ref_tokens
                             : std::numeric_limits<double>::infinity();
  return st;
}

namespace {

bool within(const RegionStats &st, const AnchorCriteria &c) {
  return st.cer <= c.max_cer && st.max_consecutive_errors <= c.max_consec && st.abs_errors <= c.max_abs &&
         st.hyp_tokens > 0 && st.ref_tokens > 0;
}

}  // namespace

bool qualifies(std::span<const EditOp> ops, int begin, int end, const AnchorCriteria &criteria) {
  if (end - begin < std::max(criteria.min_len, 1)) return false;
  if (is_error(ops[begin]) || is_error(ops[end - 1])) return false;
  return within(region_stats(ops, begin, end), criteria);
}

std::vector<Anchor> find_anchors(std::span<const EditOp> ops, const AnchorCriteria &criteria) {
  std::vector<Anchor> anchors;
  const int n = static_cast<int>(ops.size());
  const int min_len = std::max(criteria.min_len, 1);
  int i = 0;
  while (i < n) {
    if (is_error(ops[i])) {
      ++i;
      continue;
    }
    // Extend incrementally; absolute and consecutive errors only grow, so
    // the scan stops once either limit is passed.
    RegionStats st;
    int run = 0, best_end = -1;
    RegionStats best;
    for (int j = i; j < n; ++j) {
      const EditOp &op = ops[j];
      if (op.hyp >= 0) ++st.hyp_tokens;
      if (op.ref >= 0) ++st.ref_tokens;
      if (is_error(op)) {
        ++st.abs_errors;
        st.max_consecutive_errors = std::max(st.max_consecutive_errors, ++run);
        if (st.abs_errors > criteria.max_abs || run > criteria.max_consec) break;
        continue;
      }
      run = 0;
      st.cer = static_cast<double>(st.abs_errors) / st.ref_tokens;
      if (j + 1 - i >= min_len && within(st, criteria)) {
        best_end = j + 1;
        best = st;
      }
    }
    if (best_end < 0) {
      ++i;
      continue;
    }
    Anchor a;
    a.op_begin = i;
    a.op_end = best_end;
    a.stats = best;
    int h0 = -1, h1 = -1, r0 = -1, r1 = -1;
    for (int k = i; k < best_end; ++k) {
      if (ops[k].hyp >= 0) {
        if (h0 < 0) h0 = ops[k].hyp;
        h1 = ops[k].hyp + 1;
      }
      if (ops[k].ref >= 0) {
        if (r0 < 0) r0 = ops[k].ref;
        r1 = ops[k].ref + 1;
      }
    }
    a.hyp_span = {h0, h1};
    a.ref_span = {r0, r1};
    anchors.push_back(a);
    i = best_end;
  }
  return anchors;
}

std::vector<RegionPair> map_anchors_to_audio(std::span<const Anchor> anchors, std::span<const EditOp> ops,
                                             std::span<const std::pair<int, int>> hyp_frames,
                                             std::span<const int> ref_sentence, int expand_tokens) {
  const int n_ref = static_cast<int>(ref_sentence.size());
  const int n_hyp = static_cast<int>(hyp_frames.size());
  const int e = std::max(expand_tokens, 0);
  std::vector<RegionPair> regions;
  for (const Anchor &a : anchors) {
    if (a.ref_span.second > n_ref || a.ref_span.first < 0) throw ConfigError("anchor outside the reference");
    const int rs = std::max(0, a.ref_span.first - e);
    const int re = std::min(n_ref, a.ref_span.second + e);
    const int sb = ref_sentence[rs];
    const int se = ref_sentence[re - 1] + 1;

    int hmin = std::numeric_limits<int>::max(), hmax = -1;
    for (const EditOp &op : ops) {
      if (op.ref < 0 || op.hyp < 0) continue;
      const int s = ref_sentence[op.ref];
      if (s < sb || s >= se) continue;
      hmin = std::min(hmin, op.hyp);
      hmax = std::max(hmax, op.hyp);
    }
    hmin = std::max(0, std::min(hmin, a.hyp_span.first) - e);
    hmax = std::min(n_hyp - 1, std::max(hmax, a.hyp_span.second - 1) + e);

    RegionPair r{std::numeric_limits<int>::max(), -1, sb, se};
    for (int h = hmin; h <= hmax; ++h) {
      if (h >= n_hyp || hyp_frames[h].first < 0 || hyp_frames[h].second <= hyp_frames[h].first) {
        throw MissingTimingError("hypothesis token " + std::to_string(h) + " has no frame span");
      }
      r.audio_start = std::min(r.audio_start, hyp_frames[h].first);
      r.audio_end = std::max(r.audio_end, hyp_frames[h].second);
    }
    if (!regions.empty() && (r.sent_begin < regions.back().sent_end || r.audio_start < regions.back().audio_end)) {
      RegionPair &prev = regions.back();
      prev.sent_end = std::max(prev.sent_end, r.sent_end);
      prev.audio_start = std::min(prev.audio_start, r.audio_start);
      prev.audio_end = std::max(prev.audio_end, r.audio_end);
    } else {
      regions.push_back(r);
    }
  }
  return regions;
}

std::vector<std::pair<int, int>> candidate_ranges(std::span<const RegionPair> regions, int num_sentences,
                                                  int frames, int pad) {
  std::vector<std::pair<int, int>> out(num_sentences);
  std::size_t r = 0;
  for (int s = 0; s < num_sentences; ++s) {
    while (r < regions.size() && regions[r].sent_end <= s) ++r;
    if (r < regions.size() && regions[r].sent_begin <= s) {
      out[s] = {regions[r].audio_start, regions[r].audio_end};
      continue;
    }
    const int lo = r > 0 ? regions[r - 1].audio_end - pad : 0;
    const int hi = r < regions.size() ? regions[r].audio_start + pad : frames;
    out[s] = {std::max(0, lo), std::min(frames, hi)};
  }
  return out;
}

FirstPassResult first_pass(const PosteriorMatrix &post, std::span<const std::pair<int, int>> segments,
                           std::span<const std::vector<int>> sentences, const lm::NgramLM &lm,
                           const FirstPassOptions &opts) {
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto [s, e] = segments[k];
    if (s < 0 || e > post.frames() || s >= e) throw ConfigError("segment outside the posteriors");
    if (k > 0 && s < segments[k - 1].second) throw OrderError("segments must be ordered by time");
  }
  const Fsa graph = lm::lm_to_fsa(lm);
  std::vector<decode::DecodeResult> decoded(segments.size());
  std::vector<char> failed(segments.size(), 0);
  auto run = [&](std::size_t k) {
    const auto [s, e] = segments[k];
    try {
      decoded[k] = decode::viterbi_align(post.slice(s, e), graph, opts.beam);
    } catch (const NoPathError &) {
      failed[k] = 1;
    }
  };
  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(segments.size())));
  if (jobs == 1) {
    for (std::size_t k = 0; k < segments.size(); ++k) run(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < segments.size(); k = next++) run(k);
      });
    }
    for (auto &th : pool) th.join();
  }

  FirstPassResult res;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    if (failed[k]) {
      ++res.skipped_segments;
      continue;
    }
    for (std::size_t i = 0; i < decoded[k].labels.size(); ++i) {
      res.hyp.push_back(decoded[k].labels[i]);
      res.hyp_frames.push_back({decoded[k].spans[i].first + segments[k].first,
                                decoded[k].spans[i].second + segments[k].first});
    }
  }

  std::vector<int> ref, ref_sentence;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    for (int tok : sentences[s]) {
      ref.push_back(tok);
      ref_sentence.push_back(static_cast<int>(s));
    }
  }
  res.ops = align_text(res.hyp, ref, {}, ref_sentence);
  res.anchors = find_anchors(res.ops, opts.criteria);
  res.regions = map_anchors_to_audio(res.anchors, res.ops, res.hyp_frames, ref_sentence, opts.expand_tokens);
  return res;
}

}  // namespace longalign::anchor
