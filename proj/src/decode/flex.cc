// src/decode/flex.cc

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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "longalign/decode.h"
#include "longalign/errors.h"

namespace longalign::decode {

FlexGraph build_flexible_graph(std::span<const std::vector<int>> sentences, double skip_weight, GraphEdges edges) {
  if (sentences.empty()) throw EmptyInputError("flexible graph needs at least one sentence");
  FlexGraph g;
  Fsa &fsa = g.fsa;
  fsa.start = fsa.add_state();
  int state = fsa.start;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].empty()) throw EmptyInputError("sentence " + std::to_string(i) + " has no tokens");
    const int begin = state;
    g.sentence_start.push_back(begin);
    for (std::size_t k = 0; k < sentences[i].size(); ++k) {
      const int dst = fsa.add_state();
      fsa.add_arc(state, dst, sentences[i][k]);
      g.arc_sentence.push_back(static_cast<int>(i));
      g.arc_position.push_back(static_cast<int>(k));
      state = dst;
    }
    fsa.add_arc(begin, state, kEpsilon, skip_weight);
    g.arc_sentence.push_back(static_cast<int>(i));
    g.arc_position.push_back(-1);
  }
  if (edges.free_entry) {
    for (int s = 1; s < fsa.num_states; ++s) {
      fsa.add_arc(fsa.start, s, kEpsilon, 0.0);
      g.arc_sentence.push_back(-1);
      g.arc_position.push_back(-1);
    }
  }
  if (edges.free_exit) {
    for (int s = 0; s < fsa.num_states; ++s) fsa.set_final(s);
  } else {
    fsa.set_final(state);
  }
  return g;
}

Fsa build_factor_transducer(std::span<const std::vector<int>> sentences, double entry_weight) {
  Fsa fsa;
  fsa.start = fsa.add_state();
  int state = fsa.start;
  for (const auto &sent : sentences) {
    for (int tok : sent) {
      const int dst = fsa.add_state();
      fsa.add_arc(state, dst, tok);
      state = dst;
    }
  }
  if (fsa.num_states == 1) throw EmptyInputError("factor transducer needs at least one token");
  for (int s = 1; s < fsa.num_states; ++s) fsa.add_arc(fsa.start, s, kEpsilon, entry_weight);
  for (int s = 0; s < fsa.num_states; ++s) fsa.set_final(s);
  return fsa;
}

namespace {

double span_confidence(const PosteriorMatrix &post, const std::vector<int> &labels, int begin, int end) {
  double sum = 0.0;
  for (int t = begin; t < end; ++t) sum += post(t, labels[t]);
  return end > begin ? std::exp(sum / (end - begin)) : 0.0;
}

}  // namespace

FlexAlignment flexible_align(const PosteriorMatrix &post, std::span<const std::vector<int>> sentences,
                             double skip_weight, GraphEdges edges, int frame_offset, std::optional<double> beam) {
  FlexAlignment out;
  out.sentences.resize(sentences.size());
  std::vector<int> kept;
  std::vector<std::vector<int>> graph_sents;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].empty()) continue;
    kept.push_back(static_cast<int>(i));
    graph_sents.push_back(sentences[i]);
  }
  if (kept.empty()) return out;

  const FlexGraph graph = build_flexible_graph(graph_sents, skip_weight, edges);
  const DecodeResult res = viterbi_align(post, graph.fsa, beam);
  const std::vector<int> labels = frame_labels(res, post.frames());

  std::vector<int> first(kept.size(), -1), last(kept.size(), -1);
  for (std::size_t i = 0; i < res.arcs.size(); ++i) {
    const int s = graph.arc_sentence[res.arcs[i]];
    const int pos = graph.arc_position[res.arcs[i]];
    if (pos == 0) first[s] = res.spans[i].first;
    if (pos == static_cast<int>(graph_sents[s].size()) - 1) last[s] = res.spans[i].second;
  }
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (first[k] < 0 || last[k] < 0) continue;
    auto &sa = out.sentences[kept[k]];
    sa.status = SentenceStatus::kAligned;
    sa.start_frame = first[k] + frame_offset;
    sa.end_frame = last[k] + frame_offset;
    sa.conf = span_confidence(post, labels, first[k], last[k]);
  }
  return out;
}

std::vector<std::pair<int, int>> make_windows(int frames, int len_frames, int overlap_frames) {
  if (len_frames <= overlap_frames || overlap_frames < 0) {
    throw ConfigError("window length must exceed the overlap, and the overlap must be >= 0");
  }
  std::vector<std::pair<int, int>> windows;
  const int stride = len_frames - overlap_frames;
  for (int start = 0;; start += stride) {
    const int end = std::min(frames, start + len_frames);
    windows.push_back({start, end});
    if (end >= frames) break;
  }
  return windows;
}

FlexAlignment flex_align_window(const PosteriorMatrix &post, std::span<const std::vector<int>> sentences,
                                double skip_weight, const WindowOptions &window,
                                std::span<const std::pair<int, int>> candidates, int *failed_windows) {
  if (!candidates.empty() && candidates.size() != sentences.size()) {
    throw ConfigError("candidate ranges must be given for every sentence");
  }
  const auto windows = make_windows(post.frames(), window.len_frames, window.overlap_frames);
  std::vector<FlexAlignment> results(windows.size());
  std::vector<std::vector<int>> members(windows.size());
  std::vector<char> failed(windows.size(), 0);

  auto run = [&](std::size_t w) {
    const auto [ws, we] = windows[w];
    std::vector<std::vector<int>> local;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      if (!candidates.empty() && (candidates[s].second <= ws || candidates[s].first >= we)) continue;
      members[w].push_back(static_cast<int>(s));
      local.push_back(sentences[s]);
    }
    if (local.empty()) return;
    const GraphEdges edges{ws > 0, we < post.frames()};
    try {
      results[w] = flexible_align(post.slice(ws, we), local, skip_weight, edges, ws, window.beam);
    } catch (const NoPathError &) {
      failed[w] = 1;
    }
    if (failed[w] && window.emission_floor) {
      try {
        results[w] = flexible_align(post.slice(ws, we).floored(*window.emission_floor), local, skip_weight, edges, ws,
                                    window.beam);
        failed[w] = 0;
      } catch (const NoPathError &) {
      }
    }
  };

  const int jobs = std::max(1, std::min<int>(window.jobs, static_cast<int>(windows.size())));
  if (jobs == 1) {
    for (std::size_t w = 0; w < windows.size(); ++w) run(w);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t w = next++; w < windows.size(); w = next++) run(w);
      });
    }
    for (auto &th : pool) th.join();
  }

  FlexAlignment merged;
  merged.sentences.resize(sentences.size());
  std::vector<double> best_margin(sentences.size(), -1.0);
  int n_failed = 0;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    n_failed += failed[w];
    if (results[w].sentences.empty()) continue;
    const auto [ws, we] = windows[w];
    for (std::size_t k = 0; k < members[w].size(); ++k) {
      const SentenceAlignment &sa = results[w].sentences[k];
      if (sa.status != SentenceStatus::kAligned) continue;
      const int s = members[w][k];
      const double mid = 0.5 * (sa.start_frame + sa.end_frame);
      const double margin = std::min(mid - ws, we - mid);
      if (margin > best_margin[s]) {
        best_margin[s] = margin;
        merged.sentences[s] = sa;
        merged.sentences[s].window = static_cast<int>(w);
      }
    }
  }
  // Windows can disagree under noise; keep the spans monotone by dropping the
  // less central of two conflicting sentences.
  std::vector<int> kept;
  for (int s = 0; s < static_cast<int>(sentences.size()); ++s) {
    if (merged.sentences[s].status != SentenceStatus::kAligned) continue;
    bool keep = true;
    while (!kept.empty() && merged.sentences[kept.back()].end_frame > merged.sentences[s].start_frame) {
      if (best_margin[s] > best_margin[kept.back()]) {
        merged.sentences[kept.back()] = SentenceAlignment{};
        kept.pop_back();
      } else {
        keep = false;
        break;
      }
    }
    if (keep) {
      kept.push_back(s);
    } else {
      merged.sentences[s] = SentenceAlignment{};
    }
  }
  if (failed_windows) *failed_windows = n_failed;
  return merged;
}

}  // namespace longalign::decode
