// src/decode/viterbi.cc

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
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

#include "compiled_graph.h"
#include "longalign/decode.h"
#include "longalign/errors.h"

namespace longalign::decode {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// A backtrace node marks the frame where a hypothesis starts a new label or
// drops back to blank; frames in between repeat the node's symbol.
struct TraceNode {
  int parent;
  int label;  // -1 for a blank run
  int arc;
  int frame;
};

enum class Step : std::uint8_t { kContinue, kBlankStart, kLabelStart };

struct Hyp {
  int state;
  int last;  // 0 after a blank, else the label being emitted
  double score;
  int node;
  // Node to create once the frame is settled.
  Step step;
  int pending_label;
  int pending_arc;
};

std::uint64_t key_of(int state, int last, int vocab) {
  return static_cast<std::uint64_t>(state) * static_cast<std::uint64_t>(vocab) + static_cast<std::uint64_t>(last);
}

}  // namespace

DecodeResult viterbi_align(const PosteriorMatrix &post, const Fsa &graph, std::optional<double> beam) {
  graph.validate(post.vocab_size());
  const internal::CompiledGraph g(graph);
  const int frames = post.frames();
  const int vocab = post.vocab_size();

  std::vector<TraceNode> nodes;
  std::vector<Hyp> cur{{graph.start, 0, 0.0, -1, Step::kContinue, 0, -1}};
  std::vector<Hyp> next;
  std::unordered_map<std::uint64_t, int> index;
  std::vector<int> candidates;
  std::vector<std::pair<int, double>> resolved;

  for (int t = 0; t < frames; ++t) {
    const auto row = post.row(t);
    next.clear();
    index.clear();
    auto relax = [&](int state, int last, double score, int parent, Step step, int label, int arc) {
      const auto [it, inserted] = index.try_emplace(key_of(state, last, vocab), static_cast<int>(next.size()));
      if (inserted) {
        next.push_back({state, last, score, parent, step, label, arc});
      } else if (score > next[it->second].score) {
        next[it->second] = {state, last, score, parent, step, label, arc};
      }
    };

    if (g.has_backoff) {
      candidates.clear();
      for (int v = 1; v < vocab; ++v) {
        if (row[v] != -std::numeric_limits<float>::infinity()) candidates.push_back(v);
      }
    }
    const double blank_lp = row[0];

    for (const Hyp &h : cur) {
      if (blank_lp != kNegInf) {
        relax(h.state, 0, h.score + blank_lp, h.node, h.last != 0 ? Step::kBlankStart : Step::kContinue, -1, -1);
      }
      if (h.last != 0 && row[h.last] != -std::numeric_limits<float>::infinity()) {
        relax(h.state, h.last, h.score + row[h.last], h.node, Step::kContinue, 0, -1);
      }
      for (const auto &[via, eps_w] : g.closure[h.state]) {
        if (g.has_backoff) {
          for (int label : candidates) {
            if (label == h.last) continue;
            resolved.clear();
            g.resolve(via, label, resolved);
            for (const auto &[ai, bo_w] : resolved) {
              const auto &a = graph.arcs[ai];
              relax(a.dst, label, h.score + eps_w + bo_w + a.weight + row[label], h.node, Step::kLabelStart, label, ai);
            }
          }
        } else {
          for (int ai : g.label_arcs[via]) {
            const auto &a = graph.arcs[ai];
            if (a.label == h.last || row[a.label] == -std::numeric_limits<float>::infinity()) continue;
            relax(a.dst, a.label, h.score + eps_w + a.weight + row[a.label], h.node, Step::kLabelStart, a.label, ai);
          }
        }
      }
    }

    double best = kNegInf;
    for (const Hyp &h : next) best = std::max(best, h.score);
    if (best == kNegInf) throw NoPathError("no path through the graph at frame " + std::to_string(t));
    cur.clear();
    for (Hyp &h : next) {
      if (h.score == kNegInf || (beam && h.score < best - *beam)) continue;
      if (h.step == Step::kBlankStart) {
        nodes.push_back({h.node, -1, -1, t});
        h.node = static_cast<int>(nodes.size()) - 1;
      } else if (h.step == Step::kLabelStart) {
        nodes.push_back({h.node, h.pending_label, h.pending_arc, t});
        h.node = static_cast<int>(nodes.size()) - 1;
      }
      h.step = Step::kContinue;
      cur.push_back(h);
    }
  }

  double best_total = kNegInf;
  int best_node = -1;
  for (const Hyp &h : cur) {
    for (const auto &[via, eps_w] : g.closure[h.state]) {
      const double total = h.score + eps_w + g.final_weight[via];
      if (total > best_total) {
        best_total = total;
        best_node = h.node;
      }
    }
  }
  if (best_total == kNegInf) throw NoPathError("no hypothesis ends in a final state");

  std::vector<const TraceNode *> path;
  for (int n = best_node; n >= 0; n = nodes[n].parent) path.push_back(&nodes[n]);
  std::reverse(path.begin(), path.end());

  DecodeResult result;
  result.total_logprob = best_total;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path[i]->label < 0) continue;
    const int end = i + 1 < path.size() ? path[i + 1]->frame : frames;
    result.labels.push_back(path[i]->label);
    result.spans.push_back({path[i]->frame, end});
    result.arcs.push_back(path[i]->arc);
  }
  return result;
}

double best_path_score(const Fsa &graph, std::span<const int> labels) {
  const internal::CompiledGraph g(graph);
  std::vector<double> cur(graph.num_states, kNegInf);
  std::vector<double> next(graph.num_states, kNegInf);
  cur[graph.start] = 0.0;
  std::vector<std::pair<int, double>> resolved;
  for (int label : labels) {
    std::fill(next.begin(), next.end(), kNegInf);
    for (int s = 0; s < graph.num_states; ++s) {
      if (cur[s] == kNegInf) continue;
      for (const auto &[via, eps_w] : g.closure[s]) {
        resolved.clear();
        g.resolve(via, label, resolved);
        for (const auto &[ai, bo_w] : resolved) {
          const auto &a = graph.arcs[ai];
          next[a.dst] = std::max(next[a.dst], cur[s] + eps_w + bo_w + a.weight);
        }
      }
    }
    std::swap(cur, next);
  }
  double best = kNegInf;
  for (int s = 0; s < graph.num_states; ++s) {
    if (cur[s] == kNegInf) continue;
    for (const auto &[via, eps_w] : g.closure[s]) best = std::max(best, cur[s] + eps_w + g.final_weight[via]);
  }
  return best;
}

std::vector<int> frame_labels(const DecodeResult &result, int frames) {
  std::vector<int> out(frames, 0);
  for (std::size_t i = 0; i < result.labels.size(); ++i) {
    for (int t = result.spans[i].first; t < result.spans[i].second && t < frames; ++t) out[t] = result.labels[i];
  }
  return out;
}

}  // namespace longalign::decode
