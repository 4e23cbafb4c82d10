// src/decode/compiled_graph.cc

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

#include "compiled_graph.h"

#include <algorithm>
#include <limits>
#include <queue>

#include "longalign/errors.h"

namespace longalign::decode::internal {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

CompiledGraph::CompiledGraph(const Fsa &graph)
    : fsa(&graph),
      label_arcs(graph.num_states),
      backoff_arc(graph.num_states, -1),
      closure(graph.num_states),
      final_weight(graph.num_states, kNegInf) {
  graph.validate();
  std::vector<std::vector<int>> eps_arcs(graph.num_states);
  for (int i = 0; i < static_cast<int>(graph.arcs.size()); ++i) {
    const auto &a = graph.arcs[i];
    if (a.label == kEpsilon) {
      if (a.weight > 0.0) throw ConfigError("epsilon arcs with positive weight are not supported");
      eps_arcs[a.src].push_back(i);
    } else if (a.label == kBackoff) {
      if (backoff_arc[a.src] >= 0) throw FormatError("state with two backoff arcs");
      backoff_arc[a.src] = i;
      has_backoff = true;
    } else {
      label_arcs[a.src].push_back(i);
    }
  }
  for (auto &arcs : label_arcs) {
    std::stable_sort(arcs.begin(), arcs.end(),
                     [&](int x, int y) { return graph.arcs[x].label < graph.arcs[y].label; });
  }
  for (const auto &[s, w] : graph.finals) final_weight[s] = w;

  // Epsilon closure by best-first search; weights are <= 0 so costs are >= 0.
  std::vector<double> best(graph.num_states, kNegInf);
  std::vector<int> touched;
  for (int s = 0; s < graph.num_states; ++s) {
    if (eps_arcs[s].empty()) {
      closure[s].push_back({s, 0.0});
      continue;
    }
    using Item = std::pair<double, int>;  // (-score, state)
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    best[s] = 0.0;
    touched.push_back(s);
    queue.push({0.0, s});
    while (!queue.empty()) {
      auto [neg, u] = queue.top();
      queue.pop();
      if (-neg < best[u]) continue;
      for (int ai : eps_arcs[u]) {
        const auto &a = graph.arcs[ai];
        const double cand = best[u] + a.weight;
        if (cand > best[a.dst]) {
          if (best[a.dst] == kNegInf) touched.push_back(a.dst);
          best[a.dst] = cand;
          queue.push({-cand, a.dst});
        }
      }
    }
    std::sort(touched.begin(), touched.end());
    closure[s].push_back({s, 0.0});
    for (int t : touched) {
      if (t != s) closure[s].push_back({t, best[t]});
      best[t] = kNegInf;
    }
    touched.clear();
  }
}

void CompiledGraph::resolve(int state, int label, std::vector<std::pair<int, double>> &out) const {
  double acc = 0.0;
  for (int guard = 0; guard <= fsa->num_states; ++guard) {
    const auto &arcs = label_arcs[state];
    auto it = std::lower_bound(arcs.begin(), arcs.end(), label,
                               [&](int ai, int l) { return fsa->arcs[ai].label < l; });
    if (it != arcs.end() && fsa->arcs[*it].label == label) {
      for (; it != arcs.end() && fsa->arcs[*it].label == label; ++it) out.push_back({*it, acc});
      return;
    }
    const int b = backoff_arc[state];
    if (b < 0) return;
    acc += fsa->arcs[b].weight;
    state = fsa->arcs[b].dst;
  }
  throw FormatError("cycle of backoff arcs");
}

}  // namespace longalign::decode::internal
