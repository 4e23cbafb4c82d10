// src/decode/compiled_graph.h

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

#include <utility>
#include <vector>

#include "longalign/fsa.h"

namespace longalign::decode::internal {

// Adjacency view of an Fsa for search.
struct CompiledGraph {
  const Fsa *fsa = nullptr;
  // Token arcs per state, ordered by (label, arc index).
  std::vector<std::vector<int>> label_arcs;
  std::vector<int> backoff_arc;  // -1 when the state has none
  // States reachable through epsilon arcs with their best weight, self first.
  std::vector<std::vector<std::pair<int, double>>> closure;
  std::vector<double> final_weight;  // -inf for non-final states
  bool has_backoff = false;

  explicit CompiledGraph(const Fsa &graph);

  // Appends (arc, accumulated backoff weight) for label from state, following
  // failure arcs until a state has an explicit arc for it.
  void resolve(int state, int label, std::vector<std::pair<int, double>> &out) const;
};

}  // namespace longalign::decode::internal
