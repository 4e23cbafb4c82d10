// include/longalign/fsa.h

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

#include <map>
#include <string>
#include <vector>

namespace longalign {

// Special arc labels. Token labels are vocabulary ids >= 1 (0 is the blank,
// which never appears on graph arcs).
inline constexpr int kEpsilon = -1;
// Failure (backoff) arc: followed only for a label that has no explicit arc
// leaving the state. Used for n-gram backoff so that each label sequence has
// exactly one path through a language-model graph.
inline constexpr int kBackoff = -2;

struct FsaArc {
  int src = 0;
  int dst = 0;
  int label = kEpsilon;
  double weight = 0.0;  // log-domain score, added along a path
  bool operator==(const FsaArc &) const = default;
};

// Weighted acceptor.
struct Fsa {
  int num_states = 0;
  int start = 0;
  std::vector<FsaArc> arcs;
  std::map<int, double> finals;

  int add_state() { return num_states++; }
  int add_arc(int src, int dst, int label, double weight = 0.0) {
    arcs.push_back({src, dst, label, weight});
    return static_cast<int>(arcs.size()) - 1;
  }
  void set_final(int state, double weight = 0.0) { finals[state] = weight; }
  bool is_final(int state) const { return finals.count(state) != 0; }

  // Throws FormatError when the structural invariants do not hold. Labels are
  // checked against vocab_size when it is positive.
  void validate(int vocab_size = 0) const;

  std::string to_text() const;
};

}  // namespace longalign
