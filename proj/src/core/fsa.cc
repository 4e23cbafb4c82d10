// src/core/fsa.cc

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

#include "longalign/fsa.h"

#include <sstream>

#include "longalign/errors.h"

namespace longalign {

void Fsa::validate(int vocab_size) const {
  if (num_states < 1) throw FormatError("fsa has no states");
  if (start < 0 || start >= num_states) throw FormatError("fsa start state out of range");
  if (finals.empty()) throw FormatError("fsa has no final state");
  for (const auto &[s, w] : finals) {
    if (s < 0 || s >= num_states) throw FormatError("fsa final state out of range");
  }
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    const auto &a = arcs[i];
    if (a.src < 0 || a.src >= num_states || a.dst < 0 || a.dst >= num_states) {
      throw FormatError("fsa arc " + std::to_string(i) + " references a missing state");
    }
    if (a.label == 0) throw FormatError("fsa arc " + std::to_string(i) + " carries the blank label");
    if (a.label < kBackoff) throw FormatError("fsa arc " + std::to_string(i) + " has an invalid label");
    if (vocab_size > 0 && a.label >= vocab_size) {
      throw FormatError("fsa arc " + std::to_string(i) + " label outside vocabulary");
    }
  }
}

std::string Fsa::to_text() const {
  std::ostringstream os;
  for (const auto &a : arcs) {
    os << a.src << '\t' << a.dst << '\t';
    if (a.label == kEpsilon) {
      os << "<eps>";
    } else if (a.label == kBackoff) {
      os << "<phi>";
    } else {
      os << a.label;
    }
    os << '\t' << a.weight << '\n';
  }
  for (const auto &[s, w] : finals) os << s << '\t' << w << '\n';
  return os.str();
}

}  // namespace longalign
