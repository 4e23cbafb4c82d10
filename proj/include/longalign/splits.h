// include/longalign/splits.h

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

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "longalign/jsonl.h"
#include "longalign/manifest.h"

namespace longalign::splits {

inline constexpr const char *kTrain = "train";

struct SplitSpec {
  std::string name;
  double target_fraction = 0.0;  // of total hours
  bool speaker_disjoint = false;   // from train
  bool document_disjoint = false;  // from train
};

// Throws ConfigError unless there is one "train" split without flags,
// names are unique, fractions sum to 1 and any split named "test" carries
// both flags.
void validate_specs(std::span<const SplitSpec> specs);

std::vector<SplitSpec> specs_from_json(const nlohmann::json &j);

struct SplitOptions {
  double gender_weight = 1.0;
  int restarts = 64;
  int jobs = 1;
  // A component may go to a speaker-disjoint split only if its hours stay
  // within target * (1 + size_slack).
  double size_slack = 0.5;
};

struct SplitStats {
  double hours = 0.0;
  double target_hours = 0.0;
  double male_share = 0.0;  // of M+F hours; U excluded
  double female_share = 0.0;
  double gender_l1 = 0.0;   // against the whole manifest
  int docs = 0;
  int speakers = 0;
};

struct SplitReport {
  double total_hours = 0.0;
  double global_male_share = 0.0;
  double global_female_share = 0.0;
  std::map<std::string, SplitStats> splits;
  std::map<std::string, bool> constraints;  // "<split>.speaker_disjoint" etc.
  double objective = 0.0;
  bool all_constraints() const;
};

struct SplitAssignment {
  std::map<std::string, std::string> doc_split;
  SplitReport report;
};

SplitAssignment make_splits(std::span<const UtteranceManifestRow> manifest, std::span<const SplitSpec> specs,
                            std::uint64_t seed, const SplitOptions &opts = {});

// Everything in the report follows from the manifest and the mapping alone.
SplitReport compute_report(std::span<const UtteranceManifestRow> manifest, std::span<const SplitSpec> specs,
                           const std::map<std::string, std::string> &doc_split, double gender_weight = 1.0);

Json to_json(const SplitAssignment &a);

}  // namespace longalign::splits
