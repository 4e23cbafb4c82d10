// include/longalign/manifest.h

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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace longalign {

enum class Gender { kMale, kFemale, kUnknown };

char gender_code(Gender g);
Gender parse_gender(const std::string &code);

// Edit-alignment quality of a decoded segment against its reference.
struct QualityStats {
  double cer = 0.0;
  int max_consecutive_errors = 0;
  double error_ratio = 0.0;
  int ref_len = 0;
  int hyp_len = 0;
  int errors = 0;
  bool operator==(const QualityStats &) const = default;
};

struct UtteranceManifestRow {
  std::string utt_id;
  std::string doc_id;
  std::string speaker_id;
  Gender gender = Gender::kUnknown;
  double duration_s = 0.0;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text_src;
  std::string text_tgt;
  std::optional<QualityStats> quality;
  bool operator==(const UtteranceManifestRow &) const = default;
};

// Throws FormatError on the first violated field invariant.
void validate_row(const UtteranceManifestRow &row);

nlohmann::ordered_json to_json(const QualityStats &q);
QualityStats quality_from_json(const nlohmann::json &j);
nlohmann::ordered_json to_json(const UtteranceManifestRow &row);
UtteranceManifestRow row_from_json(const nlohmann::json &j);

std::vector<UtteranceManifestRow> read_manifest(const std::filesystem::path &path);
void write_manifest(const std::vector<UtteranceManifestRow> &rows, const std::filesystem::path &path);

}  // namespace longalign
