// src/core/manifest.cc

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

#include "longalign/manifest.h"

#include <cmath>

#include "longalign/errors.h"
#include "longalign/jsonl.h"

namespace longalign {

char gender_code(Gender g) {
  switch (g) {
    case Gender::kMale: return 'M';
    case Gender::kFemale: return 'F';
    default: return 'U';
  }
}

Gender parse_gender(const std::string &code) {
  if (code == "M") return Gender::kMale;
  if (code == "F") return Gender::kFemale;
  if (code == "U") return Gender::kUnknown;
  throw FormatError("gender must be one of M, F, U; got '" + code + "'");
}

void validate_row(const UtteranceManifestRow &row) {
  if (row.utt_id.empty()) throw FormatError("manifest row with empty utt_id");
  const std::string where = "manifest row " + row.utt_id + ": ";
  if (row.doc_id.empty()) throw FormatError(where + "empty doc_id");
  if (row.speaker_id.empty()) throw FormatError(where + "empty speaker_id");
  if (!(row.end_s > row.start_s)) throw FormatError(where + "end_s must exceed start_s");
  if (std::fabs(row.duration_s - (row.end_s - row.start_s)) > 1e-3) {
    throw FormatError(where + "duration_s disagrees with end_s - start_s");
  }
}

nlohmann::ordered_json to_json(const QualityStats &q) {
  nlohmann::ordered_json j;
  j["cer"] = q.cer;
  j["max_consecutive_errors"] = q.max_consecutive_errors;
  j["error_ratio"] = q.error_ratio;
  j["ref_len"] = q.ref_len;
  j["hyp_len"] = q.hyp_len;
  j["errors"] = q.errors;
  return j;
}

QualityStats quality_from_json(const nlohmann::json &j) {
  QualityStats q;
  q.cer = j.at("cer").get<double>();
  q.max_consecutive_errors = j.at("max_consecutive_errors").get<int>();
  q.error_ratio = j.at("error_ratio").get<double>();
  q.ref_len = j.at("ref_len").get<int>();
  q.hyp_len = j.at("hyp_len").get<int>();
  q.errors = j.value("errors", 0);
  return q;
}

nlohmann::ordered_json to_json(const UtteranceManifestRow &row) {
  nlohmann::ordered_json j;
  j["utt_id"] = row.utt_id;
  j["doc_id"] = row.doc_id;
  j["speaker_id"] = row.speaker_id;
  j["gender"] = std::string(1, gender_code(row.gender));
  j["duration_s"] = row.duration_s;
  j["start_s"] = row.start_s;
  j["end_s"] = row.end_s;
  j["text_src"] = row.text_src;
  j["text_tgt"] = row.text_tgt;
  if (row.quality) j["quality"] = to_json(*row.quality);
  return j;
}

UtteranceManifestRow row_from_json(const nlohmann::json &j) {
  UtteranceManifestRow row;
  try {
    row.utt_id = j.at("utt_id").get<std::string>();
    row.doc_id = j.at("doc_id").get<std::string>();
    row.speaker_id = j.at("speaker_id").get<std::string>();
    row.gender = parse_gender(j.at("gender").get<std::string>());
    row.duration_s = j.at("duration_s").get<double>();
    row.start_s = j.at("start_s").get<double>();
    row.end_s = j.at("end_s").get<double>();
    row.text_src = j.value("text_src", "");
    row.text_tgt = j.value("text_tgt", "");
    if (j.contains("quality") && !j["quality"].is_null()) row.quality = quality_from_json(j["quality"]);
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("bad manifest row: ") + e.what());
  }
  return row;
}

std::vector<UtteranceManifestRow> read_manifest(const std::filesystem::path &path) {
  std::vector<UtteranceManifestRow> rows;
  for (const auto &j : read_jsonl(path)) {
    rows.push_back(row_from_json(j));
    validate_row(rows.back());
  }
  return rows;
}

void write_manifest(const std::vector<UtteranceManifestRow> &rows, const std::filesystem::path &path) {
  std::vector<Json> out;
  out.reserve(rows.size());
  for (const auto &r : rows) out.push_back(to_json(r));
  write_jsonl(out, path);
}

}  // namespace longalign
