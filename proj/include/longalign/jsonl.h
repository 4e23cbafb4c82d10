// include/longalign/jsonl.h

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
#include <string>
#include <vector>

#include "json.hpp"

namespace longalign {

using Json = nlohmann::ordered_json;

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path &path);
void write_jsonl(const std::vector<Json> &rows, const std::filesystem::path &path);

nlohmann::json read_json(const std::filesystem::path &path);
void write_json(const Json &value, const std::filesystem::path &path);

std::string read_text(const std::filesystem::path &path);
void write_text(const std::string &text, const std::filesystem::path &path);

}  // namespace longalign
