// include/longalign/pipeline.h

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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "longalign/anchor.h"
#include "longalign/bitext.h"
#include "longalign/decode.h"
#include "longalign/errors.h"
#include "longalign/jsonl.h"
#include "longalign/posteriors.h"
#include "longalign/quality.h"
#include "longalign/splits.h"
#include "longalign/synth.h"

namespace longalign::pipeline {

namespace fs = std::filesystem;

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string &what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string &stage() const { return stage_; }

 private:
  std::string stage_;
};

// Media cutting is left to external tools; this only plans the cuts.
struct CutEntry {
  std::string recording_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string label;
  bool operator==(const CutEntry &) const = default;
};

struct CutList {
  int sample_rate = 16000;
  std::vector<CutEntry> entries;
};

CutList topic_cuts(const std::string &recording_id, const std::vector<std::pair<double, std::string>> &metadata,
                   double duration_s);
Json to_json(const CutList &cuts);

// Tiles [0, frames) by cutting in the middle of every run of at least
// min_gap frames whose argmax is blank.
std::vector<std::pair<int, int>> segment_by_blanks(const PosteriorMatrix &post, int min_gap = 30);

// JSONL rows {"start_s", "end_s"}, converted to frames at hop_ms and
// clamped to [0, frames).
std::vector<std::pair<int, int>> read_segments(const fs::path &path, int hop_ms, int frames);
void write_segments(const std::vector<std::pair<int, int>> &segments, int hop_ms, const fs::path &path);

// Per-stage file formats.
std::vector<Json> pairs_to_json(const std::vector<bitext::AlignmentPair> &pairs, double threshold);
std::vector<bitext::AlignmentPair> read_pairs(const fs::path &path);
std::vector<Json> regions_to_json(const std::vector<anchor::RegionPair> &regions);
std::vector<anchor::RegionPair> read_regions(const fs::path &path);
std::vector<Json> alignment_to_json(const decode::FlexAlignment &a, const std::vector<std::string> &sent_ids,
                                    int hop_ms);
decode::FlexAlignment read_alignment(const fs::path &path);

struct PipelineConfig {
  fs::path input_dir;
  fs::path output_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::vector<std::string> docs;  // empty: from bundle.json or *.txt
  std::string vocab = "vocab.txt";
  std::string speakers = "speakers.json";
  bitext::AlignParams bitext;
  double bitext_threshold = bitext::kDefaultFilterThreshold;
  lm::TrainOptions lm;
  double lm_lambda = 0.7;
  anchor::FirstPassOptions first_pass;
  int vad_min_gap = 30;
  double skip_weight = -8.0;
  double window_s = 60.0;
  double overlap_s = 20.0;
  std::optional<double> flex_beam;
  double emission_floor = -20.0;  // log domain, used for windows with no path
  quality::Thresholds thresholds;
  std::vector<double> sample_edges;  // empty: no labeling sheet
  int sample_per_bin = 0;
  std::vector<splits::SplitSpec> splits = {{splits::kTrain, 1.0, false, false}};
  splits::SplitOptions split_options;
};

PipelineConfig config_from_json(const nlohmann::json &j, const fs::path &base_dir);
Json to_json(const PipelineConfig &c);

struct RunReport {
  std::vector<std::string> stages;
  std::map<std::string, int> counts;
};

// Runs prep-text, bitext-align, train-lm, first-pass, flex-align, filter and
// split in order, each into its own directory with a MANIFEST.json.
RunReport run_pipeline(const PipelineConfig &config);

struct ValidationResult {
  int checked = 0;
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};

// Every triplet must come from a kept bitext pair, match the flex spans of
// its sentences and pass the quality thresholds recorded by the run.
ValidationResult validate_run(const fs::path &run_dir);

struct EvalResult {
  synth::Scores totals;
  int triplets = 0;
  int triplets_exact = 0;  // spans equal to gold
  Json to_json() const;
};

EvalResult evaluate_run(const fs::path &bundle_dir, const fs::path &run_dir, int k_frames = 5);

std::string fnv1a64_file(const fs::path &path);

}  // namespace longalign::pipeline
