// include/longalign/quality.h

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
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "longalign/manifest.h"
#include "longalign/posteriors.h"

namespace longalign::quality {

// Stats of the minimal edit script turning ref into hyp. error_ratio divides
// by max(hyp_len, 1) so an empty hypothesis stays finite.
QualityStats compute_stats(std::span<const int> hyp, std::span<const int> ref);

// Best-path CTC read-out of frames [start, end): per-frame argmax, repeats
// collapsed, blanks dropped.
std::vector<int> greedy_decode(const PosteriorMatrix &post, int start, int end);

struct Thresholds {
  double cer = 0.3;
  int max_consec = 4;
  double error_ratio = 0.3;
};

inline Thresholds no_thresholds() {
  return {std::numeric_limits<double>::infinity(), std::numeric_limits<int>::max(),
          std::numeric_limits<double>::infinity()};
}

bool passes(const QualityStats &st, const Thresholds &t);

struct Partition {
  std::vector<int> accepted;
  std::vector<int> rejected;
};

Partition post_filter(std::span<const QualityStats> stats, const Thresholds &t);

struct Sample {
  int index = 0;
  int bin = 0;
  bool operator==(const Sample &) const = default;
};

// Bin k holds cer in [edges[k-1], edges[k]) with open outer ends, so there
// are edges.size() + 1 bins.
int cer_bin(double cer, std::span<const double> edges);
std::string bin_name(int bin, std::span<const double> edges);

std::vector<Sample> bin_sample(std::span<const double> cers, std::span<const double> edges, int per_bin,
                               std::uint64_t seed);

struct SheetRow {
  std::string utt_id;
  std::string cer_bin;
  std::string text;
  std::optional<bool> label;  // true when the pair is a correct alignment
};

void write_labeling_sheet(const std::vector<SheetRow> &rows, const std::filesystem::path &path);
std::vector<SheetRow> read_labeling_sheet(const std::filesystem::path &path);

struct PrecisionPoint {
  Thresholds thresholds;
  int labeled_accepted = 0;
  int good_accepted = 0;
  double precision = 0.0;  // 0 when nothing labeled is accepted
};

// Precision of each threshold setting over the labeled rows that have stats.
std::vector<PrecisionPoint> label_precision(std::span<const SheetRow> sheet,
                                            const std::map<std::string, QualityStats> &stats,
                                            std::span<const Thresholds> settings);

}  // namespace longalign::quality
