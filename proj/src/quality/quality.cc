// src/quality/quality.cc

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

#include "longalign/quality.h"

#include <algorithm>
#include <cstdio>

#include "longalign/anchor.h"
#include "longalign/errors.h"
#include "longalign/jsonl.h"
#include "longalign/rng.h"

namespace longalign::quality {

QualityStats compute_stats(std::span<const int> hyp, std::span<const int> ref) {
  if (ref.empty()) throw EmptyRefError("reference is empty");
  const auto ops = anchor::align_text(hyp, ref);
  QualityStats st;
  st.ref_len = static_cast<int>(ref.size());
  st.hyp_len = static_cast<int>(hyp.size());
  int run = 0;
  for (const auto &op : ops) {
    if (anchor::is_error(op)) {
      ++st.errors;
      st.max_consecutive_errors = std::max(st.max_consecutive_errors, ++run);
    } else {
      run = 0;
    }
  }
  st.cer = static_cast<double>(st.errors) / st.ref_len;
  st.error_ratio = static_cast<double>(st.errors) / std::max(st.hyp_len, 1);
  return st;
}

std::vector<int> greedy_decode(const PosteriorMatrix &post, int start, int end) {
  std::vector<int> out;
  int prev = 0;
  for (int t = std::max(start, 0); t < std::min(end, post.frames()); ++t) {
    const auto row = post.row(t);
    const int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best != 0 && best != prev) out.push_back(best);
    prev = best;
  }
  return out;
}

bool passes(const QualityStats &st, const Thresholds &t) {
  return st.cer <= t.cer && st.max_consecutive_errors <= t.max_consec && st.error_ratio <= t.error_ratio;
}

Partition post_filter(std::span<const QualityStats> stats, const Thresholds &t) {
  Partition p;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    (passes(stats[i], t) ? p.accepted : p.rejected).push_back(static_cast<int>(i));
  }
  return p;
}

int cer_bin(double cer, std::span<const double> edges) {
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), cer) - edges.begin());
}

std::string bin_name(int bin, std::span<const double> edges) {
  auto fmt = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return std::string(buf);
  };
  const std::string lo = bin == 0 ? "-inf" : fmt(edges[bin - 1]);
  const std::string hi = bin == static_cast<int>(edges.size()) ? "inf" : fmt(edges[bin]);
  return "[" + lo + "," + hi + ")";
}

std::vector<Sample> bin_sample(std::span<const double> cers, std::span<const double> edges, int per_bin,
                               std::uint64_t seed) {
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (!(edges[k - 1] < edges[k])) throw ConfigError("bin edges must be strictly increasing");
  }
  std::vector<std::vector<int>> bins(edges.size() + 1);
  for (std::size_t i = 0; i < cers.size(); ++i) bins[cer_bin(cers[i], edges)].push_back(static_cast<int>(i));
  std::vector<Sample> out;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    auto &members = bins[b];
    Rng rng(Rng::derive(seed, b));
    rng.shuffle(members);
    members.resize(std::min<std::size_t>(members.size(), std::max(per_bin, 0)));
    std::sort(members.begin(), members.end());
    for (int i : members) out.push_back({i, static_cast<int>(b)});
  }
  return out;
}

void write_labeling_sheet(const std::vector<SheetRow> &rows, const std::filesystem::path &path) {
  std::vector<Json> out;
  for (const auto &r : rows) {
    Json j;
    j["utt_id"] = r.utt_id;
    j["cer_bin"] = r.cer_bin;
    j["text"] = r.text;
    j["label"] = r.label ? Json(*r.label) : Json(nullptr);
    out.push_back(std::move(j));
  }
  write_jsonl(out, path);
}

std::vector<SheetRow> read_labeling_sheet(const std::filesystem::path &path) {
  std::vector<SheetRow> rows;
  for (const auto &j : read_jsonl(path)) {
    SheetRow r;
    try {
      r.utt_id = j.at("utt_id").get<std::string>();
      r.cer_bin = j.value("cer_bin", std::string());
      r.text = j.value("text", std::string());
    } catch (const nlohmann::json::exception &e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    const auto it = j.find("label");
    if (it != j.end() && !it->is_null()) {
      if (it->is_boolean()) {
        r.label = it->get<bool>();
      } else if (it->is_number()) {
        r.label = it->get<double>() != 0.0;
      } else if (it->is_string() && (*it == "good" || *it == "bad")) {
        r.label = *it == "good";
      } else {
        throw FormatError(path.string() + ": label for " + r.utt_id + " must be a bool, 0/1 or good/bad");
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<PrecisionPoint> label_precision(std::span<const SheetRow> sheet,
                                            const std::map<std::string, QualityStats> &stats,
                                            std::span<const Thresholds> settings) {
  std::vector<PrecisionPoint> out;
  for (const auto &t : settings) {
    PrecisionPoint p;
    p.thresholds = t;
    for (const auto &row : sheet) {
      if (!row.label) continue;
      const auto it = stats.find(row.utt_id);
      if (it == stats.end() || !passes(it->second, t)) continue;
      ++p.labeled_accepted;
      p.good_accepted += *row.label ? 1 : 0;
    }
    p.precision = p.labeled_accepted > 0 ? static_cast<double>(p.good_accepted) / p.labeled_accepted : 0.0;
    out.push_back(p);
  }
  return out;
}

}  // namespace longalign::quality
