// tests/test_splits.cc

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

#include <cmath>
#include <set>

#include "doctest.h"
#include "longalign/errors.h"
#include "longalign/splits.h"
#include "longalign/synth.h"
#include "split_check.h"

using namespace longalign;
using namespace longalign::splits;
using oracle::check;
using oracle::kFourWay;

namespace {

UtteranceManifestRow row(const std::string &doc, const std::string &spk, Gender g, double start, double dur) {
  UtteranceManifestRow r;
  r.utt_id = doc + "-" + std::to_string(static_cast<int>(start));
  r.doc_id = doc;
  r.speaker_id = spk;
  r.gender = g;
  r.start_s = start;
  r.end_s = start + dur;
  r.duration_s = dur;
  return r;
}

}  // namespace

TEST_CASE("split specs are validated") {
  CHECK_NOTHROW(validate_specs(kFourWay));
  CHECK_THROWS_AS(validate_specs(std::vector<SplitSpec>{{"dev", 1.0, true, false}}), ConfigError);
  CHECK_THROWS_AS(validate_specs(std::vector<SplitSpec>{{"train", 0.5, false, false}, {"dev", 0.4, true, false}}),
                  ConfigError);
  CHECK_THROWS_AS(validate_specs(std::vector<SplitSpec>{{"train", 0.5, false, false}, {"test", 0.5, true, false}}),
                  ConfigError);
  CHECK_THROWS_AS(validate_specs(std::vector<SplitSpec>{{"train", 0.5, false, false}, {"train", 0.5, false, false}}),
                  ConfigError);
  CHECK_THROWS_AS(validate_specs(std::vector<SplitSpec>{{"train", 1.0, true, false}}), ConfigError);
}

TEST_CASE("split specs from json") {
  const auto j = nlohmann::json::parse(R"({"splits": [
    {"name": "train", "target_fraction": 0.8},
    {"name": "test", "target_fraction": 0.2, "require_speaker_disjoint_from_train": true,
     "require_document_disjoint_from_train": true}]})");
  const auto specs = specs_from_json(j);
  REQUIRE(specs.size() == 2);
  CHECK(specs[1].name == "test");
  CHECK(specs[1].target_fraction == 0.2);
  CHECK(specs[1].speaker_disjoint);
  CHECK(specs[1].document_disjoint);
  CHECK(!specs[0].speaker_disjoint);
}

TEST_CASE("four documents with distinct speakers") {
  std::vector<UtteranceManifestRow> rows;
  for (int d = 0; d < 4; ++d) {
    const std::string doc = "d" + std::to_string(d);
    rows.push_back(row(doc, "s" + std::to_string(d), d % 2 ? Gender::kFemale : Gender::kMale, 0, 1800));
    rows.push_back(row(doc, "s" + std::to_string(d), d % 2 ? Gender::kFemale : Gender::kMale, 2000, 1800));
  }
  const std::vector<SplitSpec> specs{{"train", 0.5, false, false}, {"dev", 0.25, true, false}, {"test", 0.25, true, true}};
  const auto a = make_splits(rows, specs, 1);
  CHECK(a.report.all_constraints());
  CHECK(a.doc_split.size() == 4);
  CHECK(a.report.splits.at("train").docs == 2);
  CHECK(a.report.splits.at("dev").docs == 1);
  CHECK(a.report.splits.at("test").docs == 1);
  CHECK(a.report.splits.at("train").hours == doctest::Approx(2.0));
  const auto c = check(rows, specs, a.doc_split);
  CHECK(c.speakers_ok);
  CHECK(c.docs_ok);
}

TEST_CASE("one shared speaker makes a speaker-disjoint split infeasible") {
  std::vector<UtteranceManifestRow> rows;
  for (int d = 0; d < 6; ++d) rows.push_back(row("d" + std::to_string(d), "host", Gender::kMale, 0, 600));
  const std::vector<SplitSpec> specs{{"train", 0.8, false, false}, {"dev", 0.2, true, false}};
  try {
    make_splits(rows, specs, 1);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError &e) {
    CHECK(e.blocking().find("host") != std::string::npos);
  }
  // Document disjointness alone is fine.
  const std::vector<SplitSpec> doc_only{{"train", 0.5, false, false}, {"dev", 0.5, false, true}};
  CHECK(make_splits(rows, doc_only, 1).report.all_constraints());
}

TEST_CASE("synthetic manifest splits meet every target") {
  const auto rows = synth::synthetic_manifest(200, 50, 7);
  SplitOptions opts;
  opts.jobs = 4;
  const auto a = make_splits(rows, kFourWay, 3, opts);
  CHECK(a.report.all_constraints());
  const auto c = check(rows, kFourWay, a.doc_split);
  CHECK(c.speakers_ok);
  CHECK(c.docs_ok);
  CHECK(c.worst_gender <= 0.02);
  CHECK(c.worst_hours <= 0.10);
  CHECK(a.doc_split.size() == 200);

  opts.jobs = 1;
  const auto b = make_splits(rows, kFourWay, 3, opts);
  CHECK(b.doc_split == a.doc_split);
  CHECK(b.report.objective == a.report.objective);

  const auto rep = compute_report(rows, kFourWay, a.doc_split);
  CHECK(rep.objective == doctest::Approx(a.report.objective));
  for (const auto &[name, st] : rep.splits) CHECK(st.hours == doctest::Approx(a.report.splits.at(name).hours));

  const Json j = to_json(a);
  CHECK(j["assignment"].size() == 200);
  CHECK(j["report"]["constraints"]["test.speaker_disjoint"] == true);
}

TEST_CASE("a broken mapping is caught by the report") {
  const auto rows = synth::synthetic_manifest(60, 30, 1);
  auto a = make_splits(rows, kFourWay, 2, {1.0, 8, 1, 0.5});
  CHECK(a.report.all_constraints());
  // Move a train document whose speakers also talk in another train
  // document into test; the recomputed report has to notice.
  std::map<std::string, std::set<std::string>> doc_spk;
  for (const auto &r : rows) doc_spk[r.doc_id].insert(r.speaker_id);
  std::string moved;
  for (const auto &[d, s] : a.doc_split) {
    if (s != "train" || !moved.empty()) continue;
    for (const auto &[e, t] : a.doc_split) {
      if (e == d || t != "train") continue;
      for (const auto &x : doc_spk[d]) {
        if (doc_spk[e].count(x)) moved = d;
      }
    }
  }
  REQUIRE(!moved.empty());
  a.doc_split[moved] = "test";
  const auto rep = compute_report(rows, kFourWay, a.doc_split);
  CHECK(!rep.constraints.at("test.speaker_disjoint"));
  CHECK(!rep.all_constraints());
  auto partial = a.doc_split;
  partial.erase(partial.begin());
  CHECK(!compute_report(rows, kFourWay, partial).constraints.at("all_documents_assigned"));
}
