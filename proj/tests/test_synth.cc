// tests/test_synth.cc

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
#include <limits>
#include <set>

#include "doctest.h"
#include "longalign/embeddings.h"
#include "longalign/errors.h"
#include "longalign/jsonl.h"
#include "longalign/rng.h"
#include "longalign/synth.h"
#include "test_util.h"

using namespace longalign;
using namespace longalign::synth;

namespace {

std::vector<int> collapse(const std::vector<int> &frames) {
  std::vector<int> out;
  int prev = 0;
  for (int s : frames) {
    if (s != 0 && s != prev) out.push_back(s);
    prev = s;
  }
  return out;
}

decode::FlexAlignment perfect(const Gold &g) {
  decode::FlexAlignment a;
  for (const auto &s : g.sentences) {
    decode::SentenceAlignment x;
    if (!s.unspoken) {
      x.status = decode::SentenceStatus::kAligned;
      x.start_frame = s.start_frame;
      x.end_frame = s.end_frame;
    }
    a.sentences.push_back(x);
  }
  return a;
}

}  // namespace

TEST_CASE("zero noise gives the spoken text and one-hot posteriors") {
  MeetingSize size;
  size.n_sentences = 20;
  const Meeting m = gen_meeting({}, size, 1);
  std::vector<int> spoken;
  for (const auto &s : m.sentences) {
    CHECK(s.written == s.spoken);
    CHECK(s.edits.empty());
    CHECK(!s.unspoken);
    CHECK(static_cast<int>(s.spoken.size()) >= size.min_sentence_len);
    CHECK(static_cast<int>(s.spoken.size()) <= size.max_sentence_len);
    spoken.insert(spoken.end(), s.spoken.begin(), s.spoken.end());
  }
  CHECK(m.post.vocab_size() == size.vocab_size + kFirstTokenId);
  CHECK(m.post.hop_ms() == kHopMs);
  for (int t = 0; t < m.post.frames(); ++t) {
    int zeros = 0;
    for (int v = 0; v < m.post.vocab_size(); ++v) {
      if (m.post(t, v) == 0.0f) {
        ++zeros;
        CHECK(v == m.frame_symbols[t]);
      } else {
        CHECK(m.post(t, v) == -std::numeric_limits<float>::infinity());
      }
    }
    CHECK(zeros == 1);
  }
  CHECK(collapse(m.frame_symbols) == spoken);
  CHECK(m.frame_symbols.front() == 0);
  CHECK(m.frame_symbols.back() == 0);
}

TEST_CASE("unspoken sentences are absent from the emissions") {
  NoiseParams p;
  p.p_unspoken = 0.2;
  MeetingSize size;
  int flagged = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const Meeting m = gen_meeting(p, size, seed);
    CHECK(m.sentences.size() == 10);
    std::vector<int> spoken;
    for (const auto &s : m.sentences) {
      if (s.unspoken) {
        ++flagged;
        CHECK(s.start_frame == -1);
        continue;
      }
      spoken.insert(spoken.end(), s.spoken.begin(), s.spoken.end());
      CHECK(collapse({m.frame_symbols.begin() + s.start_frame, m.frame_symbols.begin() + s.end_frame}) == s.spoken);
    }
    CHECK(collapse(m.frame_symbols) == spoken);
  }
  CHECK(flagged > 0);
}

TEST_CASE("certain reorder swaps a two-token sentence") {
  NoiseParams p;
  p.p_reorder = 1.0;
  MeetingSize size;
  size.n_sentences = 5;
  size.min_sentence_len = 2;
  size.max_sentence_len = 2;
  const Meeting m = gen_meeting(p, size, 4);
  for (const auto &s : m.sentences) {
    REQUIRE(s.edits.size() == 1);
    CHECK(s.edits[0].kind == Edit::Kind::kReorder);
    CHECK(s.edits[0].pos == 0);
    CHECK(s.edits[0].other == 1);
    CHECK(s.written == std::vector<int>{s.spoken[1], s.spoken[0]});
  }
}

TEST_CASE("edits undo to the spoken form") {
  const NoiseParams p{0.1, 0.1, 0.1, 0.2};
  MeetingSize size;
  size.n_sentences = 100;
  const Meeting m = gen_meeting(p, size, 9);
  int subs = 0, reorders = 0;
  for (const auto &s : m.sentences) {
    CHECK(reconstruct_spoken(s) == s.spoken);
    for (const auto &e : s.edits) (e.kind == Edit::Kind::kSub ? subs : reorders)++;
  }
  CHECK(subs > 0);
  CHECK(reorders > 0);
  CHECK_NOTHROW(m.post.check_normalized());
  for (int t = 0; t < m.post.frames(); ++t) {
    const auto row = m.post.row(t);
    CHECK(std::max_element(row.begin(), row.end()) - row.begin() == m.frame_symbols[t]);
  }
}

TEST_CASE("generation is seeded") {
  const NoiseParams p{0.1, 0.1, 0.1, 0.1};
  MeetingSize size;
  const Meeting a = gen_meeting(p, size, 5), b = gen_meeting(p, size, 5), c = gen_meeting(p, size, 6);
  CHECK(a.post.bit_equal(b.post));
  CHECK(a.frame_symbols == b.frame_symbols);
  CHECK(a.frame_symbols != c.frame_symbols);
  CHECK_THROWS_AS(gen_meeting({1.5}, size, 1), ConfigError);
}

TEST_CASE("generated posteriors survive a file round trip") {
  testing::TempDir dir;
  MeetingSize size;
  const Meeting m = gen_meeting({0.0, 0.0, 0.0, 0.2}, size, 3);
  write_posteriors(m.post, dir / "m.lpost");
  CHECK(read_posteriors(dir / "m.lpost").bit_equal(m.post));
}

TEST_CASE("scores of perfect and all-skip predictions") {
  NoiseParams p;
  p.p_unspoken = 0.3;
  MeetingSize size;
  size.n_sentences = 30;
  const Gold g = gold_of(gen_meeting(p, size, 2), "d");
  const Scores s = score_alignment(perfect(g), g, 0);
  CHECK(s.boundary_accuracy == 1.0);
  CHECK(s.skip_precision == 1.0);
  CHECK(s.skip_recall == 1.0);

  Gold half;
  for (int i = 0; i < 10; ++i) half.sentences.push_back({"s" + std::to_string(i), i % 2 == 0, 10 * i, 10 * i + 5});
  decode::FlexAlignment skip_all;
  skip_all.sentences.resize(10);
  const Scores h = score_alignment(skip_all, half, 5);
  CHECK(h.skip_recall == 1.0);
  CHECK(h.skip_precision == 0.5);
  CHECK(h.boundary_accuracy == 0.0);

  skip_all.sentences.pop_back();
  CHECK_THROWS_AS(score_alignment(skip_all, half, 5), UniverseMismatchError);
}

TEST_CASE("scores equal a direct recount") {
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    NoiseParams p;
    p.p_unspoken = 0.2;
    MeetingSize size;
    size.n_sentences = 25;
    const Gold g = gold_of(gen_meeting(p, size, seed), "d");
    decode::FlexAlignment pred = perfect(g);
    for (auto &s : pred.sentences) {
      if (rng.bernoulli(0.2)) {
        s.status = s.status == decode::SentenceStatus::kAligned ? decode::SentenceStatus::kSkipped
                                                                : decode::SentenceStatus::kAligned;
        s.start_frame = rng.range(0, 100);
        s.end_frame = s.start_frame + rng.range(1, 30);
      } else if (s.status == decode::SentenceStatus::kAligned) {
        s.start_frame += rng.range(-8, 8);
        s.end_frame += rng.range(-8, 8);
      }
    }
    const int k = rng.range(0, 6);
    int spoken = 0, hits = 0, unspoken = 0, skips = 0, right_skips = 0;
    for (std::size_t i = 0; i < g.sentences.size(); ++i) {
      const bool skipped = pred.sentences[i].status == decode::SentenceStatus::kSkipped;
      skips += skipped;
      unspoken += g.sentences[i].unspoken;
      right_skips += skipped && g.sentences[i].unspoken;
      if (!g.sentences[i].unspoken) {
        ++spoken;
        hits += !skipped && std::abs(pred.sentences[i].start_frame - g.sentences[i].start_frame) <= k &&
                std::abs(pred.sentences[i].end_frame - g.sentences[i].end_frame) <= k;
      }
    }
    const Scores s = score_alignment(pred, g, k);
    CHECK(s.boundary_accuracy == (spoken ? static_cast<double>(hits) / spoken : 1.0));
    CHECK(s.skip_precision == (skips ? static_cast<double>(right_skips) / skips : 1.0));
    CHECK(s.skip_recall == (unspoken ? static_cast<double>(right_skips) / unspoken : 1.0));
  }
}

TEST_CASE("gold json round trip") {
  NoiseParams p;
  p.p_unspoken = 0.3;
  const Gold g = gold_of(gen_meeting(p, {}, 3), "doc007");
  CHECK(g.sentences[0].sent_id == "doc007-00000");
  const Gold back = gold_from_json(nlohmann::json::parse(to_json(g).dump()));
  CHECK(back.hop_ms == g.hop_ms);
  CHECK(back.sentences == g.sentences);
}

TEST_CASE("bundle files") {
  testing::TempDir a, b;
  BundleConfig c;
  c.n_docs = 3;
  c.noise = {0.05, 0.05, 0.1, 0.1};
  c.size.n_sentences = 15;
  write_bundle(c, 11, a.path(), 1);
  write_bundle(c, 11, b.path(), 3);
  for (const char *f : {"vocab.txt", "lexicon.tsv", "speakers.json", "bundle.json"}) {
    CHECK(std::filesystem::exists(a / f));
    CHECK(read_text(a / f) == read_text(b / f));
  }
  for (int d = 0; d < 3; ++d) {
    const std::string id = doc_name(d);
    for (const std::string ext : {".txt", ".tgt.txt", ".src.lemb", ".src.lemb.jsonl", ".tgt.lemb", ".tgt.lemb.jsonl",
                                  ".lpost", ".gold.json", ".provenance.jsonl"}) {
      REQUIRE(std::filesystem::exists(a / (id + ext)));
      CHECK(read_text(a / (id + ext)) == read_text(b / (id + ext)));
    }
    const EmbeddingSet src = read_embeddings(a / (id + ".src.lemb"));
    CHECK(src.num_sentences() == 15);
    CHECK(src.dim() == c.emb_dim);
    CHECK(src.find(0, c.max_merge).has_value());
    const PosteriorMatrix post = read_posteriors(a / (id + ".lpost"));
    const Gold g = gold_from_json(read_json(a / (id + ".gold.json")));
    CHECK(g.sentences.size() == 15);
    for (const auto &s : g.sentences) {
      if (!s.unspoken) CHECK(s.end_frame <= post.frames());
    }
  }
  const auto spk = read_json(a / "speakers.json");
  CHECK(spk.size() == static_cast<std::size_t>(c.n_speakers_total));
  const BundleConfig back = bundle_config_from_json(read_json(a / "bundle.json")["config"]);
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("synthetic manifest rows") {
  const auto rows = synthetic_manifest(20, 8, 3);
  std::set<std::string> docs;
  for (const auto &r : rows) {
    CHECK_NOTHROW(validate_row(r));
    CHECK(r.gender != Gender::kUnknown);
    CHECK(r.duration_s >= 3.0);
    CHECK(r.duration_s <= 15.0);
    docs.insert(r.doc_id);
  }
  CHECK(docs.size() == 20);
  CHECK(synthetic_manifest(20, 8, 3) == rows);
}
