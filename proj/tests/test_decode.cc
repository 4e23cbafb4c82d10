// tests/test_decode.cc

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

#include "doctest.h"
#include "longalign/decode.h"
#include "longalign/errors.h"
#include "longalign/rng.h"
#include "longalign/synth.h"
#include "oracles.h"

using namespace longalign;
using namespace longalign::decode;

namespace {

const float kNegInfF = -std::numeric_limits<float>::infinity();

PosteriorMatrix one_hot(const std::vector<int> &symbols, int vocab) {
  std::vector<float> data(symbols.size() * vocab, kNegInfF);
  for (std::size_t t = 0; t < symbols.size(); ++t) data[t * vocab + symbols[t]] = 0.0f;
  return PosteriorMatrix(static_cast<int>(symbols.size()), vocab, 40, std::move(data));
}

// Random graph with at most 6 states: token arcs anywhere, epsilon arcs
// only forward, failure arcs only backward so neither can cycle.
Fsa random_graph(Rng &rng, int vocab, bool with_backoff) {
  Fsa g;
  const int n = rng.range(1, 6);
  for (int i = 0; i < n; ++i) g.add_state();
  for (int s = 0; s < n; ++s) {
    const int k = rng.range(0, 3);
    for (int i = 0; i < k; ++i) g.add_arc(s, rng.range(0, n - 1), rng.range(1, vocab - 1), oracle::dyadic(rng, 16));
    if (s + 1 < n && rng.bernoulli(0.4)) g.add_arc(s, rng.range(s + 1, n - 1), kEpsilon, oracle::dyadic(rng, 16));
    if (with_backoff && s > 0 && rng.bernoulli(0.5)) g.add_arc(s, rng.range(0, s - 1), kBackoff, oracle::dyadic(rng, 8));
    if (rng.bernoulli(0.5)) g.set_final(s, oracle::dyadic(rng, 8));
  }
  if (g.finals.empty()) g.set_final(n - 1);
  return g;
}

PosteriorMatrix random_post(Rng &rng, int frames, int vocab) {
  std::vector<float> data(frames * vocab);
  for (auto &x : data) x = rng.bernoulli(0.1) ? kNegInfF : static_cast<float>(oracle::dyadic(rng));
  return PosteriorMatrix(frames, vocab, 40, std::move(data));
}

std::vector<std::vector<int>> spoken_of(const synth::Meeting &m) {
  std::vector<std::vector<int>> out;
  for (const auto &s : m.sentences) out.push_back(s.spoken);
  return out;
}

}  // namespace

TEST_CASE("flexible graph for one two-token sentence") {
  const std::vector<std::vector<int>> sents{{2, 3}};
  const FlexGraph g = build_flexible_graph(sents, -5.0);
  CHECK(g.fsa.num_states == 3);
  REQUIRE(g.fsa.arcs.size() == 3);
  CHECK(g.fsa.arcs[0] == FsaArc{0, 1, 2, 0.0});
  CHECK(g.fsa.arcs[1] == FsaArc{1, 2, 3, 0.0});
  CHECK(g.fsa.arcs[2] == FsaArc{0, 2, kEpsilon, -5.0});
  CHECK(g.fsa.finals.size() == 1);
  CHECK(g.fsa.is_final(2));
}

TEST_CASE("flexible graph sizes follow the chain formula") {
  const std::vector<std::vector<int>> two{{2, 3}, {4, 5, 6}};
  const FlexGraph g = build_flexible_graph(two, -1.0);
  CHECK(g.fsa.num_states == 6);
  CHECK(g.fsa.arcs.size() == 7);

  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::vector<std::vector<int>> sents(rng.range(1, 12));
    int total = 0;
    for (auto &s : sents) {
      s.resize(rng.range(1, 9));
      for (int &t : s) t = rng.range(1, 50);
      total += static_cast<int>(s.size());
    }
    const FlexGraph r = build_flexible_graph(sents, -8.0);
    CHECK(r.fsa.num_states == 1 + total);
    CHECK(static_cast<int>(r.fsa.arcs.size()) == total + static_cast<int>(sents.size()));
    CHECK_NOTHROW(r.fsa.validate());
  }
}

TEST_CASE("flexible graph rejects empty input") {
  CHECK_THROWS_AS(build_flexible_graph(std::vector<std::vector<int>>{}, -1.0), EmptyInputError);
  CHECK_THROWS_AS(build_flexible_graph(std::vector<std::vector<int>>{{2}, {}}, -1.0), EmptyInputError);
}

TEST_CASE("factor transducer accepts every substring") {
  const Fsa ab = build_factor_transducer(std::vector<std::vector<int>>{{2, 3}});
  CHECK(ab.num_states == 3);
  CHECK(ab.finals.size() == 3);
  int eps = 0;
  for (const auto &a : ab.arcs) {
    if (a.label == kEpsilon) {
      CHECK(a.src == 0);
      CHECK((a.dst == 1 || a.dst == 2));
      ++eps;
    }
  }
  CHECK(eps == 2);

  const Fsa one = build_factor_transducer(std::vector<std::vector<int>>{{7}});
  CHECK(one.num_states == 2);
  CHECK(one.arcs.size() == 2);
  CHECK(one.finals.size() == 2);
  CHECK_THROWS_AS(build_factor_transducer(std::vector<std::vector<int>>{}), EmptyInputError);

  const Fsa f = build_factor_transducer(std::vector<std::vector<int>>{{2, 3}, {4, 5}});
  const oracle::GraphWalker w(f);
  const std::vector<int> full{2, 3, 4, 5};
  for (std::size_t i = 0; i <= full.size(); ++i) {
    for (std::size_t j = i; j <= full.size(); ++j) {
      const std::vector<int> sub(full.begin() + i, full.begin() + j);
      CHECK(best_path_score(f, sub) == 0.0);
    }
  }
  CHECK(best_path_score(f, std::vector<int>{3, 2}) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("viterbi on a forced path") {
  Fsa g;
  g.add_state();
  g.add_state();
  g.add_arc(0, 1, 2);
  g.set_final(1);
  const DecodeResult r = viterbi_align(one_hot({0, 2, 0}, 3), g);
  REQUIRE(r.labels == std::vector<int>{2});
  CHECK(r.spans[0] == std::pair<int, int>{1, 2});
  CHECK(r.total_logprob == 0.0);
  CHECK(frame_labels(r, 3) == std::vector<int>{0, 2, 0});
}

TEST_CASE("viterbi needs a blank between equal labels") {
  Fsa g;
  for (int i = 0; i < 3; ++i) g.add_state();
  g.add_arc(0, 1, 2);
  g.add_arc(1, 2, 2);
  g.set_final(2);
  CHECK_THROWS_AS(viterbi_align(one_hot({2, 2}, 3), g), NoPathError);
  const DecodeResult r = viterbi_align(one_hot({2, 0, 2}, 3), g);
  CHECK(r.labels == std::vector<int>{2, 2});
}

TEST_CASE("viterbi reports missing paths") {
  Fsa g;
  g.add_state();
  g.add_state();
  g.add_arc(0, 1, 2);
  g.set_final(1);
  CHECK_THROWS_AS(viterbi_align(one_hot({0, 0, 0}, 3), g), NoPathError);
  CHECK_THROWS_AS(viterbi_align(one_hot({0, 3, 0}, 4), g), NoPathError);
}

TEST_CASE("viterbi matches brute-force enumeration") {
  int paths = 0;
  for (int seed = 0; seed < 200; ++seed) {
    Rng rng(1000 + seed);
    const int vocab = rng.range(2, 4);
    const int frames = rng.range(1, 8);
    const Fsa g = random_graph(rng, vocab, seed % 2 == 1);
    const PosteriorMatrix post = random_post(rng, frames, vocab);
    const double want = oracle::brute_force_decode(post, g);
    if (want == oracle::kNegInf) {
      CHECK_THROWS_AS(viterbi_align(post, g), NoPathError);
      continue;
    }
    ++paths;
    const DecodeResult r = viterbi_align(post, g);
    CHECK(r.total_logprob == want);
    // The returned path has to be worth what it claims.
    double emit = 0.0;
    const auto fl = frame_labels(r, frames);
    for (int t = 0; t < frames; ++t) emit += post(t, fl[t]);
    CHECK(emit + oracle::GraphWalker(g).score(r.labels) == want);
  }
  CHECK(paths > 50);
}

TEST_CASE("best path score agrees with an independent graph walk") {
  for (int seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const Fsa g = random_graph(rng, 4, true);
    std::vector<int> labels(rng.range(0, 6));
    for (int &l : labels) l = rng.range(1, 3);
    CHECK(best_path_score(g, labels) == oracle::GraphWalker(g).score(labels));
  }
}

TEST_CASE("noiseless posteriors recover the gold path") {
  for (int seed = 0; seed < 5; ++seed) {
    synth::MeetingSize size;
    size.n_sentences = 12;
    size.vocab_size = 30;
    const auto m = synth::gen_meeting({}, size, seed);
    const auto sents = spoken_of(m);
    const FlexAlignment a = flexible_align(m.post, sents, -8.0);
    for (std::size_t i = 0; i < sents.size(); ++i) {
      CHECK(a.sentences[i].status == SentenceStatus::kAligned);
      CHECK(a.sentences[i].start_frame == m.sentences[i].start_frame);
      CHECK(a.sentences[i].end_frame == m.sentences[i].end_frame);
      CHECK(a.sentences[i].conf == doctest::Approx(1.0));
    }
    const FlexGraph g = build_flexible_graph(sents, -8.0);
    CHECK(frame_labels(viterbi_align(m.post, g.fsa), m.post.frames()) == m.frame_symbols);
  }
}

TEST_CASE("windows cover the audio with the requested overlap") {
  const auto w = make_windows(4000, 1500, 500);
  REQUIRE(!w.empty());
  CHECK(w.front().first == 0);
  CHECK(w.back().second == 4000);
  for (std::size_t i = 1; i < w.size(); ++i) {
    CHECK(w[i].first < w[i - 1].second);
    CHECK(w[i - 1].second - w[i].first <= 500);
  }
  CHECK(make_windows(100, 1500, 500) == std::vector<std::pair<int, int>>{{0, 100}});
}

TEST_CASE("short audio gives the whole-utterance answer") {
  synth::MeetingSize size;
  size.n_sentences = 8;
  const auto m = synth::gen_meeting({0.0, 0.0, 0.0, 0.3}, size, 3);
  const auto sents = spoken_of(m);
  WindowOptions win;
  win.len_frames = m.post.frames() + 10;
  win.overlap_frames = 0;
  const auto windowed = flex_align_window(m.post, sents, -8.0, win), whole = flexible_align(m.post, sents, -8.0);
  REQUIRE(windowed.sentences.size() == whole.sentences.size());
  for (std::size_t i = 0; i < sents.size(); ++i) {
    CHECK(windowed.sentences[i].status == whole.sentences[i].status);
    CHECK(windowed.sentences[i].start_frame == whole.sentences[i].start_frame);
    CHECK(windowed.sentences[i].end_frame == whole.sentences[i].end_frame);
    CHECK(windowed.sentences[i].conf == whole.sentences[i].conf);
    CHECK(windowed.sentences[i].window == 0);
  }
}

TEST_CASE("sliding windows over a five minute stream") {
  synth::MeetingSize size;
  size.n_sentences = 150;
  size.vocab_size = 200;
  const auto m = synth::gen_meeting({}, size, 11);
  REQUIRE(m.post.frames() * synth::kHopMs >= 300 * 1000);
  const auto sents = spoken_of(m);
  WindowOptions win;
  win.len_frames = 1500;
  win.overlap_frames = 500;
  const auto whole = flexible_align(m.post, sents, -8.0);
  int failed = -1;
  const auto windowed = flex_align_window(m.post, sents, -8.0, win, {}, &failed);
  CHECK(failed == 0);
  REQUIRE(windowed.sentences.size() == whole.sentences.size());
  for (std::size_t i = 0; i < sents.size(); ++i) {
    CHECK(windowed.sentences[i].status == whole.sentences[i].status);
    CHECK(windowed.sentences[i].start_frame == whole.sentences[i].start_frame);
    CHECK(windowed.sentences[i].end_frame == whole.sentences[i].end_frame);
  }
  win.jobs = 4;
  CHECK(flex_align_window(m.post, sents, -8.0, win).sentences == windowed.sentences);
}

TEST_CASE("inserted unspoken sentences are the ones skipped") {
  synth::MeetingSize size;
  size.n_sentences = 20;
  size.vocab_size = 50;
  const auto m = synth::gen_meeting({}, size, 5);
  auto sents = spoken_of(m);
  Rng rng(77);
  std::vector<int> extra_a(7), extra_b(9);
  for (int &t : extra_a) t = rng.range(2, 51);
  for (int &t : extra_b) t = rng.range(2, 51);
  sents.insert(sents.begin() + 13, extra_b);
  sents.insert(sents.begin() + 4, extra_a);  // ends up at 4 and 14
  WindowOptions win;
  win.len_frames = 300;
  win.overlap_frames = 100;
  const auto a = flex_align_window(m.post, sents, -8.0, win);
  for (int i = 0; i < static_cast<int>(sents.size()); ++i) {
    const bool inserted = i == 4 || i == 14;
    CHECK(a.sentences[i].status == (inserted ? SentenceStatus::kSkipped : SentenceStatus::kAligned));
  }
}

TEST_CASE("candidate ranges restrict each window") {
  synth::MeetingSize size;
  size.n_sentences = 30;
  const auto m = synth::gen_meeting({}, size, 8);
  const auto sents = spoken_of(m);
  std::vector<std::pair<int, int>> cand;
  for (const auto &s : m.sentences) cand.push_back({std::max(0, s.start_frame - 20), s.end_frame + 20});
  WindowOptions win;
  win.len_frames = 400;
  win.overlap_frames = 150;
  const auto a = flex_align_window(m.post, sents, -8.0, win, cand);
  for (std::size_t i = 0; i < sents.size(); ++i) {
    CHECK(a.sentences[i].start_frame == m.sentences[i].start_frame);
    CHECK(a.sentences[i].end_frame == m.sentences[i].end_frame);
  }
}
