// tests/test_bitext.cc

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
#include "longalign/bitext.h"
#include "longalign/errors.h"
#include "longalign/rng.h"
#include "bitext_fixtures.h"

using namespace longalign;
using namespace longalign::bitext;

using namespace oracle;

TEST_CASE("step shapes") {
  CHECK(pair_types(1) == std::vector<std::pair<int, int>>{{1, 1}, {1, 0}, {0, 1}});
  CHECK(pair_types(3) == std::vector<std::pair<int, int>>{{1, 1}, {1, 0}, {0, 1}, {1, 2}, {2, 1}, {1, 3}, {3, 1}});
}

TEST_CASE("identical documents align on the diagonal") {
  Rows rows(5, std::vector<float>(5, 0.0f));
  for (int i = 0; i < 5; ++i) rows[i][i] = 1.0f;
  const EmbeddingSet s = make_set(rows, 4);
  const Alignment a = align_sentences(s, s);
  REQUIRE(a.pairs.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(a.pairs[i].src == Span{i, 1});
    CHECK(a.pairs[i].tgt == Span{i, 1});
    CHECK(a.pairs[i].cost == doctest::Approx(0.0).epsilon(1e-6));
  }
}

TEST_CASE("a deleted sentence becomes a one-to-zero pair") {
  Rng rng(21);
  const Rows src = random_rows(rng, 10, 32);
  Rows tgt = perturb(rng, src, 0.02);
  tgt.erase(tgt.begin() + 3);
  AlignParams p;
  const EmbeddingSet es = make_set(src, 4), et = make_set(tgt, 4);
  const Alignment a = align_sentences(es, et, p);
  const Alignment want = exhaustive(PairScorer(es, et, p), p.max_merge);
  CHECK(a.pairs == want.pairs);
  REQUIRE(a.pairs.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(a.pairs[i].src == Span{i, 1});
    if (i < 3) CHECK(a.pairs[i].tgt == Span{i, 1});
    if (i == 3) CHECK(a.pairs[i].tgt.len == 0);
    if (i > 3) CHECK(a.pairs[i].tgt == Span{i - 1, 1});
  }
}

TEST_CASE("full-window alignment equals the exhaustive DP") {
  for (int seed = 0; seed < 40; ++seed) {
    Rng rng(500 + seed);
    const Rows src = random_rows(rng, 20, 16);
    // Half the cases are unrelated documents, half a noisy translation with
    // merges and drops, so the paths vary.
    Rows tgt;
    if (seed % 2 == 0) {
      tgt = random_rows(rng, 20, 16);
    } else {
      const Rows near = perturb(rng, src, 0.1);
      for (int i = 0; i < 20; ++i) {
        if (rng.bernoulli(0.1)) continue;
        if (i + 1 < 20 && rng.bernoulli(0.15)) {
          std::vector<float> v(16);
          for (int x = 0; x < 16; ++x) v[x] = near[i][x] + near[i + 1][x];
          unit(v);
          tgt.push_back(v);
          ++i;
        } else {
          tgt.push_back(near[i]);
        }
      }
      while (tgt.size() < 20) tgt.push_back(random_rows(rng, 1, 16)[0]);
    }
    AlignParams p;
    p.window = 20;
    p.seed = seed;
    const EmbeddingSet es = make_set(src, p.max_merge), et = make_set(tgt, p.max_merge);
    const Alignment want = exhaustive(PairScorer(es, et, p), p.max_merge);
    const Alignment got = align_sentences(es, et, p);
    CHECK(got.total_cost == doctest::Approx(want.total_cost).epsilon(1e-12));
    CHECK(got.pairs == want.pairs);
    p.base_size = 4;  // several coarse levels
    const Alignment layered = align_sentences(es, et, p);
    CHECK(layered.total_cost == doctest::Approx(want.total_cost).epsilon(1e-12));
    CHECK(layered.pairs == want.pairs);
  }
}

TEST_CASE("narrow bands still find the path of a clean translation") {
  Rng rng(9);
  const Rows src = random_rows(rng, 300, 24);
  Rows tgt = perturb(rng, src, 0.05);
  tgt.erase(tgt.begin() + 100);
  tgt.erase(tgt.begin() + 200);
  AlignParams p;
  p.base_size = 16;
  p.window = 4;
  const EmbeddingSet es = make_set(src, 2), et = make_set(tgt, 2);
  p.max_merge = 2;
  const Alignment got = align_sentences(es, et, p);
  const Alignment want = exhaustive(PairScorer(es, et, p), p.max_merge);
  CHECK(got.total_cost == doctest::Approx(want.total_cost).epsilon(1e-9));
  CHECK(got.pairs == want.pairs);
}

TEST_CASE("pairs tile both documents in order") {
  Rng rng(4);
  const Rows src = random_rows(rng, 37, 8), tgt = random_rows(rng, 29, 8);
  AlignParams p;
  p.base_size = 8;
  const Alignment a = align_sentences(make_set(src, 4), make_set(tgt, 4), p);
  int i = 0, j = 0;
  double total = 0.0;
  for (const auto &pair : a.pairs) {
    CHECK(pair.src.start == i);
    CHECK(pair.tgt.start == j);
    CHECK(pair.src.len + pair.tgt.len > 0);
    i += pair.src.len;
    j += pair.tgt.len;
    total += pair.cost;
  }
  CHECK(i == 37);
  CHECK(j == 29);
  CHECK(a.total_cost == doctest::Approx(total).epsilon(1e-9));
}

TEST_CASE("embedding problems are reported") {
  Rng rng(1);
  const EmbeddingSet a = make_set(random_rows(rng, 4, 8), 1);
  const EmbeddingSet b = make_set(random_rows(rng, 4, 6), 1);
  CHECK_THROWS_AS(align_sentences(a, b), DimError);
  AlignParams strict;
  strict.fallback_merge = false;
  CHECK_THROWS_AS(align_sentences(a, a, strict), MissingEmbeddingError);
  strict.max_merge = 1;
  CHECK_NOTHROW(align_sentences(a, a, strict));
}

TEST_CASE("merged spans fall back to the normalized mean") {
  Rng rng(2);
  const Rows rows = random_rows(rng, 6, 8);
  const EmbeddingSet full = make_set(rows, 3), singles = make_set(rows, 1);
  AlignParams p;
  const PairScorer with(full, full, p), without(singles, singles, p);
  CHECK(with.distance(1, 2, 3, 1) == doctest::Approx(without.distance(1, 2, 3, 1)).epsilon(1e-6));
  CHECK(with.cost(0, 0, 2, 1) == p.penalty_ins);
  CHECK(with.cost(2, 1, 0, 0) == p.penalty_del);
}

TEST_CASE("baseline is seeded") {
  Rng rng(3);
  const EmbeddingSet a = make_set(random_rows(rng, 30, 8), 1), b = make_set(random_rows(rng, 30, 8), 1);
  CHECK(random_pair_baseline(a, b, 5) == random_pair_baseline(a, b, 5));
  CHECK(random_pair_baseline(a, b, 5) > 0.5);
}

TEST_CASE("filter keeps costs at the threshold") {
  CHECK(kDefaultFilterThreshold == 0.627);
  std::vector<AlignmentPair> pairs{{{0, 1}, {0, 1}, 0.1}, {{1, 1}, {1, 1}, 0.627}, {{2, 1}, {2, 1}, 0.7}};
  const auto r = filter_alignments(pairs);
  REQUIRE(r.kept.size() == 2);
  CHECK(r.kept[0].cost == 0.1);
  CHECK(r.kept[1].cost == 0.627);
  REQUIRE(r.dropped.size() == 1);
  CHECK(r.dropped[0].cost == 0.7);
  CHECK(filter_alignments(pairs, std::numeric_limits<double>::infinity()).kept.size() == 3);
}

TEST_CASE("filter equals a predicate oracle") {
  Rng rng(6);
  std::vector<AlignmentPair> pairs(1000);
  for (int i = 0; i < 1000; ++i) pairs[i] = {{i, 1}, {i, 1}, rng.uniform() * 1.5};
  pairs[17].cost = 0.627;
  const auto r = filter_alignments(pairs, 0.627);
  std::vector<AlignmentPair> kept, dropped;
  for (const auto &p : pairs) (p.cost <= 0.627 ? kept : dropped).push_back(p);
  CHECK(r.kept == kept);
  CHECK(r.dropped == dropped);
}
