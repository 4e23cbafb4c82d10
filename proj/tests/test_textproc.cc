// tests/test_textproc.cc

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

#include <regex>

#include "doctest.h"
#include "longalign/errors.h"
#include "longalign/jsonl.h"
#include "longalign/rng.h"
#include "longalign/synth.h"
#include "longalign/textproc.h"
#include "test_util.h"

using namespace longalign;
using namespace longalign::textproc;

namespace {

std::vector<std::string> texts_of(const std::vector<Sentence> &s) {
  std::vector<std::string> out;
  for (const auto &x : s) out.push_back(x.text);
  return out;
}

std::wstring wide(const std::string &s) {
  const std::u32string u = decode_utf8(s);
  return std::wstring(u.begin(), u.end());
}

std::string narrow(const std::wstring &w) { return encode_utf8(std::u32string(w.begin(), w.end())); }

}  // namespace

TEST_CASE("speaker turns from name markers") {
  const auto r = extract_speaker_turns("张先生: 你好\n李女士: 再见");
  REQUIRE(r.turns.size() == 2);
  CHECK(r.turns[0].speaker_id == "张先生");
  CHECK(r.turns[0].text == "你好");
  CHECK(r.turns[1].speaker_id == "李女士");
  CHECK(r.turns[1].text == "再见");
  CHECK(r.turns[1].order == 1);
  CHECK(r.dropped_lines == 0);
}

TEST_CASE("text before the first marker is dropped and counted") {
  const auto r = extract_speaker_turns("会议记录\n\n第二行\n主席：开会。\n继续讲。\n");
  CHECK(r.dropped_lines == 2);
  REQUIRE(r.turns.size() == 1);
  CHECK(r.turns[0].speaker_id == "主席");
  CHECK(r.turns[0].text == "开会。\n继续讲。");
  CHECK_THROWS_AS(extract_speaker_turns("没有标记的文本。"), NoSpeakerMarkersError);
  CHECK_THROWS_AS(extract_speaker_turns(""), NoSpeakerMarkersError);
}

TEST_CASE("marker names are bounded in length") {
  MarkerRule rule;
  rule.max_name_chars = 3;
  const auto r = extract_speaker_turns("甲: 一\n这是一个很长的句子: 二", rule);
  REQUIRE(r.turns.size() == 1);
  CHECK(r.turns[0].text == "一\n这是一个很长的句子: 二");
}

TEST_CASE("turns of a generated transcript match the generator") {
  testing::TempDir dir;
  synth::BundleConfig c;
  c.n_docs = 1;
  c.size.n_sentences = 150;
  synth::write_bundle(c, 3, dir.path());
  const std::string id = synth::doc_name(0);
  std::vector<std::pair<std::string, std::string>> gold;
  for (const auto &p : read_jsonl(dir / (id + ".provenance.jsonl"))) {
    const std::string spk = p["speaker"].get<std::string>();
    const std::string text = p["written"].get<std::string>() + "。";
    if (gold.empty() || gold.back().first != spk) {
      gold.push_back({spk, text});
    } else {
      gold.back().second += text;
    }
  }
  REQUIRE(gold.size() >= 50);
  const auto r = extract_speaker_turns(read_text(dir / (id + ".txt")));
  REQUIRE(r.turns.size() == gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    CHECK(r.turns[i].speaker_id == gold[i].first);
    CHECK(r.turns[i].text == gold[i].second);
  }
}

TEST_CASE("sentence splitting") {
  CHECK(texts_of(split_sentences("甲。乙！丙")) == std::vector<std::string>{"甲。", "乙！", "丙"});
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("   ").empty());
  CHECK(texts_of(split_sentences("真的？！“好。”然后")) == std::vector<std::string>{"真的？！", "“好。”", "然后"});
  CHECK(texts_of(split_sentences("pi is 3.14. ok")) == std::vector<std::string>{"pi is 3.14.", "ok"});
}

TEST_CASE("sentence splitting agrees with a linear scan") {
  const std::vector<std::string> body{"我", "哋", "今", "日", "开", "会", "a", "1"};
  for (int seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const int len = rng.range(1, 60);
    std::string text;
    std::vector<std::string> pieces{""};
    int k = 0;
    bool prev_term = false;
    for (int i = 0; i < len; ++i) {
      if (!prev_term && rng.bernoulli(0.2)) {
        text += "。";
        pieces.back() += "。";
        pieces.push_back("");
        ++k;
        prev_term = true;
      } else {
        // Letters only next to CJK, so no word run straddles a terminator.
        const auto &c = body[rng.below(body.size())];
        text += c;
        pieces.back() += c;
        prev_term = false;
      }
    }
    if (pieces.back().empty()) pieces.pop_back();
    const auto got = texts_of(split_sentences(text));
    CHECK(static_cast<int>(got.size()) == k + (prev_term ? 0 : 1));
    CHECK(got == pieces);
  }
}

TEST_CASE("tokenization policy") {
  CHECK(tokenize("我哋ok") == std::vector<std::string>{"我", "哋", "ok"});
  CHECK(tokenize("2021年") == std::vector<std::string>{"2021", "年"});
  CHECK(tokenize("  COVID-19 嘅 don't，") == std::vector<std::string>{"COVID-19", "嘅", "don't", "，"});
  CHECK(lexical_tokens(tokenize("好，OK！")) == std::vector<std::string>{"好", "OK"});
  CHECK(is_punctuation("。"));
  CHECK(!is_punctuation("a"));
}

TEST_CASE("tokenization agrees with a regex scan") {
  const std::vector<std::string> alphabet{"我", "你", "嘅", "a", "Z", "k", "0", "9", "'", "-", " ", "，", "。", "!", "?", "（"};
  const std::wregex pattern(L"[A-Za-z0-9'\\-]+| +|[^ ]");
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::string text;
    for (int i = 0; i < 1000; ++i) text += alphabet[rng.below(alphabet.size())];
    const std::wstring w = wide(text);
    std::vector<std::string> want;
    for (auto it = std::wsregex_iterator(w.begin(), w.end(), pattern); it != std::wsregex_iterator(); ++it) {
      const std::wstring m = it->str();
      if (m[0] != L' ') want.push_back(narrow(m));
    }
    CHECK(tokenize(text) == want);
  }
}

TEST_CASE("romanization") {
  const PronLexicon lex({{"你", {"nei5"}}, {"好", {"hou2"}}});
  const std::vector<std::string> toks{"你", "好"};
  const auto r = romanize(toks, lex);
  CHECK(r.tokens == std::vector<std::string>{"nei5", "hou2"});
  CHECK(r.unmapped_count == 0);
  const std::vector<std::string> other{"嘅"};
  const auto u = romanize(other, lex);
  CHECK(u.tokens == other);
  CHECK(u.unmapped_count == 1);
}

TEST_CASE("lexicon round trip over a synthetic vocabulary") {
  testing::TempDir dir;
  const Vocab vocab = synth::synth_vocab(40);
  PronLexicon lex;
  std::map<std::string, std::string> mapping;
  for (int id = synth::kFirstTokenId; id < vocab.size(); ++id) {
    const std::string syl = "s" + std::to_string(id) + std::to_string(id % 6 + 1);
    mapping[vocab.token(id)] = syl;
    CHECK(lex.add(vocab.token(id), {syl}));
  }
  CHECK(!lex.add(vocab.token(2), {"dup"}));
  write_lexicon(lex, dir / "lex.tsv");
  const PronLexicon back = read_lexicon(dir / "lex.tsv");
  CHECK(back.entries() == lex.entries());
  std::vector<std::string> toks;
  for (int id = synth::kFirstTokenId; id < vocab.size(); ++id) toks.push_back(vocab.token(id));
  const auto r = romanize(toks, back);
  REQUIRE(r.tokens.size() == toks.size());
  for (std::size_t i = 0; i < toks.size(); ++i) CHECK(r.tokens[i] == mapping[toks[i]]);

  write_text("甲 no tab\n", dir / "bad.tsv");
  CHECK_THROWS_AS(read_lexicon(dir / "bad.tsv"), FormatError);
}

TEST_CASE("document preparation and sentence files") {
  testing::TempDir dir;
  int dropped = -1;
  const auto s = prepare_document("标题\nA: 你好。我係ok！\nB: 再见", "d1", {}, {}, &dropped);
  CHECK(dropped == 1);
  REQUIRE(s.size() == 3);
  CHECK(s[0].sent_id == "d1-00000");
  CHECK(s[2].sent_id == "d1-00002");
  CHECK(s[1].speaker_id == "A");
  CHECK(s[1].turn_ref == 0);
  CHECK(s[2].turn_ref == 1);
  CHECK(s[1].tokens == std::vector<std::string>{"我", "係", "ok", "！"});
  write_sentences(s, dir / "s.jsonl");
  const auto back = read_sentences(dir / "s.jsonl");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].sent_id == s[i].sent_id);
    CHECK(back[i].speaker_id == s[i].speaker_id);
    CHECK(back[i].turn_ref == s[i].turn_ref);
    CHECK(back[i].text == s[i].text);
    CHECK(back[i].tokens == s[i].tokens);
  }
}

TEST_CASE("utf-8 decoding") {
  CHECK(decode_utf8("a你") == std::u32string{U'a', U'你'});
  CHECK(decode_utf8("\xff") == std::u32string{U'�'});
  CHECK(encode_utf8(U'你') == "你");
  CHECK(is_cjk_ideograph(U'你'));
  CHECK(!is_cjk_ideograph(U'a'));
}
