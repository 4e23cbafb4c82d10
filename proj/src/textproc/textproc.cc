// src/textproc/textproc.cc

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

#include "longalign/textproc.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "longalign/errors.h"
#include "longalign/jsonl.h"

namespace longalign::textproc {

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xe0) == 0xc0) {
      len = 2;
      cp = b0 & 0x1f;
    } else if ((b0 & 0xf0) == 0xe0) {
      len = 3;
      cp = b0 & 0x0f;
    } else if ((b0 & 0xf8) == 0xf0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= text.size();
    for (int k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xc0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3f);
    }
    if (!ok) {
      out.push_back(U'\uFFFD');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(char32_t cp) {
  std::string s;
  if (cp < 0x80) {
    s += static_cast<char>(cp);
  } else if (cp < 0x800) {
    s += static_cast<char>(0xc0 | (cp >> 6));
    s += static_cast<char>(0x80 | (cp & 0x3f));
  } else if (cp < 0x10000) {
    s += static_cast<char>(0xe0 | (cp >> 12));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    s += static_cast<char>(0x80 | (cp & 0x3f));
  } else {
    s += static_cast<char>(0xf0 | (cp >> 18));
    s += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    s += static_cast<char>(0x80 | (cp & 0x3f));
  }
  return s;
}

std::string encode_utf8(std::u32string_view text) {
  std::string s;
  s.reserve(text.size() * 3);
  for (char32_t cp : text) s += encode_utf8(cp);
  return s;
}

bool is_cjk_ideograph(char32_t cp) {
  return (cp >= 0x4e00 && cp <= 0x9fff) || (cp >= 0x3400 && cp <= 0x4dbf) ||
         (cp >= 0xf900 && cp <= 0xfaff) || (cp >= 0x20000 && cp <= 0x3134f) || cp == 0x3007;
}

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f' ||
         cp == 0xa0 || cp == 0x3000 || (cp >= 0x2000 && cp <= 0x200b);
}

namespace {

bool is_word_char(char32_t cp) {
  return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') ||
         cp == '\'' || cp == '-';
}

bool is_ascii_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

std::u32string trim(std::u32string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::u32string(s.substr(b, e - b));
}

// Length in codepoints of the "NAME:" marker at the start of line, 0 if none.
std::size_t marker_length(std::u32string_view line, const std::vector<std::u32string> &colons,
                          int max_name_chars, std::u32string *name) {
  for (std::size_t i = 0; i < line.size() && i <= static_cast<std::size_t>(max_name_chars); ++i) {
    for (const auto &c : colons) {
      if (i > 0 && line.substr(i, c.size()) == c) {
        *name = std::u32string(line.substr(0, i));
        return i + c.size();
      }
    }
    if (is_space(line[i])) return 0;
  }
  return 0;
}

}  // namespace

TurnExtraction extract_speaker_turns(std::string_view raw_text, const MarkerRule &rule) {
  std::vector<std::u32string> colons;
  for (const auto &c : rule.colons) colons.push_back(decode_utf8(c));

  TurnExtraction result;
  std::u32string current;
  bool have_turn = false;
  auto flush = [&]() {
    if (have_turn) result.turns.back().text = encode_utf8(trim(current));
    current.clear();
  };

  const std::u32string text = decode_utf8(raw_text);
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find(U'\n', pos);
    if (nl == std::u32string::npos) nl = text.size();
    std::u32string_view line(text.data() + pos, nl - pos);

    std::u32string name;
    const std::size_t mlen = marker_length(line, colons, rule.max_name_chars, &name);
    if (mlen > 0) {
      flush();
      result.turns.push_back({encode_utf8(name), "", static_cast<int>(result.turns.size())});
      have_turn = true;
      current = std::u32string(line.substr(mlen));
    } else if (have_turn) {
      current += U'\n';
      current += line;
    } else if (!trim(line).empty()) {
      ++result.dropped_lines;
    }
    pos = nl + 1;
  }
  flush();
  if (result.turns.empty()) throw NoSpeakerMarkersError("no speaker marker found in document");
  return result;
}

std::vector<Sentence> split_sentences(std::string_view text, const SplitOptions &opts) {
  const std::u32string cps = decode_utf8(text);
  std::vector<Sentence> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    std::u32string piece = trim(std::u32string_view(cps).substr(b, e - b));
    if (piece.empty()) return;
    Sentence s;
    s.sent_id = std::to_string(out.size());
    s.text = encode_utf8(piece);
    s.tokens = tokenize(s.text);
    out.push_back(std::move(s));
  };

  std::size_t begin = 0;
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t c = cps[i];
    const bool decimal_point = c == U'.' && i > 0 && i + 1 < cps.size() && is_ascii_digit(cps[i - 1]) &&
                               is_ascii_digit(cps[i + 1]);
    if (opts.terminators.count(c) && !decimal_point) {
      std::size_t j = i + 1;
      while (j < cps.size() && opts.terminators.count(cps[j])) ++j;
      while (j < cps.size() && opts.closers.count(cps[j])) ++j;
      emit(begin, j);
      begin = i = j;
    } else {
      ++i;
    }
  }
  emit(begin, cps.size());
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  const std::u32string cps = decode_utf8(text);
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t c = cps[i];
    if (is_space(c)) {
      ++i;
    } else if (is_word_char(c)) {
      std::size_t j = i;
      while (j < cps.size() && is_word_char(cps[j])) ++j;
      tokens.push_back(encode_utf8(std::u32string_view(cps).substr(i, j - i)));
      i = j;
    } else {
      tokens.push_back(encode_utf8(c));
      ++i;
    }
  }
  return tokens;
}

bool is_punctuation(std::string_view token) {
  for (char32_t c : decode_utf8(token)) {
    if (is_cjk_ideograph(c)) return false;
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || is_ascii_digit(c)) return false;
  }
  return true;
}

std::vector<std::string> lexical_tokens(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  for (const auto &t : tokens) {
    if (!is_punctuation(t)) out.push_back(t);
  }
  return out;
}

PronLexicon::PronLexicon(std::map<std::string, std::vector<std::string>> entries)
    : entries_(std::move(entries)) {}

bool PronLexicon::add(const std::string &token, std::vector<std::string> syllables) {
  return entries_.emplace(token, std::move(syllables)).second;
}

const std::vector<std::string> *PronLexicon::find(const std::string &token) const {
  auto it = entries_.find(token);
  return it == entries_.end() ? nullptr : &it->second;
}

PronLexicon read_lexicon(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  PronLexicon lex;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 'token<TAB>syllables'");
    }
    std::istringstream rest(line.substr(tab + 1));
    std::vector<std::string> syllables;
    for (std::string s; rest >> s;) syllables.push_back(s);
    if (syllables.empty()) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": no syllables");
    lex.add(line.substr(0, tab), std::move(syllables));
  }
  return lex;
}

void write_lexicon(const PronLexicon &lexicon, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write lexicon " + path.string());
  for (const auto &[tok, syls] : lexicon.entries()) {
    out << tok << '\t';
    for (std::size_t i = 0; i < syls.size(); ++i) out << (i ? " " : "") << syls[i];
    out << '\n';
  }
}

Romanized romanize(std::span<const std::string> tokens, const PronLexicon &lexicon) {
  Romanized r;
  r.tokens.reserve(tokens.size());
  for (const auto &t : tokens) {
    if (const auto *syls = lexicon.find(t)) {
      r.tokens.insert(r.tokens.end(), syls->begin(), syls->end());
    } else {
      r.tokens.push_back(t);
      ++r.unmapped_count;
    }
  }
  return r;
}

std::string make_sentence_id(const std::string &doc_id, int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", index);
  return doc_id + "-" + buf;
}

std::vector<Sentence> prepare_document(std::string_view raw_text, const std::string &doc_id,
                                       const MarkerRule &rule, const SplitOptions &opts, int *dropped_lines) {
  const TurnExtraction turns = extract_speaker_turns(raw_text, rule);
  if (dropped_lines) *dropped_lines = turns.dropped_lines;
  std::vector<Sentence> out;
  for (const auto &turn : turns.turns) {
    for (auto &s : split_sentences(turn.text, opts)) {
      s.sent_id = make_sentence_id(doc_id, static_cast<int>(out.size()));
      s.turn_ref = turn.order;
      s.speaker_id = turn.speaker_id;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<Sentence> read_sentences(const std::filesystem::path &path) {
  std::vector<Sentence> out;
  for (const auto &j : read_jsonl(path)) {
    Sentence s;
    try {
      s.sent_id = j.at("sent_id").get<std::string>();
      s.speaker_id = j.value("speaker", "");
      s.turn_ref = j.value("turn", -1);
      s.text = j.at("text").get<std::string>();
      s.tokens = j.contains("tokens") ? j["tokens"].get<std::vector<std::string>>() : tokenize(s.text);
    } catch (const nlohmann::json::exception &e) {
      throw FormatError(path.string() + ": bad sentence row: " + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_sentences(const std::vector<Sentence> &sentences, const std::filesystem::path &path) {
  std::vector<Json> rows;
  rows.reserve(sentences.size());
  for (const auto &s : sentences) {
    Json j;
    j["sent_id"] = s.sent_id;
    j["speaker"] = s.speaker_id;
    j["turn"] = s.turn_ref;
    j["text"] = s.text;
    j["tokens"] = s.tokens;
    rows.push_back(std::move(j));
  }
  write_jsonl(rows, path);
}

}  // namespace longalign::textproc
