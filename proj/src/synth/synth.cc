// src/synth/synth.cc

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

#include "longalign/synth.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <thread>

#include "longalign/errors.h"
#include "longalign/rng.h"
#include "longalign/textproc.h"

namespace longalign::synth {

namespace fs = std::filesystem;

void validate(const NoiseParams &p) {
  for (double r : {p.p_sub, p.p_reorder, p.p_unspoken, p.p_acoustic}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("noise rates must lie in [0, 1]");
  }
  if (p.dur_min < 1 || p.dur_max < p.dur_min) throw ConfigError("token duration range must satisfy 1 <= min <= max");
}

std::vector<int> reconstruct_spoken(const SynthSentence &s) {
  std::vector<int> tokens = s.written;
  for (auto it = s.edits.rbegin(); it != s.edits.rend(); ++it) {
    if (it->kind == Edit::Kind::kReorder) {
      std::swap(tokens[it->pos], tokens[it->other]);
    } else {
      tokens[it->pos] = it->other;
    }
  }
  return tokens;
}

Vocab synth_vocab(int vocab_size) {
  std::vector<std::string> tokens{std::string(Vocab::kBlankToken), std::string(Vocab::kUnkToken)};
  for (int i = 0; i < vocab_size; ++i) tokens.push_back(textproc::encode_utf8(static_cast<char32_t>(0x4E00 + i)));
  return Vocab(std::move(tokens));
}

namespace {

// Order-2 generator: every history token has a handful of weighted successors.
class Generator {
 public:
  Generator(int vocab_size, Rng &rng) : vocab_size_(vocab_size), succ_(vocab_size + 1) {
    for (auto &s : succ_) {
      const int k = std::min(vocab_size, 6);
      for (int i = 0; i < k; ++i) s.push_back({kFirstTokenId + static_cast<int>(rng.below(vocab_size)), 0.5 + rng.uniform()});
    }
  }

  std::vector<int> sentence(int len, Rng &rng) const {
    std::vector<int> out;
    int prev = -1;
    for (int i = 0; i < len; ++i) {
      const auto &s = succ_[prev < 0 ? vocab_size_ : prev - kFirstTokenId];
      double total = 0.0;
      for (const auto &e : s) total += e.second;
      double x = rng.uniform() * total;
      int tok = s.back().first;
      for (const auto &e : s) {
        if ((x -= e.second) < 0.0) {
          tok = e.first;
          break;
        }
      }
      out.push_back(tok);
      prev = tok;
    }
    return out;
  }

 private:
  int vocab_size_;
  std::vector<std::vector<std::pair<int, double>>> succ_;
};

void add_noise(SynthSentence &s, const NoiseParams &p, int vocab_size, Rng &rng) {
  s.written = s.spoken;
  const int n = static_cast<int>(s.written.size());
  for (int i = 0; i < n; ++i) {
    if (!rng.bernoulli(p.p_sub) || vocab_size < 2) continue;
    int tok = kFirstTokenId + static_cast<int>(rng.below(vocab_size - 1));
    if (tok >= s.written[i]) ++tok;
    s.edits.push_back({Edit::Kind::kSub, i, s.written[i], tok});
    s.written[i] = tok;
  }
  for (int i = 0; i + 1 < n;) {
    if (!rng.bernoulli(p.p_reorder)) {
      ++i;
      continue;
    }
    const int j = (i + 2 < n && rng.bernoulli(0.5)) ? i + 2 : i + 1;
    std::swap(s.written[i], s.written[j]);
    s.edits.push_back({Edit::Kind::kReorder, i, j, 0});
    i = j + 1;
  }
}

}  // namespace

Meeting gen_meeting(const NoiseParams &params, const MeetingSize &size, std::uint64_t seed,
                    std::vector<std::string> speakers, double p_pause) {
  validate(params);
  if (size.n_speakers < 1 || size.n_sentences < 1 || size.vocab_size < 1) throw ConfigError("sizes must be >= 1");
  if (size.min_sentence_len < 1 || size.max_sentence_len < size.min_sentence_len) {
    throw ConfigError("bad sentence length range");
  }
  if (speakers.empty()) {
    for (int i = 0; i < size.n_speakers; ++i) speakers.push_back(speaker_name(i));
  }
  Rng lm_rng(Rng::derive(seed, 1)), text_rng(Rng::derive(seed, 2)), noise_rng(Rng::derive(seed, 3)),
      time_rng(Rng::derive(seed, 4));
  const Generator gen(size.vocab_size, lm_rng);

  Meeting m;
  int speaker = static_cast<int>(text_rng.below(speakers.size()));
  for (int i = 0; i < size.n_sentences; ++i) {
    if (i > 0 && speakers.size() > 1 && !text_rng.bernoulli(0.6)) {
      speaker = (speaker + 1 + static_cast<int>(text_rng.below(speakers.size() - 1))) % static_cast<int>(speakers.size());
    }
    SynthSentence s;
    s.speaker = speakers[speaker];
    s.spoken = gen.sentence(text_rng.range(size.min_sentence_len, size.max_sentence_len), text_rng);
    s.unspoken = noise_rng.bernoulli(params.p_unspoken);
    add_noise(s, params, size.vocab_size, noise_rng);
    m.sentences.push_back(std::move(s));
  }

  auto blanks = [&](int n) { m.frame_symbols.insert(m.frame_symbols.end(), n, 0); };
  blanks(time_rng.range(3, 8));
  bool first = true;
  for (auto &s : m.sentences) {
    if (s.unspoken) continue;
    if (!first) blanks(time_rng.bernoulli(p_pause) ? time_rng.range(30, 45) : time_rng.range(3, 10));
    first = false;
    s.start_frame = static_cast<int>(m.frame_symbols.size());
    for (int tok : s.spoken) {
      m.frame_symbols.insert(m.frame_symbols.end(), time_rng.range(params.dur_min, params.dur_max), tok);
      s.end_frame = static_cast<int>(m.frame_symbols.size());
      blanks(time_rng.range(1, 2));
    }
  }
  blanks(time_rng.range(3, 8));

  const int v = size.vocab_size + kFirstTokenId;
  const float on = static_cast<float>(std::log1p(-params.p_acoustic));
  const float off = params.p_acoustic > 0.0 ? static_cast<float>(std::log(params.p_acoustic / (v - 1)))
                                             : -std::numeric_limits<float>::infinity();
  const int frames = static_cast<int>(m.frame_symbols.size());
  std::vector<float> data(static_cast<std::size_t>(frames) * v, off);
  for (int t = 0; t < frames; ++t) data[static_cast<std::size_t>(t) * v + m.frame_symbols[t]] = on;
  m.post = PosteriorMatrix(frames, v, kHopMs, std::move(data));
  return m;
}

Gold gold_of(const Meeting &m, const std::string &doc_id) {
  Gold g;
  for (std::size_t i = 0; i < m.sentences.size(); ++i) {
    const auto &s = m.sentences[i];
    g.sentences.push_back({textproc::make_sentence_id(doc_id, static_cast<int>(i)), s.unspoken, s.start_frame,
                           s.end_frame});
  }
  return g;
}

Json to_json(const Gold &g) {
  Json j;
  j["hop_ms"] = g.hop_ms;
  j["sentences"] = Json::array();
  for (const auto &s : g.sentences) {
    j["sentences"].push_back(
        {{"sent_id", s.sent_id}, {"unspoken", s.unspoken}, {"start_frame", s.start_frame}, {"end_frame", s.end_frame}});
  }
  return j;
}

Gold gold_from_json(const nlohmann::json &j) {
  Gold g;
  try {
    g.hop_ms = j.at("hop_ms").get<int>();
    for (const auto &s : j.at("sentences")) {
      g.sentences.push_back({s.at("sent_id").get<std::string>(), s.at("unspoken").get<bool>(),
                             s.at("start_frame").get<int>(), s.at("end_frame").get<int>()});
    }
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("bad gold file: ") + e.what());
  }
  return g;
}

Scores score_alignment(const decode::FlexAlignment &pred, const Gold &gold, int k_frames) {
  if (pred.sentences.size() != gold.sentences.size()) {
    throw UniverseMismatchError("prediction has " + std::to_string(pred.sentences.size()) + " sentences, gold " +
                                std::to_string(gold.sentences.size()));
  }
  Scores sc;
  int hits = 0, true_skips = 0;
  for (std::size_t i = 0; i < gold.sentences.size(); ++i) {
    const auto &g = gold.sentences[i];
    const auto &p = pred.sentences[i];
    const bool skipped = p.status != decode::SentenceStatus::kAligned;
    if (g.unspoken) ++sc.unspoken;
    if (skipped) ++sc.predicted_skips;
    if (skipped && g.unspoken) ++true_skips;
    if (!g.unspoken) {
      ++sc.spoken;
      if (!skipped && std::abs(p.start_frame - g.start_frame) <= k_frames &&
          std::abs(p.end_frame - g.end_frame) <= k_frames) {
        ++hits;
      }
    }
  }
  sc.boundary_accuracy = sc.spoken > 0 ? static_cast<double>(hits) / sc.spoken : 1.0;
  sc.skip_precision = sc.predicted_skips > 0 ? static_cast<double>(true_skips) / sc.predicted_skips : 1.0;
  sc.skip_recall = sc.unspoken > 0 ? static_cast<double>(true_skips) / sc.unspoken : 1.0;
  return sc;
}

BundleConfig bundle_config_from_json(const nlohmann::json &j) {
  BundleConfig c;
  try {
    c.n_docs = j.value("n_docs", c.n_docs);
    c.n_speakers_total = j.value("n_speakers_total", c.n_speakers_total);
    c.speakers_per_doc = j.value("speakers_per_doc", c.speakers_per_doc);
    c.size.n_sentences = j.value("n_sentences", c.size.n_sentences);
    c.size.vocab_size = j.value("vocab_size", c.size.vocab_size);
    c.size.min_sentence_len = j.value("min_sentence_len", c.size.min_sentence_len);
    c.size.max_sentence_len = j.value("max_sentence_len", c.size.max_sentence_len);
    c.noise.p_sub = j.value("p_sub", c.noise.p_sub);
    c.noise.p_reorder = j.value("p_reorder", c.noise.p_reorder);
    c.noise.p_unspoken = j.value("p_unspoken", c.noise.p_unspoken);
    c.noise.p_acoustic = j.value("p_acoustic", c.noise.p_acoustic);
    if (j.contains("dur_range")) {
      c.noise.dur_min = j.at("dur_range").at(0).get<int>();
      c.noise.dur_max = j.at("dur_range").at(1).get<int>();
    }
    c.p_pause = j.value("p_pause", c.p_pause);
    c.emb_dim = j.value("emb_dim", c.emb_dim);
    c.emb_noise = j.value("emb_noise", c.emb_noise);
    c.max_merge = j.value("max_merge", c.max_merge);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("bad synth config: ") + e.what());
  }
  validate(c.noise);
  if (c.n_docs < 1 || c.n_speakers_total < 1 || c.speakers_per_doc < 1 || c.speakers_per_doc > c.n_speakers_total) {
    throw ConfigError("synth needs n_docs >= 1 and 1 <= speakers_per_doc <= n_speakers_total");
  }
  if (c.emb_dim < 2 || c.max_merge < 1) throw ConfigError("emb_dim must be >= 2 and max_merge >= 1");
  return c;
}

Json to_json(const BundleConfig &c) {
  return {{"n_docs", c.n_docs},
          {"n_speakers_total", c.n_speakers_total},
          {"speakers_per_doc", c.speakers_per_doc},
          {"n_sentences", c.size.n_sentences},
          {"vocab_size", c.size.vocab_size},
          {"min_sentence_len", c.size.min_sentence_len},
          {"max_sentence_len", c.size.max_sentence_len},
          {"p_sub", c.noise.p_sub},
          {"p_reorder", c.noise.p_reorder},
          {"p_unspoken", c.noise.p_unspoken},
          {"p_acoustic", c.noise.p_acoustic},
          {"dur_range", {c.noise.dur_min, c.noise.dur_max}},
          {"p_pause", c.p_pause},
          {"emb_dim", c.emb_dim},
          {"emb_noise", c.emb_noise},
          {"max_merge", c.max_merge}};
}

std::string doc_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "doc%03d", index);
  return buf;
}

std::string speaker_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "spk%02d", index);
  return buf;
}

namespace {

std::string target_word(int token) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%03d", token);
  return buf;
}

void normalize(std::vector<float> &v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  const double n = std::sqrt(sq);
  for (float &x : v) x = static_cast<float>(x / n);
}

EmbeddingSet make_embeddings(const std::vector<std::vector<float>> &singles, const std::string &doc_id,
                             int max_merge) {
  const int n = static_cast<int>(singles.size());
  const int d = n > 0 ? static_cast<int>(singles[0].size()) : 1;
  std::vector<float> rows;
  std::vector<EmbeddingIndexEntry> index;
  for (int len = 1; len <= max_merge; ++len) {
    for (int i = 0; i + len <= n; ++i) {
      std::vector<float> v(d, 0.0f);
      for (int k = i; k < i + len; ++k) {
        for (int x = 0; x < d; ++x) v[x] += singles[k][x];
      }
      normalize(v);
      rows.insert(rows.end(), v.begin(), v.end());
      index.push_back({textproc::make_sentence_id(doc_id, i), i, len});
    }
  }
  return EmbeddingSet(d, std::move(rows), std::move(index));
}

void write_document(const BundleConfig &c, std::uint64_t seed, int doc, const std::vector<std::string> &speakers,
                    const std::vector<int> &word_of, const fs::path &dir) {
  const std::string id = doc_name(doc);
  const std::uint64_t doc_seed = Rng::derive(seed, static_cast<std::uint64_t>(doc) + 1);
  const Meeting m = gen_meeting(c.noise, c.size, doc_seed, speakers, c.p_pause);
  const Vocab vocab = synth_vocab(c.size.vocab_size);
  Rng tr_rng(Rng::derive(doc_seed, 10)), emb_rng(Rng::derive(doc_seed, 11));

  // Transcript and translation share the turn structure.
  std::string src_text, tgt_text;
  std::vector<Json> provenance;
  for (std::size_t i = 0; i < m.sentences.size(); ++i) {
    const auto &s = m.sentences[i];
    const bool new_turn = i == 0 || m.sentences[i - 1].speaker != s.speaker;
    if (new_turn) {
      if (i > 0) {
        src_text += "\n";
        tgt_text += "\n";
      }
      src_text += s.speaker + "\xef\xbc\x9a";
      tgt_text += s.speaker + ":";
    }
    for (int tok : s.written) src_text += vocab.token(tok);
    src_text += "\xe3\x80\x82";

    std::vector<std::string> words;
    for (int tok : s.written) words.push_back(target_word(word_of[tok - kFirstTokenId]));
    for (std::size_t k = 0; k + 1 < words.size(); ++k) {
      if (tr_rng.bernoulli(0.2)) {
        std::swap(words[k], words[k + 1]);
        ++k;
      }
    }
    for (const auto &w : words) tgt_text += " " + w;
    tgt_text += ".";

    Json p;
    p["sent_id"] = textproc::make_sentence_id(id, static_cast<int>(i));
    p["speaker"] = s.speaker;
    p["unspoken"] = s.unspoken;
    std::string spoken, written;
    for (int tok : s.spoken) spoken += vocab.token(tok);
    for (int tok : s.written) written += vocab.token(tok);
    p["spoken"] = spoken;
    p["written"] = written;
    p["edits"] = Json::array();
    for (const auto &e : s.edits) {
      if (e.kind == Edit::Kind::kSub) {
        p["edits"].push_back({{"type", "sub"}, {"pos", e.pos}, {"spoken", vocab.token(e.other)},
                              {"written", vocab.token(e.written)}});
      } else {
        p["edits"].push_back({{"type", "reorder"}, {"pos", e.pos}, {"with", e.other}});
      }
    }
    provenance.push_back(std::move(p));
  }
  src_text += "\n";
  tgt_text += "\n";

  const int d = c.emb_dim;
  std::vector<std::vector<float>> src_rows, tgt_rows;
  const double scale = c.emb_noise / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < m.sentences.size(); ++i) {
    std::vector<float> u(d);
    for (float &x : u) x = static_cast<float>(emb_rng.gaussian());
    normalize(u);
    for (auto *rows : {&src_rows, &tgt_rows}) {
      std::vector<float> v(u);
      for (float &x : v) x = static_cast<float>(x + scale * emb_rng.gaussian());
      normalize(v);
      rows->push_back(std::move(v));
    }
  }

  write_text(src_text, dir / (id + ".txt"));
  write_text(tgt_text, dir / (id + ".tgt.txt"));
  write_embeddings(make_embeddings(src_rows, id, c.max_merge), dir / (id + ".src.lemb"));
  write_embeddings(make_embeddings(tgt_rows, id, c.max_merge), dir / (id + ".tgt.lemb"));
  write_posteriors(m.post, dir / (id + ".lpost"));
  write_json(to_json(gold_of(m, id)), dir / (id + ".gold.json"));
  write_jsonl(provenance, dir / (id + ".provenance.jsonl"));
}

}  // namespace

void write_bundle(const BundleConfig &c, std::uint64_t seed, const fs::path &dir, int jobs) {
  validate(c.noise);
  fs::create_directories(dir);
  Rng rng(Rng::derive(seed, 0));

  std::vector<Gender> genders;
  for (int i = 0; i < c.n_speakers_total; ++i) genders.push_back(i % 2 == 0 ? Gender::kMale : Gender::kFemale);
  rng.shuffle(genders);
  std::vector<int> word_of(c.size.vocab_size);
  for (int i = 0; i < c.size.vocab_size; ++i) word_of[i] = i;
  rng.shuffle(word_of);
  std::vector<std::vector<std::string>> doc_speakers(c.n_docs);
  for (auto &ds : doc_speakers) {
    std::vector<int> pool(c.n_speakers_total);
    for (int i = 0; i < c.n_speakers_total; ++i) pool[i] = i;
    rng.shuffle(pool);
    pool.resize(c.speakers_per_doc);
    std::sort(pool.begin(), pool.end());
    for (int i : pool) ds.push_back(speaker_name(i));
  }

  const int n_jobs = std::max(1, std::min(jobs, c.n_docs));
  if (n_jobs == 1) {
    for (int d = 0; d < c.n_docs; ++d) write_document(c, seed, d, doc_speakers[d], word_of, dir);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(c.n_docs);
    for (int j = 0; j < n_jobs; ++j) {
      pool.emplace_back([&] {
        for (int d = next++; d < c.n_docs; d = next++) {
          try {
            write_document(c, seed, d, doc_speakers[d], word_of, dir);
          } catch (...) {
            errors[d] = std::current_exception();
          }
        }
      });
    }
    for (auto &th : pool) th.join();
    for (auto &e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  const Vocab vocab = synth_vocab(c.size.vocab_size);
  write_vocab(vocab, dir / "vocab.txt");
  textproc::PronLexicon lex;
  for (int i = 0; i < c.size.vocab_size; ++i) {
    lex.add(vocab.token(kFirstTokenId + i), {"s" + std::to_string(i)});
  }
  textproc::write_lexicon(lex, dir / "lexicon.tsv");
  Json spk = Json::object();
  for (int i = 0; i < c.n_speakers_total; ++i) spk[speaker_name(i)] = std::string(1, gender_code(genders[i]));
  write_json(spk, dir / "speakers.json");
  Json meta;
  meta["seed"] = seed;
  meta["hop_ms"] = kHopMs;
  meta["config"] = to_json(c);
  meta["docs"] = Json::array();
  for (int d = 0; d < c.n_docs; ++d) meta["docs"].push_back(doc_name(d));
  write_json(meta, dir / "bundle.json");
}

std::vector<UtteranceManifestRow> synthetic_manifest(int n_docs, int n_speakers, std::uint64_t seed) {
  if (n_docs < 1 || n_speakers < 2) throw ConfigError("synthetic manifest needs docs and >= 2 speakers");
  Rng rng(seed);
  const int pairs = n_speakers / 2;
  std::vector<UtteranceManifestRow> rows;
  for (int d = 0; d < n_docs; ++d) {
    const int pair = static_cast<int>(rng.below(pairs));
    const int n_utts = rng.range(10, 30);
    const double male_share = 0.3 + 0.4 * rng.uniform();
    double t = 0.0;
    for (int u = 0; u < n_utts; ++u) {
      UtteranceManifestRow r;
      r.doc_id = doc_name(d);
      const bool male = rng.uniform() < male_share;
      r.speaker_id = speaker_name(2 * pair + (male ? 0 : 1));
      r.gender = male ? Gender::kMale : Gender::kFemale;
      r.duration_s = 3.0 + 12.0 * rng.uniform();
      r.start_s = t;
      r.end_s = t + r.duration_s;
      t = r.end_s + 0.5;
      r.utt_id = r.doc_id + "-" + std::to_string(u);
      r.text_src = "x";
      r.text_tgt = "x";
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

}  // namespace longalign::synth
