// src/pipeline/pipeline.cc

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

#include "longalign/pipeline.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "longalign/embeddings.h"
#include "longalign/lm.h"
#include "longalign/manifest.h"
#include "longalign/rng.h"
#include "longalign/textproc.h"
#include "longalign/vocab.h"

namespace longalign::pipeline {

CutList topic_cuts(const std::string &recording_id, const std::vector<std::pair<double, std::string>> &metadata,
                   double duration_s) {
  CutList cuts;
  for (std::size_t i = 0; i < metadata.size(); ++i) {
    const double t = metadata[i].first;
    if (i > 0 && !(t > metadata[i - 1].first)) {
      throw OrderError("topic timestamps must be strictly increasing; entry " + std::to_string(i) + " is not");
    }
    if (t < 0.0 || t >= duration_s) throw ConfigError("topic timestamp outside the recording");
    const double end = i + 1 < metadata.size() ? metadata[i + 1].first : duration_s;
    cuts.entries.push_back({recording_id, t, end, metadata[i].second});
  }
  return cuts;
}

Json to_json(const CutList &cuts) {
  Json j;
  j["sample_rate"] = cuts.sample_rate;
  j["cuts"] = Json::array();
  for (const auto &e : cuts.entries) {
    j["cuts"].push_back({{"recording_id", e.recording_id}, {"start_s", e.start_s}, {"end_s", e.end_s},
                         {"label", e.label}});
  }
  return j;
}

std::vector<std::pair<int, int>> segment_by_blanks(const PosteriorMatrix &post, int min_gap) {
  const int frames = post.frames();
  std::vector<int> cuts;
  int run_start = -1;
  for (int t = 0; t <= frames; ++t) {
    bool blank = false;
    if (t < frames) {
      const auto row = post.row(t);
      blank = std::max_element(row.begin(), row.end()) == row.begin();
    }
    if (blank && run_start < 0) run_start = t;
    if (!blank && run_start >= 0) {
      if (t - run_start >= min_gap && run_start > 0 && t < frames) cuts.push_back((run_start + t) / 2);
      run_start = -1;
    }
  }
  std::vector<std::pair<int, int>> segs;
  int prev = 0;
  for (int c : cuts) {
    segs.push_back({prev, c});
    prev = c;
  }
  if (frames > prev) segs.push_back({prev, frames});
  return segs;
}

std::vector<std::pair<int, int>> read_segments(const fs::path &path, int hop_ms, int frames) {
  std::vector<std::pair<int, int>> segs;
  for (const auto &j : read_jsonl(path)) {
    double s = 0.0, e = 0.0;
    try {
      s = j.at("start_s").get<double>();
      e = j.at("end_s").get<double>();
    } catch (const nlohmann::json::exception &ex) {
      throw FormatError(path.string() + ": " + ex.what());
    }
    const int fs = std::clamp(static_cast<int>(std::floor(s * 1000.0 / hop_ms)), 0, frames);
    const int fe = std::clamp(static_cast<int>(std::ceil(e * 1000.0 / hop_ms)), 0, frames);
    if (fe > fs) segs.push_back({fs, fe});
  }
  for (std::size_t k = 1; k < segs.size(); ++k) {
    if (segs[k].first < segs[k - 1].second) throw OrderError(path.string() + ": segments overlap or are unsorted");
  }
  return segs;
}

void write_segments(const std::vector<std::pair<int, int>> &segments, int hop_ms, const fs::path &path) {
  std::vector<Json> rows;
  for (const auto &[s, e] : segments) rows.push_back({{"start_s", s * hop_ms / 1000.0}, {"end_s", e * hop_ms / 1000.0}});
  write_jsonl(rows, path);
}

std::vector<Json> pairs_to_json(const std::vector<bitext::AlignmentPair> &pairs, double threshold) {
  std::vector<Json> rows;
  for (const auto &p : pairs) {
    rows.push_back({{"src_start", p.src.start},
                    {"src_len", p.src.len},
                    {"tgt_start", p.tgt.start},
                    {"tgt_len", p.tgt.len},
                    {"cost", p.cost},
                    {"kept", p.src.len > 0 && p.tgt.len > 0 && p.cost <= threshold}});
  }
  return rows;
}

std::vector<bitext::AlignmentPair> read_pairs(const fs::path &path) {
  std::vector<bitext::AlignmentPair> out;
  for (const auto &j : read_jsonl(path)) {
    try {
      out.push_back({{j.at("src_start").get<int>(), j.at("src_len").get<int>()},
                     {j.at("tgt_start").get<int>(), j.at("tgt_len").get<int>()},
                     j.at("cost").get<double>()});
    } catch (const nlohmann::json::exception &e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<Json> regions_to_json(const std::vector<anchor::RegionPair> &regions) {
  std::vector<Json> rows;
  for (const auto &r : regions) {
    rows.push_back({{"audio_start", r.audio_start}, {"audio_end", r.audio_end}, {"sent_begin", r.sent_begin},
                    {"sent_end", r.sent_end}});
  }
  return rows;
}

std::vector<anchor::RegionPair> read_regions(const fs::path &path) {
  std::vector<anchor::RegionPair> out;
  for (const auto &j : read_jsonl(path)) {
    try {
      out.push_back({j.at("audio_start").get<int>(), j.at("audio_end").get<int>(), j.at("sent_begin").get<int>(),
                     j.at("sent_end").get<int>()});
    } catch (const nlohmann::json::exception &e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<Json> alignment_to_json(const decode::FlexAlignment &a, const std::vector<std::string> &sent_ids,
                                    int hop_ms) {
  std::vector<Json> rows;
  for (std::size_t i = 0; i < a.sentences.size(); ++i) {
    const auto &s = a.sentences[i];
    const bool aligned = s.status == decode::SentenceStatus::kAligned;
    rows.push_back({{"sent_id", sent_ids[i]},
                    {"status", aligned ? "aligned" : "skipped"},
                    {"start_frame", s.start_frame},
                    {"end_frame", s.end_frame},
                    {"start_ms", aligned ? Json(s.start_frame * hop_ms) : Json(nullptr)},
                    {"end_ms", aligned ? Json(s.end_frame * hop_ms) : Json(nullptr)},
                    {"conf", s.conf},
                    {"window", s.window}});
  }
  return rows;
}

decode::FlexAlignment read_alignment(const fs::path &path) {
  decode::FlexAlignment a;
  for (const auto &j : read_jsonl(path)) {
    decode::SentenceAlignment s;
    try {
      const std::string status = j.at("status").get<std::string>();
      if (status != "aligned" && status != "skipped") throw FormatError(path.string() + ": bad status " + status);
      s.status = status == "aligned" ? decode::SentenceStatus::kAligned : decode::SentenceStatus::kSkipped;
      s.start_frame = j.at("start_frame").get<int>();
      s.end_frame = j.at("end_frame").get<int>();
      s.conf = j.at("conf").get<double>();
      s.window = j.at("window").get<int>();
    } catch (const nlohmann::json::exception &e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    a.sentences.push_back(s);
  }
  return a;
}

std::string fnv1a64_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[20];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

namespace {

// null means unset.
std::optional<double> optional_double(const nlohmann::json &j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json &j, const fs::path &base_dir) {
  PipelineConfig c;
  auto path_of = [&](const std::string &p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
  try {
    c.input_dir = path_of(j.at("input_dir").get<std::string>());
    c.output_dir = path_of(j.at("output_dir").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("docs")) c.docs = j.at("docs").get<std::vector<std::string>>();
    c.vocab = j.value("vocab", c.vocab);
    c.speakers = j.value("speakers", c.speakers);
    if (j.contains("bitext")) {
      const auto &b = j.at("bitext");
      c.bitext.max_merge = b.value("max_merge", c.bitext.max_merge);
      c.bitext.window = b.value("window", c.bitext.window);
      c.bitext.base_size = b.value("base_size", c.bitext.base_size);
      c.bitext.penalty_ins = b.value("penalty_ins", c.bitext.penalty_ins);
      c.bitext.penalty_del = b.value("penalty_del", c.bitext.penalty_del);
      c.bitext.penalty_merge = b.value("penalty_merge", c.bitext.penalty_merge);
      c.bitext.fallback_merge = b.value("fallback_merge", c.bitext.fallback_merge);
      c.bitext_threshold = b.value("threshold", c.bitext_threshold);
    }
    if (j.contains("lm")) {
      const auto &l = j.at("lm");
      c.lm.order = l.value("order", c.lm.order);
      c.lm.floor = l.value("floor", c.lm.floor);
      c.lm_lambda = l.value("lambda", c.lm_lambda);
    }
    if (j.contains("first_pass")) {
      const auto &f = j.at("first_pass");
      c.first_pass.criteria.max_cer = f.value("max_cer", c.first_pass.criteria.max_cer);
      c.first_pass.criteria.max_consec = f.value("max_consec", c.first_pass.criteria.max_consec);
      c.first_pass.criteria.max_abs = f.value("max_abs", c.first_pass.criteria.max_abs);
      c.first_pass.criteria.min_len = f.value("min_len", c.first_pass.criteria.min_len);
      c.first_pass.expand_tokens = f.value("expand_tokens", c.first_pass.expand_tokens);
      if (f.contains("beam")) c.first_pass.beam = optional_double(f.at("beam"));
      c.vad_min_gap = f.value("vad_min_gap", c.vad_min_gap);
    }
    if (j.contains("flex")) {
      const auto &f = j.at("flex");
      c.skip_weight = f.value("skip_weight", c.skip_weight);
      c.window_s = f.value("window_s", c.window_s);
      c.overlap_s = f.value("overlap_s", c.overlap_s);
      if (f.contains("beam")) c.flex_beam = optional_double(f.at("beam"));
      c.emission_floor = f.value("emission_floor", c.emission_floor);
    }
    if (j.contains("filter")) {
      const auto &f = j.at("filter");
      c.thresholds.cer = f.value("cer", c.thresholds.cer);
      c.thresholds.max_consec = f.value("max_consec", c.thresholds.max_consec);
      c.thresholds.error_ratio = f.value("error_ratio", c.thresholds.error_ratio);
      if (f.contains("sample_edges")) c.sample_edges = f.at("sample_edges").get<std::vector<double>>();
      c.sample_per_bin = f.value("sample_per_bin", c.sample_per_bin);
    }
    if (j.contains("splits")) c.splits = splits::specs_from_json(j.at("splits"));
    if (j.contains("split_options")) {
      const auto &s = j.at("split_options");
      c.split_options.gender_weight = s.value("gender_weight", c.split_options.gender_weight);
      c.split_options.restarts = s.value("restarts", c.split_options.restarts);
      c.split_options.size_slack = s.value("size_slack", c.split_options.size_slack);
    }
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("bad pipeline config: ") + e.what());
  }
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (c.window_s <= c.overlap_s || c.overlap_s < 0) throw ConfigError("flex window must exceed its overlap");
  splits::validate_specs(c.splits);
  return c;
}

Json to_json(const PipelineConfig &c) {
  Json j;
  j["seed"] = c.seed;
  j["bitext"] = {{"max_merge", c.bitext.max_merge},     {"window", c.bitext.window},
                 {"base_size", c.bitext.base_size},     {"penalty_ins", c.bitext.penalty_ins},
                 {"penalty_del", c.bitext.penalty_del}, {"penalty_merge", c.bitext.penalty_merge},
                 {"fallback_merge", c.bitext.fallback_merge}, {"threshold", c.bitext_threshold}};
  j["lm"] = {{"order", c.lm.order}, {"floor", c.lm.floor}, {"lambda", c.lm_lambda}};
  j["first_pass"] = {{"max_cer", c.first_pass.criteria.max_cer},
                     {"max_consec", c.first_pass.criteria.max_consec},
                     {"max_abs", c.first_pass.criteria.max_abs},
                     {"min_len", c.first_pass.criteria.min_len},
                     {"expand_tokens", c.first_pass.expand_tokens},
                     {"beam", c.first_pass.beam ? Json(*c.first_pass.beam) : Json(nullptr)},
                     {"vad_min_gap", c.vad_min_gap}};
  j["flex"] = {{"skip_weight", c.skip_weight},
               {"window_s", c.window_s},
               {"overlap_s", c.overlap_s},
               {"beam", c.flex_beam ? Json(*c.flex_beam) : Json(nullptr)},
               {"emission_floor", c.emission_floor}};
  j["filter"] = {{"cer", c.thresholds.cer},
                 {"max_consec", c.thresholds.max_consec},
                 {"error_ratio", c.thresholds.error_ratio},
                 {"sample_edges", c.sample_edges},
                 {"sample_per_bin", c.sample_per_bin}};
  j["splits"] = Json::array();
  for (const auto &s : c.splits) {
    j["splits"].push_back({{"name", s.name},
                           {"target_fraction", s.target_fraction},
                           {"require_speaker_disjoint_from_train", s.speaker_disjoint},
                           {"require_document_disjoint_from_train", s.document_disjoint}});
  }
  j["split_options"] = {{"gender_weight", c.split_options.gender_weight},
                        {"restarts", c.split_options.restarts},
                        {"size_slack", c.split_options.size_slack}};
  return j;
}

namespace {

class DirLock {
 public:
  explicit DirLock(fs::path path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw ConfigError("output directory is locked by another run (remove " + path_.string() + " if stale)");
    }
  }
  ~DirLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock &) = delete;
  DirLock &operator=(const DirLock &) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

void for_each_doc(std::size_t n, int jobs, const std::function<void(std::size_t)> &fn) {
  const int n_jobs = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (n_jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int j = 0; j < n_jobs; ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto &th : pool) th.join();
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<std::string> discover_docs(const PipelineConfig &c) {
  if (!c.docs.empty()) return c.docs;
  const fs::path bundle = c.input_dir / "bundle.json";
  if (fs::exists(bundle)) return read_json(bundle).at("docs").get<std::vector<std::string>>();
  std::vector<std::string> docs;
  if (!fs::is_directory(c.input_dir)) throw ConfigError("input directory missing: " + c.input_dir.string());
  for (const auto &e : fs::directory_iterator(c.input_dir)) {
    const std::string name = e.path().filename().string();
    if (e.path().extension() == ".txt" && name.find(".tgt.") == std::string::npos && name != c.vocab) {
      docs.push_back(e.path().stem().string());
    }
  }
  std::sort(docs.begin(), docs.end());
  return docs;
}

std::vector<std::vector<int>> sentence_ids(const std::vector<textproc::Sentence> &sents, const Vocab &vocab) {
  std::vector<std::vector<int>> out;
  for (const auto &s : sents) out.push_back(vocab.lookup(textproc::lexical_tokens(s.tokens)));
  return out;
}

struct Stage {
  std::string name;
  fs::path dir;
  Json params = Json::object();
  std::vector<std::string> inputs;
  std::vector<fs::path> outputs;
  std::mutex mu;
  Json counts = Json::object();

  void output(const fs::path &p) {
    std::lock_guard<std::mutex> g(mu);
    outputs.push_back(p);
  }
  void count(const std::string &key, int n) {
    std::lock_guard<std::mutex> g(mu);
    counts[key] = counts.value(key, 0) + n;
  }
  void finish(const fs::path &root, std::uint64_t seed) {
    std::sort(outputs.begin(), outputs.end());
    Json j;
    j["stage"] = name;
    j["seed"] = seed;
    j["params"] = params;
    j["inputs"] = inputs;
    j["outputs"] = Json::array();
    for (const auto &p : outputs) {
      j["outputs"].push_back({{"path", fs::relative(p, root).string()}, {"fnv1a64", fnv1a64_file(p)}});
    }
    j["counts"] = counts;
    write_json(j, dir / "MANIFEST.json");
  }
};

}  // namespace

RunReport run_pipeline(const PipelineConfig &c) {
  fs::create_directories(c.output_dir);
  DirLock lock(c.output_dir / ".lock");
  const std::vector<std::string> docs = discover_docs(c);
  if (docs.empty()) throw ConfigError("no documents found in " + c.input_dir.string());
  const fs::path vocab_path = c.input_dir / c.vocab;
  if (!fs::exists(vocab_path)) throw ConfigError("vocabulary missing: " + vocab_path.string());
  const Vocab vocab = read_vocab(vocab_path);
  std::map<std::string, Gender> genders;
  if (fs::exists(c.input_dir / c.speakers)) {
    const nlohmann::json spk_json = read_json(c.input_dir / c.speakers);
    for (const auto &[spk, g] : spk_json.items()) genders[spk] = parse_gender(g.get<std::string>());
  }
  const fs::path in = c.input_dir, out = c.output_dir;
  const std::size_t n_docs = docs.size();
  RunReport report;

  auto run_stage = [&](const std::string &name, const std::function<void(Stage &)> &body) {
    Stage st;
    st.name = name;
    st.dir = out / name;
    try {
      fs::create_directories(st.dir);
      body(st);
      st.finish(out, c.seed);
    } catch (const StageError &) {
      throw;
    } catch (const std::exception &e) {
      throw StageError(name, e.what());
    }
    report.stages.push_back(name);
    for (const auto &[k, v] : st.counts.items()) report.counts[name + "." + k] = v.get<int>();
  };
  const Json cfg = to_json(c);

  // Sentences per doc and side, kept for later stages.
  std::vector<std::vector<textproc::Sentence>> src(n_docs), tgt(n_docs);
  run_stage("prep-text", [&](Stage &st) {
    st.inputs = {"<doc>.txt", "<doc>.tgt.txt"};
    for_each_doc(n_docs, c.jobs, [&](std::size_t d) {
      int dropped = 0;
      src[d] = textproc::prepare_document(read_text(in / (docs[d] + ".txt")), docs[d], {}, {}, &dropped);
      tgt[d] = textproc::prepare_document(read_text(in / (docs[d] + ".tgt.txt")), docs[d]);
      const fs::path ps = st.dir / (docs[d] + ".src.sent.jsonl"), pt = st.dir / (docs[d] + ".tgt.sent.jsonl");
      textproc::write_sentences(src[d], ps);
      textproc::write_sentences(tgt[d], pt);
      st.output(ps);
      st.output(pt);
      st.count("src_sentences", static_cast<int>(src[d].size()));
      st.count("tgt_sentences", static_cast<int>(tgt[d].size()));
      st.count("dropped_lines", dropped);
    });
  });

  std::vector<std::vector<bitext::AlignmentPair>> pairs(n_docs);
  run_stage("bitext-align", [&](Stage &st) {
    st.params = cfg["bitext"];
    st.inputs = {"<doc>.src.lemb", "<doc>.tgt.lemb"};
    for_each_doc(n_docs, c.jobs, [&](std::size_t d) {
      const fs::path pe = in / (docs[d] + ".src.lemb"), te = in / (docs[d] + ".tgt.lemb");
      for (const auto &p : {pe, te}) {
        if (!fs::exists(p)) throw IoError("embeddings missing: " + p.string());
      }
      const EmbeddingSet es = read_embeddings(pe), et = read_embeddings(te);
      if (es.num_sentences() != static_cast<int>(src[d].size())) {
        throw FormatError(pe.string() + " has " + std::to_string(es.num_sentences()) + " sentences, text has " +
                          std::to_string(src[d].size()));
      }
      if (et.num_sentences() != static_cast<int>(tgt[d].size())) {
        throw FormatError(te.string() + " has " + std::to_string(et.num_sentences()) + " sentences, text has " +
                          std::to_string(tgt[d].size()));
      }
      bitext::AlignParams params = c.bitext;
      params.seed = Rng::derive(c.seed, d);
      pairs[d] = bitext::align_sentences(es, et, params).pairs;
      const fs::path p = st.dir / (docs[d] + ".pairs.jsonl");
      write_jsonl(pairs_to_json(pairs[d], c.bitext_threshold), p);
      st.output(p);
      const auto f = bitext::filter_alignments(pairs[d], c.bitext_threshold);
      int kept = 0;
      for (const auto &k : f.kept) kept += k.src.len > 0 && k.tgt.len > 0;
      st.count("pairs", static_cast<int>(pairs[d].size()));
      st.count("kept", kept);
    });
  });

  std::vector<std::vector<std::vector<int>>> ids(n_docs);
  for (std::size_t d = 0; d < n_docs; ++d) ids[d] = sentence_ids(src[d], vocab);
  run_stage("train-lm", [&](Stage &st) {
    st.params = cfg["lm"];
    std::vector<std::vector<int>> all;
    for (const auto &doc : ids) all.insert(all.end(), doc.begin(), doc.end());
    const lm::NgramLM bg = lm::train_ngram(all, lm::lm_token_set(vocab), c.lm);
    for_each_doc(n_docs, c.jobs, [&](std::size_t d) {
      const lm::NgramLM doc = lm::train_ngram(ids[d], lm::lm_token_set(vocab), c.lm);
      const fs::path p = st.dir / (docs[d] + ".arpa");
      lm::write_arpa(lm::interpolate(doc, bg, c.lm_lambda), vocab, p);
      st.output(p);
    });
  });

  std::vector<std::vector<anchor::RegionPair>> regions(n_docs);
  std::vector<int> frames(n_docs, 0);
  int hop_ms = 0;
  run_stage("first-pass", [&](Stage &st) {
    st.params = cfg["first_pass"];
    st.inputs = {"<doc>.lpost", "<doc>.segments.jsonl (optional)"};
    std::vector<int> hops(n_docs, 0);
    for_each_doc(n_docs, c.jobs, [&](std::size_t d) {
      const PosteriorMatrix post = read_posteriors(in / (docs[d] + ".lpost"));
      if (post.vocab_size() != vocab.size()) {
        throw FormatError(docs[d] + ".lpost has " + std::to_string(post.vocab_size()) + " columns, vocabulary has " +
                          std::to_string(vocab.size()));
      }
      frames[d] = post.frames();
      hops[d] = post.hop_ms();
      const fs::path seg_path = in / (docs[d] + ".segments.jsonl");
      const auto segs = fs::exists(seg_path) ? read_segments(seg_path, post.hop_ms(), post.frames())
                                             : segment_by_blanks(post, c.vad_min_gap);
      const lm::NgramLM model = lm::read_arpa(out / "train-lm" / (docs[d] + ".arpa"), vocab);
      anchor::FirstPassOptions opts = c.first_pass;
      opts.jobs = 1;
      const auto res = anchor::first_pass(post, segs, ids[d], model, opts);
      regions[d] = res.regions;
      const fs::path p = st.dir / (docs[d] + ".regions.jsonl");
      write_jsonl(regions_to_json(regions[d]), p);
      st.output(p);
      st.count("segments", static_cast<int>(segs.size()));
      st.count("skipped_segments", res.skipped_segments);
      st.count("anchors", static_cast<int>(res.anchors.size()));
      st.count("regions", static_cast<int>(res.regions.size()));
    });
    hop_ms = hops[0];
    for (int h : hops) {
      if (h != hop_ms) throw FormatError("documents disagree on the frame hop");
    }
  });

  std::vector<decode::FlexAlignment> flex(n_docs);
  run_stage("flex-align", [&](Stage &st) {
    st.params = cfg["flex"];
    decode::WindowOptions win;
    win.len_frames = static_cast<int>(std::lround(c.window_s * 1000.0 / hop_ms));
    win.overlap_frames = static_cast<int>(std::lround(c.overlap_s * 1000.0 / hop_ms));
    win.beam = c.flex_beam;
    if (std::isfinite(c.emission_floor)) win.emission_floor = static_cast<float>(c.emission_floor);
    for_each_doc(n_docs, c.jobs, [&](std::size_t d) {
      const PosteriorMatrix post =
          read_posteriors(in / (docs[d] + ".lpost"));
      const auto cand = anchor::candidate_ranges(regions[d], static_cast<int>(ids[d].size()), post.frames());
      int failed = 0;
      flex[d] = decode::flex_align_window(post, ids[d], c.skip_weight, win, cand, &failed);
      std::vector<std::string> sid;
      for (const auto &s : src[d]) sid.push_back(s.sent_id);
      const fs::path p = st.dir / (docs[d] + ".align.jsonl");
      write_jsonl(alignment_to_json(flex[d], sid, post.hop_ms()), p);
      st.output(p);
      int aligned = 0;
      for (const auto &s : flex[d].sentences) aligned += s.status == decode::SentenceStatus::kAligned;
      st.count("aligned", aligned);
      st.count("skipped", static_cast<int>(flex[d].sentences.size()) - aligned);
      st.count("failed_windows", failed);
    });
  });

  std::vector<std::vector<UtteranceManifestRow>> triplets(n_docs);
  run_stage("filter", [&](Stage &st) {
    st.params = cfg["filter"];
    std::vector<std::vector<Json>> seg_rows(n_docs);
    for_each_doc(n_docs, c.jobs, [&](std::size_t d) {
      const PosteriorMatrix post = read_posteriors(in / (docs[d] + ".lpost"));
      std::vector<Json> rows;
      int dropped_pairs = 0;
      for (const auto &p : pairs[d]) {
        if (p.src.len == 0 || p.tgt.len == 0 || p.cost > c.bitext_threshold) continue;
        bool aligned = true;
        for (int s = p.src.start; s < p.src.start + p.src.len; ++s) {
          aligned = aligned && flex[d].sentences[s].status == decode::SentenceStatus::kAligned && !ids[d][s].empty();
        }
        if (!aligned) {
          ++dropped_pairs;
          continue;
        }
        const int start = flex[d].sentences[p.src.start].start_frame;
        const int end = flex[d].sentences[p.src.start + p.src.len - 1].end_frame;
        std::vector<int> ref;
        std::string text_src, text_tgt;
        for (int s = p.src.start; s < p.src.start + p.src.len; ++s) {
          ref.insert(ref.end(), ids[d][s].begin(), ids[d][s].end());
          text_src += src[d][s].text;
        }
        for (int s = p.tgt.start; s < p.tgt.start + p.tgt.len; ++s) {
          text_tgt += (text_tgt.empty() ? "" : " ") + tgt[d][s].text;
        }
        const std::vector<int> hyp = quality::greedy_decode(post, start, end);
        const QualityStats qs = quality::compute_stats(hyp, ref);
        const bool ok = quality::passes(qs, c.thresholds);

        UtteranceManifestRow row;
        row.utt_id = src[d][p.src.start].sent_id + (p.src.len > 1 ? "+" + std::to_string(p.src.len - 1) : "");
        row.doc_id = docs[d];
        row.speaker_id = src[d][p.src.start].speaker_id;
        const auto g = genders.find(row.speaker_id);
        row.gender = g == genders.end() ? Gender::kUnknown : g->second;
        row.start_s = start * post.hop_ms() / 1000.0;
        row.end_s = end * post.hop_ms() / 1000.0;
        row.duration_s = row.end_s - row.start_s;
        row.text_src = text_src;
        row.text_tgt = text_tgt;
        row.quality = qs;

        Json j;
        j["utt_id"] = row.utt_id;
        j["src_start"] = p.src.start;
        j["src_len"] = p.src.len;
        j["tgt_start"] = p.tgt.start;
        j["tgt_len"] = p.tgt.len;
        j["start_frame"] = start;
        j["end_frame"] = end;
        j["start_s"] = row.start_s;
        j["end_s"] = row.end_s;
        std::string hyp_text;
        for (int tok : hyp) hyp_text += vocab.token(tok);
        j["hyp"] = hyp_text;
        j["quality"] = longalign::to_json(qs);
        j["accepted"] = ok;
        rows.push_back(std::move(j));
        if (ok) triplets[d].push_back(std::move(row));
      }
      const fs::path p = st.dir / (docs[d] + ".segments.jsonl");
      write_jsonl(rows, p);
      st.output(p);
      seg_rows[d] = std::move(rows);
      st.count("candidates", static_cast<int>(seg_rows[d].size()));
      st.count("accepted", static_cast<int>(triplets[d].size()));
      st.count("unaligned_pairs", dropped_pairs);
    });

    std::vector<UtteranceManifestRow> all;
    for (const auto &t : triplets) all.insert(all.end(), t.begin(), t.end());
    const fs::path tp = st.dir / "triplets.jsonl";
    write_manifest(all, tp);
    st.output(tp);

    if (!c.sample_edges.empty() && c.sample_per_bin > 0) {
      std::vector<double> cers;
      std::vector<const Json *> flat;
      for (const auto &rows : seg_rows) {
        for (const auto &r : rows) {
          cers.push_back(r["quality"]["cer"].get<double>());
          flat.push_back(&r);
        }
      }
      std::vector<quality::SheetRow> sheet;
      for (const auto &s : quality::bin_sample(cers, c.sample_edges, c.sample_per_bin, c.seed)) {
        sheet.push_back({(*flat[s.index])["utt_id"].get<std::string>(), quality::bin_name(s.bin, c.sample_edges),
                         (*flat[s.index])["hyp"].get<std::string>(), std::nullopt});
      }
      const fs::path sp = st.dir / "labeling_sheet.jsonl";
      quality::write_labeling_sheet(sheet, sp);
      st.output(sp);
    }
  });

  run_stage("split", [&](Stage &st) {
    st.params = {{"splits", cfg["splits"]},
                 {"gender_weight", c.split_options.gender_weight},
                 {"restarts", c.split_options.restarts},
                 {"size_slack", c.split_options.size_slack}};
    std::vector<UtteranceManifestRow> all;
    for (const auto &t : triplets) all.insert(all.end(), t.begin(), t.end());
    splits::SplitOptions so = c.split_options;
    so.jobs = c.jobs;
    const auto assignment = splits::make_splits(all, c.splits, c.seed, so);
    const fs::path ap = st.dir / "assignment.json";
    write_json(splits::to_json(assignment), ap);
    st.output(ap);
    std::map<std::string, std::vector<UtteranceManifestRow>> per_split;
    for (const auto &s : c.splits) per_split[s.name];
    for (const auto &r : all) per_split[assignment.doc_split.at(r.doc_id)].push_back(r);
    for (const auto &[name, rows] : per_split) {
      const fs::path p = st.dir / (name + ".jsonl");
      write_manifest(rows, p);
      st.output(p);
      st.count(name, static_cast<int>(rows.size()));
    }
    const fs::path final_path = out / "triplets.jsonl";
    write_manifest(all, final_path);
    st.output(final_path);
  });

  Json rep;
  rep["stages"] = report.stages;
  rep["counts"] = Json::object();
  for (const auto &[k, v] : report.counts) rep["counts"][k] = v;
  rep["config"] = cfg;
  write_json(rep, out / "REPORT.json");
  return report;
}

ValidationResult validate_run(const fs::path &run) {
  ValidationResult res;
  const Json filter_manifest = read_json(run / "filter" / "MANIFEST.json");
  const Json bitext_manifest = read_json(run / "bitext-align" / "MANIFEST.json");
  quality::Thresholds t;
  t.cer = filter_manifest["params"]["cer"].get<double>();
  t.max_consec = filter_manifest["params"]["max_consec"].get<int>();
  t.error_ratio = filter_manifest["params"]["error_ratio"].get<double>();
  const double threshold = bitext_manifest["params"]["threshold"].get<double>();

  std::map<std::string, std::map<std::string, nlohmann::json>> seg_cache;
  std::map<std::string, std::vector<bitext::AlignmentPair>> pair_cache;
  std::map<std::string, decode::FlexAlignment> align_cache;
  for (const auto &row : read_manifest(run / "triplets.jsonl")) {
    ++res.checked;
    const std::string &doc = row.doc_id;
    auto problem = [&](const std::string &msg) { res.problems.push_back(row.utt_id + ": " + msg); };
    if (!seg_cache.count(doc)) {
      auto &m = seg_cache[doc];
      for (const auto &j : read_jsonl(run / "filter" / (doc + ".segments.jsonl"))) m[j.at("utt_id")] = j;
      pair_cache[doc] = read_pairs(run / "bitext-align" / (doc + ".pairs.jsonl"));
      align_cache[doc] = read_alignment(run / "flex-align" / (doc + ".align.jsonl"));
    }
    const auto it = seg_cache[doc].find(row.utt_id);
    if (it == seg_cache[doc].end()) {
      problem("no filter record");
      continue;
    }
    const auto &seg = it->second;
    if (!row.quality) {
      problem("no quality stats");
    } else if (!quality::passes(*row.quality, t) || !seg.at("accepted").get<bool>()) {
      problem("quality stats do not pass the filter thresholds");
    } else if (!(*row.quality == quality_from_json(seg.at("quality")))) {
      problem("quality stats differ from the filter record");
    }
    const bitext::Span s{seg.at("src_start").get<int>(), seg.at("src_len").get<int>()};
    const bitext::Span g{seg.at("tgt_start").get<int>(), seg.at("tgt_len").get<int>()};
    const auto &prs = pair_cache[doc];
    const auto pit = std::find_if(prs.begin(), prs.end(), [&](const auto &p) { return p.src == s && p.tgt == g; });
    if (pit == prs.end()) {
      problem("no matching bitext pair");
    } else if (pit->cost > threshold) {
      problem("bitext pair cost above the threshold");
    }
    const auto &al = align_cache[doc];
    if (s.start < 0 || s.len < 1 || s.start + s.len > static_cast<int>(al.sentences.size())) {
      problem("source span outside the flex alignment");
      continue;
    }
    bool aligned = true;
    for (int k = s.start; k < s.start + s.len; ++k) aligned = aligned && al.sentences[k].status == decode::SentenceStatus::kAligned;
    if (!aligned) {
      problem("source sentence not flex-aligned");
      continue;
    }
    if (al.sentences[s.start].start_frame != seg.at("start_frame").get<int>() ||
        al.sentences[s.start + s.len - 1].end_frame != seg.at("end_frame").get<int>()) {
      problem("span differs from the flex alignment");
    }
    if (std::abs(row.start_s - seg.at("start_s").get<double>()) > 1e-9 ||
        std::abs(row.end_s - seg.at("end_s").get<double>()) > 1e-9 ||
        std::abs(row.duration_s - (row.end_s - row.start_s)) > 1e-9) {
      problem("times differ from the filter record");
    }
  }
  return res;
}

Json EvalResult::to_json() const {
  Json j;
  j["boundary_accuracy"] = totals.boundary_accuracy;
  j["skip_precision"] = totals.skip_precision;
  j["skip_recall"] = totals.skip_recall;
  j["spoken"] = totals.spoken;
  j["unspoken"] = totals.unspoken;
  j["predicted_skips"] = totals.predicted_skips;
  j["triplets"] = triplets;
  j["triplets_exact"] = triplets_exact;
  return j;
}

EvalResult evaluate_run(const fs::path &bundle, const fs::path &run, int k_frames) {
  EvalResult res;
  const auto docs = read_json(bundle / "bundle.json").at("docs").get<std::vector<std::string>>();
  double hits = 0.0, caught = 0.0;
  std::map<std::string, synth::Gold> golds;
  for (const auto &doc : docs) {
    const synth::Gold gold = synth::gold_from_json(read_json(bundle / (doc + ".gold.json")));
    const auto pred = read_alignment(run / "flex-align" / (doc + ".align.jsonl"));
    const auto sc = synth::score_alignment(pred, gold, k_frames);
    hits += sc.boundary_accuracy * sc.spoken;
    caught += sc.skip_recall * sc.unspoken;
    res.totals.spoken += sc.spoken;
    res.totals.unspoken += sc.unspoken;
    res.totals.predicted_skips += sc.predicted_skips;
    golds[doc] = gold;
  }
  res.totals.boundary_accuracy = res.totals.spoken > 0 ? hits / res.totals.spoken : 1.0;
  res.totals.skip_recall = res.totals.unspoken > 0 ? caught / res.totals.unspoken : 1.0;
  res.totals.skip_precision = res.totals.predicted_skips > 0 ? caught / res.totals.predicted_skips : 1.0;

  std::map<std::string, std::map<std::string, nlohmann::json>> segs;
  for (const auto &row : read_manifest(run / "triplets.jsonl")) {
    ++res.triplets;
    if (!segs.count(row.doc_id)) {
      for (const auto &j : read_jsonl(run / "filter" / (row.doc_id + ".segments.jsonl"))) {
        segs[row.doc_id][j.at("utt_id")] = j;
      }
    }
    const auto &seg = segs[row.doc_id].at(row.utt_id);
    const auto &gs = golds.at(row.doc_id).sentences;
    const int a = seg.at("src_start").get<int>(), n = seg.at("src_len").get<int>();
    if (a + n > static_cast<int>(gs.size())) continue;
    bool spoken = true;
    for (int k = a; k < a + n; ++k) spoken = spoken && !gs[k].unspoken;
    if (spoken && gs[a].start_frame == seg.at("start_frame").get<int>() &&
        gs[a + n - 1].end_frame == seg.at("end_frame").get<int>()) {
      ++res.triplets_exact;
    }
  }
  return res;
}

}  // namespace longalign::pipeline
