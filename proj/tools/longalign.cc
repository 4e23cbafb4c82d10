// tools/longalign.cc

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

// Command-line front end: one subcommand per pipeline stage plus synth,
// eval, validate and the full pipeline.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "longalign/anchor.h"
#include "longalign/bitext.h"
#include "longalign/decode.h"
#include "longalign/embeddings.h"
#include "longalign/errors.h"
#include "longalign/jsonl.h"
#include "longalign/lm.h"
#include "longalign/pipeline.h"
#include "longalign/quality.h"
#include "longalign/splits.h"
#include "longalign/synth.h"
#include "longalign/textproc.h"
#include "longalign/vocab.h"

namespace fs = std::filesystem;
using namespace longalign;

namespace {

constexpr int kConfigExit = 2;
constexpr int kStageExit = 3;

std::vector<std::vector<int>> sentence_ids(const std::vector<textproc::Sentence> &sents, const Vocab &vocab) {
  std::vector<std::vector<int>> out;
  for (const auto &s : sents) out.push_back(vocab.lookup(textproc::lexical_tokens(s.tokens)));
  return out;
}

// Sentence JSONL, or plain text holding one sentence per line.
std::vector<std::vector<int>> read_token_file(const fs::path &path, const Vocab &vocab) {
  if (path.extension() == ".jsonl") return sentence_ids(textproc::read_sentences(path), vocab);
  std::vector<std::vector<int>> out;
  std::istringstream in(read_text(path));
  for (std::string line; std::getline(in, line);) {
    const auto toks = textproc::lexical_tokens(textproc::tokenize(line));
    if (!toks.empty()) out.push_back(vocab.lookup(toks));
  }
  return out;
}

void print_json(const Json &j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Long-form audio, transcript and translation alignment toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  int jobs = 1;
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  // prep-text
  auto *prep = app.add_subcommand("prep-text", "Split a speaker-labeled transcript into sentences");
  std::string prep_in, prep_doc, prep_out, prep_lex;
  prep->add_option("--in", prep_in)->required();
  prep->add_option("--doc-id", prep_doc, "Sentence id prefix; default is the input file stem");
  prep->add_option("--out", prep_out)->required();
  prep->add_option("--lexicon", prep_lex, "Report tokens missing from this pronunciation lexicon");

  // bitext-align
  auto *bt = app.add_subcommand("bitext-align", "Align source and target sentences by embedding similarity");
  std::string bt_ss, bt_ts, bt_se, bt_te, bt_out;
  double bt_threshold = bitext::kDefaultFilterThreshold;
  bitext::AlignParams bt_params;
  bt->add_option("--src-sent", bt_ss, "Source sentences, checked against the embedding count");
  bt->add_option("--tgt-sent", bt_ts, "Target sentences, checked against the embedding count");
  bt->add_option("--src-emb", bt_se)->required();
  bt->add_option("--tgt-emb", bt_te)->required();
  bt->add_option("--out", bt_out)->required();
  bt->add_option("--threshold", bt_threshold, "Keep pairs with cost <= threshold");
  bt->add_option("--max-merge", bt_params.max_merge);
  bt->add_option("--window", bt_params.window);
  bt->add_option("--base-size", bt_params.base_size);

  // train-lm
  auto *tl = app.add_subcommand("train-lm", "Train a document-biased n-gram LM");
  std::string tl_sent, tl_vocab, tl_out;
  std::vector<std::string> tl_bg;
  lm::TrainOptions tl_opts;
  double tl_lambda = 0.7;
  tl->add_option("--in,--sent", tl_sent, "Document: sentence JSONL, or text with one sentence per line")->required();
  tl->add_option("--background", tl_bg, "Background corpus files, same formats");
  tl->add_option("--vocab", tl_vocab)->required();
  tl->add_option("--order", tl_opts.order);
  tl->add_option("--bias-lambda,--lambda", tl_lambda, "Weight of the document LM");
  tl->add_option("--out", tl_out)->required();

  // first-pass
  auto *fp = app.add_subcommand("first-pass", "Decode segments and anchor them to the transcript");
  std::vector<std::string> fp_posts;
  std::string fp_doc, fp_vocab, fp_lm, fp_segs, fp_out;
  anchor::FirstPassOptions fp_opts;
  int fp_gap = 30;
  fp->add_option("--posts", fp_posts, "Posterior files, one per segment in time order")->required();
  fp->add_option("--doc", fp_doc)->required();
  fp->add_option("--vocab", fp_vocab)->required();
  fp->add_option("--lm", fp_lm, "ARPA model; default trains on the document alone");
  fp->add_option("--segments", fp_segs, "Segment list (JSONL start_s/end_s) for a single posterior file");
  fp->add_option("--vad-min-gap", fp_gap, "Blank-run length that cuts segments when no list is given");
  fp->add_option("--expand", fp_opts.expand_tokens);
  fp->add_option("--out", fp_out)->required();

  // flex-align
  auto *fx = app.add_subcommand("flex-align", "Sliding-window flexible alignment of sentences to audio");
  std::string fx_post, fx_doc, fx_vocab, fx_regions, fx_out;
  double fx_skip = -8.0, fx_win = 60.0, fx_overlap = 20.0, fx_floor = -20.0;
  fx->add_option("--post", fx_post)->required();
  fx->add_option("--sents,--doc", fx_doc)->required();
  fx->add_option("--vocab", fx_vocab)->required();
  fx->add_option("--regions", fx_regions, "First-pass regions bounding each sentence");
  fx->add_option("--skip-weight", fx_skip);
  fx->add_option("--emission-floor", fx_floor, "Log-posterior floor for windows with no path");
  fx->add_option("--window-s", fx_win);
  fx->add_option("--overlap-s", fx_overlap);
  fx->add_option("--out", fx_out)->required();

  // filter
  auto *fl = app.add_subcommand("filter", "Apply quality thresholds, sample CER bins, report label precision");
  std::string fl_in, fl_out, fl_sheet, fl_labels;
  quality::Thresholds fl_t;
  std::vector<double> fl_edges;
  int fl_per_bin = 0;
  fl->add_option("--segments", fl_in, "Filter-stage segment records")->required();
  fl->add_option("--cer", fl_t.cer);
  fl->add_option("--max-consec", fl_t.max_consec);
  fl->add_option("--error-ratio", fl_t.error_ratio);
  fl->add_option("--out", fl_out, "Accepted records");
  fl->add_option("--sample-edges", fl_edges, "CER bin edges")->delimiter(',');
  fl->add_option("--per-bin", fl_per_bin);
  fl->add_option("--sheet", fl_sheet, "Labeling sheet to write");
  fl->add_option("--labels", fl_labels, "Labeled sheet to score");

  // split
  auto *sp = app.add_subcommand("split", "Plan speaker/document-disjoint splits");
  std::string sp_manifest, sp_spec, sp_out;
  sp->add_option("--manifest", sp_manifest)->required();
  sp->add_option("--spec", sp_spec)->required();
  sp->add_option("--out", sp_out)->required();

  // synth
  auto *sy = app.add_subcommand("synth", "Generate a synthetic bundle with gold alignments");
  std::string sy_config, sy_out;
  sy->add_option("--config", sy_config, "Bundle config JSON");
  sy->add_option("--out-dir", sy_out)->required();

  // eval
  auto *ev = app.add_subcommand("eval", "Score a run against a synthetic bundle's gold");
  std::string ev_bundle, ev_run;
  int ev_k = 5;
  ev->add_option("--bundle", ev_bundle)->required();
  ev->add_option("--run", ev_run)->required();
  ev->add_option("--k", ev_k, "Boundary tolerance in frames");

  // validate
  auto *va = app.add_subcommand("validate", "Cross-check a run's triplets against its stage outputs");
  std::string va_run;
  va->add_option("--run", va_run)->required();

  // pipeline
  auto *pl = app.add_subcommand("pipeline", "Run every stage from a config file");
  std::string pl_config;
  pl->add_option("--config", pl_config)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigExit;
  }

  try {
    if (prep->parsed()) {
      int dropped = 0;
      if (prep_doc.empty()) prep_doc = fs::path(prep_in).stem().string();
      const auto sents = textproc::prepare_document(read_text(prep_in), prep_doc, {}, {}, &dropped);
      textproc::write_sentences(sents, prep_out);
      Json j{{"sentences", sents.size()}, {"dropped_lines", dropped}};
      if (!prep_lex.empty()) {
        const auto lex = textproc::read_lexicon(prep_lex);
        int unmapped = 0;
        for (const auto &s : sents) {
          unmapped += textproc::romanize(textproc::lexical_tokens(s.tokens), lex).unmapped_count;
        }
        j["unmapped_tokens"] = unmapped;
      }
      print_json(j);
    } else if (bt->parsed()) {
      const auto es = read_embeddings(bt_se), et = read_embeddings(bt_te);
      if (!bt_ss.empty() && es.num_sentences() != static_cast<int>(textproc::read_sentences(bt_ss).size())) {
        throw FormatError(bt_se + " does not match the sentence count of " + bt_ss);
      }
      if (!bt_ts.empty() && et.num_sentences() != static_cast<int>(textproc::read_sentences(bt_ts).size())) {
        throw FormatError(bt_te + " does not match the sentence count of " + bt_ts);
      }
      bt_params.seed = seed;
      const auto al = bitext::align_sentences(es, et, bt_params);
      write_jsonl(pipeline::pairs_to_json(al.pairs, bt_threshold), bt_out);
      print_json({{"pairs", al.pairs.size()}, {"total_cost", al.total_cost}});
    } else if (tl->parsed()) {
      const Vocab vocab = read_vocab(tl_vocab);
      const auto doc = read_token_file(tl_sent, vocab);
      std::vector<std::vector<int>> bg = doc;
      for (const auto &b : tl_bg) {
        const auto more = read_token_file(b, vocab);
        bg.insert(bg.end(), more.begin(), more.end());
      }
      const auto model = lm::train_biased(doc, bg, lm::lm_token_set(vocab), tl_lambda, tl_opts);
      lm::write_arpa(model, vocab, tl_out);
      print_json({{"doc_perplexity", lm::perplexity(model, doc)}});
    } else if (fp->parsed()) {
      const Vocab vocab = read_vocab(fp_vocab);
      const auto ids = sentence_ids(textproc::read_sentences(fp_doc), vocab);
      std::vector<PosteriorMatrix> parts;
      for (const auto &p : fp_posts) parts.push_back(read_posteriors(p));
      std::vector<std::pair<int, int>> segs;
      std::vector<float> data;
      int frames = 0;
      for (const auto &m : parts) {
        if (m.vocab_size() != vocab.size() || m.hop_ms() != parts[0].hop_ms()) {
          throw FormatError("posterior files disagree with the vocabulary or with each other");
        }
        segs.push_back({frames, frames + m.frames()});
        frames += m.frames();
        data.insert(data.end(), m.data().begin(), m.data().end());
      }
      const PosteriorMatrix post(frames, vocab.size(), parts[0].hop_ms(), std::move(data));
      if (!fp_segs.empty()) {
        if (parts.size() != 1) throw ConfigError("--segments needs exactly one posterior file");
        segs = pipeline::read_segments(fp_segs, post.hop_ms(), post.frames());
      } else if (parts.size() == 1) {
        segs = pipeline::segment_by_blanks(post, fp_gap);
      }
      const lm::NgramLM model = fp_lm.empty() ? lm::train_ngram(ids, lm::lm_token_set(vocab)) : lm::read_arpa(fp_lm, vocab);
      fp_opts.jobs = jobs;
      const auto res = anchor::first_pass(post, segs, ids, model, fp_opts);
      write_jsonl(pipeline::regions_to_json(res.regions), fp_out);
      print_json({{"segments", segs.size()},
                  {"skipped_segments", res.skipped_segments},
                  {"anchors", res.anchors.size()},
                  {"regions", res.regions.size()}});
    } else if (fx->parsed()) {
      const Vocab vocab = read_vocab(fx_vocab);
      const auto sents = textproc::read_sentences(fx_doc);
      const auto ids = sentence_ids(sents, vocab);
      const PosteriorMatrix post = read_posteriors(fx_post);
      if (post.vocab_size() != vocab.size()) throw FormatError("posteriors do not match the vocabulary");
      decode::WindowOptions win;
      win.len_frames = static_cast<int>(std::lround(fx_win * 1000.0 / post.hop_ms()));
      win.overlap_frames = static_cast<int>(std::lround(fx_overlap * 1000.0 / post.hop_ms()));
      win.jobs = jobs;
      if (std::isfinite(fx_floor)) win.emission_floor = static_cast<float>(fx_floor);
      std::vector<std::pair<int, int>> cand;
      if (!fx_regions.empty()) {
        cand = anchor::candidate_ranges(pipeline::read_regions(fx_regions), static_cast<int>(ids.size()), post.frames());
      }
      int failed = 0;
      const auto al = decode::flex_align_window(post, ids, fx_skip, win, cand, &failed);
      std::vector<std::string> sid;
      for (const auto &s : sents) sid.push_back(s.sent_id);
      write_jsonl(pipeline::alignment_to_json(al, sid, post.hop_ms()), fx_out);
      int aligned = 0;
      for (const auto &s : al.sentences) aligned += s.status == decode::SentenceStatus::kAligned;
      print_json({{"aligned", aligned}, {"skipped", static_cast<int>(al.sentences.size()) - aligned},
                  {"failed_windows", failed}});
    } else if (fl->parsed()) {
      const auto rows = read_jsonl(fl_in);
      std::vector<QualityStats> stats;
      std::map<std::string, QualityStats> by_id;
      for (const auto &r : rows) {
        stats.push_back(quality_from_json(r.at("quality")));
        by_id[r.at("utt_id").get<std::string>()] = stats.back();
      }
      const auto part = quality::post_filter(stats, fl_t);
      Json j{{"accepted", part.accepted.size()}, {"rejected", part.rejected.size()}};
      if (!fl_out.empty()) {
        std::vector<Json> acc;
        for (int i : part.accepted) acc.push_back(rows[i]);
        write_jsonl(acc, fl_out);
      }
      if (!fl_sheet.empty()) {
        if (fl_edges.empty() || fl_per_bin < 1) throw ConfigError("--sheet needs --sample-edges and --per-bin");
        std::vector<double> cers;
        for (const auto &s : stats) cers.push_back(s.cer);
        std::vector<quality::SheetRow> sheet;
        for (const auto &s : quality::bin_sample(cers, fl_edges, fl_per_bin, seed)) {
          sheet.push_back({rows[s.index].at("utt_id").get<std::string>(), quality::bin_name(s.bin, fl_edges),
                           rows[s.index].value("hyp", std::string()), std::nullopt});
        }
        quality::write_labeling_sheet(sheet, fl_sheet);
        j["sampled"] = sheet.size();
      }
      if (!fl_labels.empty()) {
        const auto sheet = quality::read_labeling_sheet(fl_labels);
        std::vector<quality::Thresholds> settings{fl_t};
        for (double c : {0.05, 0.1, 0.2, 0.3, 0.5, 1.0}) {
          quality::Thresholds t = fl_t;
          t.cer = c;
          settings.push_back(t);
        }
        j["precision"] = Json::array();
        for (const auto &p : quality::label_precision(sheet, by_id, settings)) {
          j["precision"].push_back({{"cer", p.thresholds.cer},
                                    {"max_consec", p.thresholds.max_consec},
                                    {"error_ratio", p.thresholds.error_ratio},
                                    {"labeled_accepted", p.labeled_accepted},
                                    {"good_accepted", p.good_accepted},
                                    {"precision", p.precision}});
        }
      }
      print_json(j);
    } else if (sp->parsed()) {
      const auto manifest = read_manifest(sp_manifest);
      const auto specs = splits::specs_from_json(read_json(sp_spec));
      splits::SplitOptions opts;
      opts.jobs = jobs;
      const auto a = splits::make_splits(manifest, specs, seed, opts);
      write_json(splits::to_json(a), sp_out);
      print_json({{"objective", a.report.objective}, {"constraints_hold", a.report.all_constraints()}});
    } else if (sy->parsed()) {
      const auto cfg = synth::bundle_config_from_json(sy_config.empty() ? nlohmann::json::object() : read_json(sy_config));
      synth::write_bundle(cfg, seed, sy_out, jobs);
      print_json({{"docs", cfg.n_docs}, {"out_dir", sy_out}});
    } else if (ev->parsed()) {
      print_json(pipeline::evaluate_run(ev_bundle, ev_run, ev_k).to_json());
    } else if (va->parsed()) {
      const auto res = pipeline::validate_run(va_run);
      for (const auto &p : res.problems) std::cerr << p << "\n";
      print_json({{"checked", res.checked}, {"problems", res.problems.size()}});
      if (!res.ok()) return kStageExit;
    } else if (pl->parsed()) {
      const fs::path cfg_path(pl_config);
      const nlohmann::json raw = read_json(cfg_path);
      auto cfg = pipeline::config_from_json(raw, cfg_path.parent_path());
      if (app.get_option("--seed")->count() > 0) cfg.seed = seed;
      if (app.get_option("--jobs")->count() > 0) cfg.jobs = jobs;
      const auto rep = pipeline::run_pipeline(cfg);
      Json j;
      j["stages"] = rep.stages;
      j["counts"] = Json::object();
      for (const auto &[k, v] : rep.counts) j["counts"][k] = v;
      print_json(j);
    }
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageExit;
  }
  return 0;
}
