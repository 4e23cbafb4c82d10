// src/lm/lm.cc

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

#include "longalign/lm.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "longalign/errors.h"

namespace longalign::lm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Context suffix(std::span<const int> seq, std::size_t len) {
  return Context(seq.end() - static_cast<std::ptrdiff_t>(len), seq.end());
}

}  // namespace

NgramLM::NgramLM(int order, std::vector<int> tokens) : order_(order), tokens_(std::move(tokens)) {
  if (order < 1) throw ConfigError("n-gram order must be >= 1");
  std::sort(tokens_.begin(), tokens_.end());
  tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
  if (tokens_.empty()) throw ConfigError("language model needs at least one token");
  tables_.resize(order);
  tables_[0][{}];
}

bool NgramLM::models(int token) const { return std::binary_search(tokens_.begin(), tokens_.end(), token); }

const ContextEntry *NgramLM::find(const Context &ctx) const {
  if (ctx.size() >= tables_.size()) return nullptr;
  auto it = tables_[ctx.size()].find(ctx);
  return it == tables_[ctx.size()].end() ? nullptr : &it->second;
}

double NgramLM::logprob(std::span<const int> history, int token) const {
  return static_cast<double>(logprob_ext(history, token));
}

LogProb NgramLM::logprob_ext(std::span<const int> history, int token) const {
  if (!models(token)) {
    if (!models(Vocab::kUnk)) return kNegInf;
    token = Vocab::kUnk;
  }
  LogProb acc = 0.0;
  for (int k = std::min<int>(order_ - 1, static_cast<int>(history.size())); k >= 0; --k) {
    const ContextEntry *e = find(suffix(history, k));
    if (!e) continue;
    auto it = e->logp.find(token);
    if (it != e->logp.end()) return acc + it->second;
    acc += e->backoff;
  }
  return kNegInf;
}

double NgramLM::score(std::span<const int> tokens) const {
  LogProb total = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) total += logprob_ext(tokens.first(i), tokens[i]);
  return static_cast<double>(total);
}

double NgramLM::total_mass(const Context &ctx) const {
  double mass = 0.0;
  for (int w : tokens_) mass += std::exp(logprob(ctx, w));
  return mass;
}

NgramLM NgramLM::uniform(std::vector<int> tokens) {
  NgramLM lm(1, std::move(tokens));
  const LogProb lp = -std::log(static_cast<LogProb>(lm.tokens_.size()));
  for (int w : lm.tokens_) lm.tables_[0][{}].logp[w] = lp;
  return lm;
}

std::vector<int> lm_token_set(const Vocab &vocab) {
  std::vector<int> ids;
  for (int i = 1; i < vocab.size(); ++i) ids.push_back(i);
  return ids;
}

NgramLM train_ngram(std::span<const std::vector<int>> sequences, std::vector<int> tokens, const TrainOptions &opts) {
  NgramLM lm(opts.order, std::move(tokens));
  const int order = lm.order();

  // counts[k][context of length k][token]
  std::vector<std::map<Context, std::map<int, long>>> counts(order);
  long total = 0;
  for (const auto &raw : sequences) {
    std::vector<int> seq;
    seq.reserve(raw.size());
    for (int t : raw) {
      if (lm.models(t)) {
        seq.push_back(t);
      } else if (lm.models(Vocab::kUnk)) {
        seq.push_back(Vocab::kUnk);
      }
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
      for (int k = 0; k < order && k <= static_cast<int>(i); ++k) {
        ++counts[k][Context(seq.begin() + static_cast<std::ptrdiff_t>(i - k), seq.begin() + static_cast<std::ptrdiff_t>(i))][seq[i]];
      }
      ++total;
    }
  }
  if (total == 0) throw EmptyCorpusError("cannot train a language model on an empty corpus");

  auto &tables = lm.tables();
  const double vocab_size = static_cast<double>(lm.tokens().size());
  {
    const auto &uni = counts[0][{}];
    const double types = static_cast<double>(uni.size());
    auto &entry = tables[0][{}];
    for (int w : lm.tokens()) {
      auto it = uni.find(w);
      const double c = it == uni.end() ? 0.0 : static_cast<double>(it->second);
      const double p = (c + types / vocab_size) / (static_cast<double>(total) + types);
      entry.logp[w] = std::log((1.0 - opts.floor) * p + opts.floor / vocab_size);
    }
  }
  for (int k = 1; k < order; ++k) {
    for (const auto &[ctx, conts] : counts[k]) {
      double c_ctx = 0.0;
      for (const auto &[w, c] : conts) c_ctx += static_cast<double>(c);
      const double types = static_cast<double>(conts.size());
      const std::span<const int> lower(ctx.data() + 1, ctx.size() - 1);
      ContextEntry entry;
      for (const auto &[w, c] : conts) {
        const double p_lower = std::exp(lm.logprob(lower, w));
        entry.logp[w] = std::log((static_cast<double>(c) + types * p_lower) / (c_ctx + types));
      }
      entry.backoff = std::log(types / (c_ctx + types));
      tables[k].emplace(ctx, std::move(entry));
    }
  }
  return lm;
}

NgramLM interpolate(const NgramLM &a, const NgramLM &b, double lambda) {
  if (a.order() != b.order() || a.tokens() != b.tokens()) {
    throw ConfigError("interpolated models must share order and token set");
  }
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("interpolation weight must lie in [0, 1]");
  NgramLM out(a.order(), a.tokens());
  auto &tables = out.tables();
  for (int k = 0; k < a.order(); ++k) {
    std::set<Context> contexts;
    for (const auto &[ctx, e] : a.tables()[k]) contexts.insert(ctx);
    for (const auto &[ctx, e] : b.tables()[k]) contexts.insert(ctx);
    for (const auto &ctx : contexts) {
      std::set<int> words;
      if (const auto *e = a.find(ctx)) {
        for (const auto &[w, lp] : e->logp) words.insert(w);
      }
      if (const auto *e = b.find(ctx)) {
        for (const auto &[w, lp] : e->logp) words.insert(w);
      }
      ContextEntry entry;
      double explicit_mass = 0.0;
      double lower_mass = 0.0;
      const std::span<const int> lower(ctx.data() + (ctx.empty() ? 0 : 1), ctx.empty() ? 0 : ctx.size() - 1);
      for (int w : words) {
        const double p = lambda * std::exp(a.logprob(ctx, w)) + (1.0 - lambda) * std::exp(b.logprob(ctx, w));
        entry.logp[w] = std::log(p);
        explicit_mass += p;
        if (k > 0) lower_mass += std::exp(out.logprob(lower, w));
      }
      if (k > 0) {
        const double num = 1.0 - explicit_mass;
        const double den = 1.0 - lower_mass;
        entry.backoff = (num > 0.0 && den > 1e-12) ? std::log(num / den) : 0.0;
      }
      if (!entry.logp.empty() || k == 0) tables[k][ctx] = std::move(entry);
    }
  }
  return out;
}

NgramLM train_biased(std::span<const std::vector<int>> document, std::span<const std::vector<int>> background,
                     std::vector<int> tokens, double lambda, const TrainOptions &opts) {
  const NgramLM doc = train_ngram(document, tokens, opts);
  const NgramLM bg = train_ngram(background, std::move(tokens), opts);
  return interpolate(doc, bg, lambda);
}

namespace {

// Running mean of per-token log probabilities; stays exact when they are
// all equal, which a plain sum divided by n does not.
struct MeanLogProb {
  LogProb mean = 0.0;
  std::size_t n = 0;
  void add(const NgramLM &lm, std::span<const int> seq) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const LogProb lp = lm.logprob_ext(seq.first(i), seq[i]);
      ++n;
      mean = lp == kNegInf || mean == kNegInf ? kNegInf : mean + (lp - mean) / static_cast<LogProb>(n);
    }
  }
  double perplexity() const { return static_cast<double>(std::exp(-mean)); }
};

}  // namespace

double perplexity(const NgramLM &lm, std::span<const int> tokens) {
  if (tokens.empty()) throw EmptyInputError("perplexity of an empty sequence");
  MeanLogProb m;
  m.add(lm, tokens);
  return m.perplexity();
}

double perplexity(const NgramLM &lm, std::span<const std::vector<int>> sequences) {
  MeanLogProb m;
  for (const auto &seq : sequences) m.add(lm, seq);
  if (m.n == 0) throw EmptyInputError("perplexity of an empty corpus");
  return m.perplexity();
}

Fsa lm_to_fsa(const NgramLM &lm) {
  Fsa fsa;
  std::map<Context, int> state_of;
  for (const auto &table : lm.tables()) {
    for (const auto &[ctx, e] : table) state_of[ctx] = fsa.add_state();
  }
  fsa.start = state_of.at({});

  auto longest_state = [&](std::span<const int> seq, int max_len) {
    for (int m = std::min<int>(max_len, static_cast<int>(seq.size())); m >= 0; --m) {
      auto it = state_of.find(suffix(seq, m));
      if (it != state_of.end()) return it->second;
    }
    return fsa.start;
  };

  for (const auto &table : lm.tables()) {
    for (const auto &[ctx, e] : table) {
      const int src = state_of.at(ctx);
      Context next = ctx;
      next.push_back(0);
      for (const auto &[w, lp] : e.logp) {
        next.back() = w;
        fsa.add_arc(src, longest_state(next, lm.order() - 1), w, static_cast<double>(lp));
      }
      if (!ctx.empty()) {
        const std::span<const int> shorter(ctx.data() + 1, ctx.size() - 1);
        fsa.add_arc(src, longest_state(shorter, static_cast<int>(shorter.size())), kBackoff, static_cast<double>(e.backoff));
      }
      fsa.set_final(src, 0.0);
    }
  }
  return fsa;
}

namespace {

struct ArpaLine {
  std::vector<std::string> words;
  double logp;
  bool has_backoff;
  double backoff;
};

std::string fmt_log10(double ln_value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.8g", ln_value / std::numbers::ln10);
  return buf;
}

}  // namespace

void write_arpa(const NgramLM &lm, const Vocab &vocab, const std::filesystem::path &path) {
  std::vector<std::vector<ArpaLine>> by_order(lm.order());
  for (int k = 0; k < lm.order(); ++k) {
    for (const auto &[ctx, e] : lm.tables()[k]) {
      for (const auto &[w, lp] : e.logp) {
        Context gram = ctx;
        gram.push_back(w);
        ArpaLine line{{}, static_cast<double>(lp), false, 0.0};
        for (int id : gram) line.words.push_back(vocab.token(id));
        if (k + 1 < lm.order()) {
          if (const auto *ge = lm.find(gram)) {
            line.has_backoff = true;
            line.backoff = static_cast<double>(ge->backoff);
          }
        }
        by_order[k].push_back(std::move(line));
      }
    }
    std::sort(by_order[k].begin(), by_order[k].end(),
              [](const ArpaLine &x, const ArpaLine &y) { return x.words < y.words; });
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "\n\\data\\\n";
  for (int k = 0; k < lm.order(); ++k) out << "ngram " << k + 1 << "=" << by_order[k].size() << "\n";
  for (int k = 0; k < lm.order(); ++k) {
    out << "\n\\" << k + 1 << "-grams:\n";
    for (const auto &line : by_order[k]) {
      out << fmt_log10(line.logp) << '\t';
      for (std::size_t i = 0; i < line.words.size(); ++i) out << (i ? " " : "") << line.words[i];
      if (line.has_backoff) out << '\t' << fmt_log10(line.backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
  if (!out) throw IoError("write failed: " + path.string());
}

NgramLM read_arpa(const std::filesystem::path &path, const Vocab &vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  struct Gram {
    Context ids;
    double logp;
    bool has_backoff;
    double backoff;
  };
  std::vector<Gram> grams;
  int order = 0;
  int section = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == "\\data\\" || line.rfind("ngram ", 0) == 0) continue;
    if (line == "\\end\\") break;
    if (line.front() == '\\') {
      section = std::stoi(line.substr(1));
      order = std::max(order, section);
      continue;
    }
    if (section == 0) throw FormatError(path.string() + ": n-gram line outside a section");
    std::istringstream ss(line);
    Gram g{{}, 0.0, false, 0.0};
    double lp10;
    if (!(ss >> lp10)) throw FormatError(path.string() + ": bad line '" + line + "'");
    g.logp = lp10 * std::numbers::ln10;
    for (int i = 0; i < section; ++i) {
      std::string w;
      if (!(ss >> w)) throw FormatError(path.string() + ": short n-gram '" + line + "'");
      if (!vocab.contains(w)) throw FormatError(path.string() + ": token '" + w + "' not in vocabulary");
      g.ids.push_back(vocab.lookup(w));
    }
    double bo10;
    if (ss >> bo10) {
      g.has_backoff = true;
      g.backoff = bo10 * std::numbers::ln10;
    }
    grams.push_back(std::move(g));
  }
  if (order == 0) throw FormatError(path.string() + ": no n-grams");
  std::vector<int> tokens;
  for (const auto &g : grams) {
    if (g.ids.size() == 1) tokens.push_back(g.ids[0]);
  }
  NgramLM lm(order, tokens);
  auto &tables = lm.tables();
  for (const auto &g : grams) {
    const Context ctx(g.ids.begin(), g.ids.end() - 1);
    tables[ctx.size()][ctx].logp[g.ids.back()] = g.logp;
    if (g.has_backoff && g.ids.size() < static_cast<std::size_t>(order)) tables[g.ids.size()][g.ids].backoff = g.backoff;
  }
  return lm;
}

}  // namespace longalign::lm
