// include/longalign/lm.h

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

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "longalign/fsa.h"
#include "longalign/vocab.h"

namespace longalign::lm {

using Context = std::vector<int>;

// Extended precision so that exp(-log(1/n)) comes back as n.
using LogProb = long double;

struct ContextEntry {
  std::map<int, LogProb> logp;  // explicit continuations, natural log
  LogProb backoff = 0.0;        // log weight applied before falling back
};

// Backoff n-gram model over a fixed set of token ids. tables[k] holds the
// contexts of length k; tables[0] has the single empty context, which lists
// every modeled token explicitly.
class NgramLM {
 public:
  NgramLM(int order, std::vector<int> tokens);

  int order() const { return order_; }
  const std::vector<int> &tokens() const { return tokens_; }
  bool models(int token) const;

  std::vector<std::map<Context, ContextEntry>> &tables() { return tables_; }
  const std::vector<std::map<Context, ContextEntry>> &tables() const { return tables_; }
  const ContextEntry *find(const Context &ctx) const;

  // log p(token | history); only the last order-1 history tokens matter.
  // Unmodeled tokens score as <unk> when it is modeled, else -inf.
  double logprob(std::span<const int> history, int token) const;
  LogProb logprob_ext(std::span<const int> history, int token) const;

  // Sum of log p over a sequence that starts from the empty context.
  double score(std::span<const int> tokens) const;

  // Probability mass p(. | ctx) summed over every modeled token.
  double total_mass(const Context &ctx) const;

  static NgramLM uniform(std::vector<int> tokens);

 private:
  int order_;
  std::vector<int> tokens_;
  std::vector<std::map<Context, ContextEntry>> tables_;
};

struct TrainOptions {
  int order = 3;
  // Mixed into the unigram distribution so no modeled token has zero mass.
  double floor = 1e-7;
};

// Interpolated Witten-Bell estimation. Throws EmptyCorpusError when the
// corpus has no tokens.
NgramLM train_ngram(std::span<const std::vector<int>> sequences, std::vector<int> tokens,
                    const TrainOptions &opts = {});

// Every non-blank id of the vocabulary.
std::vector<int> lm_token_set(const Vocab &vocab);

// Static mixture lambda * a + (1 - lambda) * b as one backoff model: the
// union of explicit n-grams gets exact mixture probabilities and backoff
// weights are renormalized.
NgramLM interpolate(const NgramLM &a, const NgramLM &b, double lambda);

// Document-biased model: interpolate(train(doc), train(background), lambda).
NgramLM train_biased(std::span<const std::vector<int>> document, std::span<const std::vector<int>> background,
                     std::vector<int> tokens, double lambda = 0.7, const TrainOptions &opts = {});

double perplexity(const NgramLM &lm, std::span<const int> tokens);
double perplexity(const NgramLM &lm, std::span<const std::vector<int>> sequences);

// Acceptor with one state per context. Backoff transitions are kBackoff
// failure arcs, so a label sequence has exactly one path and its weight equals
// the model score. Every state is final.
Fsa lm_to_fsa(const NgramLM &lm);

// ARPA text (log10), n-grams sorted by token strings.
void write_arpa(const NgramLM &lm, const Vocab &vocab, const std::filesystem::path &path);
NgramLM read_arpa(const std::filesystem::path &path, const Vocab &vocab);

}  // namespace longalign::lm
