// src/splits/splits.cc

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

#include "longalign/splits.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "longalign/errors.h"
#include "longalign/rng.h"

namespace longalign::splits {

void validate_specs(std::span<const SplitSpec> specs) {
  std::set<std::string> names;
  double sum = 0.0;
  int trains = 0;
  for (const auto &s : specs) {
    if (!names.insert(s.name).second) throw ConfigError("duplicate split name: " + s.name);
    if (s.target_fraction < 0.0) throw ConfigError("negative target fraction for " + s.name);
    sum += s.target_fraction;
    if (s.name == kTrain) {
      ++trains;
      if (s.speaker_disjoint || s.document_disjoint) throw ConfigError("train cannot be disjoint from itself");
    }
    if (s.name == "test" && !(s.speaker_disjoint && s.document_disjoint)) {
      throw ConfigError("the test split must be both speaker and document disjoint from train");
    }
  }
  if (trains != 1) throw ConfigError("exactly one split must be named train");
  if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("target fractions must sum to 1");
}

std::vector<SplitSpec> specs_from_json(const nlohmann::json &j) {
  std::vector<SplitSpec> specs;
  try {
    const auto &arr = j.is_object() ? j.at("splits") : j;
    for (const auto &e : arr) {
      SplitSpec s;
      s.name = e.at("name").get<std::string>();
      s.target_fraction = e.at("target_fraction").get<double>();
      s.speaker_disjoint = e.value("require_speaker_disjoint_from_train", false);
      s.document_disjoint = e.value("require_document_disjoint_from_train", false);
      specs.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("bad split specification: ") + e.what());
  }
  return specs;
}

bool SplitReport::all_constraints() const {
  return std::all_of(constraints.begin(), constraints.end(), [](const auto &kv) { return kv.second; });
}

namespace {

struct DocInfo {
  std::vector<std::string> ids;
  std::vector<double> hours, male, female;
  std::vector<std::set<std::string>> speakers;
};

DocInfo collect_docs(std::span<const UtteranceManifestRow> manifest) {
  std::map<std::string, int> index;
  for (const auto &r : manifest) index.emplace(r.doc_id, 0);
  DocInfo info;
  for (auto &[id, k] : index) {
    k = static_cast<int>(info.ids.size());
    info.ids.push_back(id);
  }
  const std::size_t n = info.ids.size();
  info.hours.assign(n, 0.0);
  info.male.assign(n, 0.0);
  info.female.assign(n, 0.0);
  info.speakers.resize(n);
  for (const auto &r : manifest) {
    const int d = index.at(r.doc_id);
    const double h = r.duration_s / 3600.0;
    info.hours[d] += h;
    if (r.gender == Gender::kMale) info.male[d] += h;
    if (r.gender == Gender::kFemale) info.female[d] += h;
    info.speakers[d].insert(r.speaker_id);
  }
  return info;
}

double gender_l1(double m, double f, double gm, double gf) {
  if (m + f <= 0.0) return 0.0;
  return std::abs(m / (m + f) - gm) + std::abs(f / (m + f) - gf);
}

struct Problem {
  DocInfo docs;
  std::vector<SplitSpec> specs;
  int train = -1;
  std::vector<char> held;  // split takes whole components
  std::vector<double> target;
  double total = 0.0, gm = 0.0, gf = 0.0, alpha = 1.0;
  std::vector<std::vector<int>> comp_docs;
  std::vector<double> comp_hours;
  std::vector<int> doc_comp;
};

struct State {
  std::vector<int> split;  // per doc
  std::vector<double> h, m, f;

  void move(const Problem &p, int d, int to) {
    const int from = split[d];
    h[from] -= p.docs.hours[d];
    m[from] -= p.docs.male[d];
    f[from] -= p.docs.female[d];
    h[to] += p.docs.hours[d];
    m[to] += p.docs.male[d];
    f[to] += p.docs.female[d];
    split[d] = to;
  }
};

// Above any sum of hours and gender terms, so emptying a split never pays.
constexpr double kEmptySplitPenalty = 1000.0;

double objective(const Problem &p, const State &st) {
  double obj = 0.0;
  for (std::size_t s = 0; s < p.specs.size(); ++s) {
    if (p.target[s] > 0.0 && st.h[s] <= 0.0) obj += kEmptySplitPenalty;
    obj += std::abs(st.h[s] - p.target[s]) / p.total;
    obj += p.alpha * gender_l1(st.m[s], st.f[s], p.gm, p.gf);
  }
  return obj;
}

std::vector<std::vector<int>> components(const DocInfo &docs) {
  const int n = static_cast<int>(docs.ids.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::map<std::string, int> first_doc;
  for (int d = 0; d < n; ++d) {
    for (const auto &spk : docs.speakers[d]) {
      const auto [it, inserted] = first_doc.emplace(spk, d);
      if (!inserted) parent[find(d)] = find(it->second);
    }
  }
  std::map<int, std::vector<int>> groups;
  for (int d = 0; d < n; ++d) groups[find(d)].push_back(d);
  std::vector<std::vector<int>> out;
  for (auto &[root, members] : groups) out.push_back(std::move(members));
  std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.front() < b.front(); });
  return out;
}

std::string describe_component(const Problem &p, int c) {
  std::set<std::string> spk;
  for (int d : p.comp_docs[c]) spk.insert(p.docs.speakers[d].begin(), p.docs.speakers[d].end());
  auto first_few = [](const auto &names) {
    std::string s;
    int shown = 0;
    for (const auto &n : names) {
      if (shown++ == 5) return s + " ...";
      s += " " + n;
    }
    return s;
  };
  std::vector<std::string> docs;
  for (int d : p.comp_docs[c]) docs.push_back(p.docs.ids[d]);
  return "component " + std::to_string(c) + " (" + std::to_string(docs.size()) + " docs, " +
         std::to_string(spk.size()) + " speakers, " + std::to_string(100.0 * p.comp_hours[c] / p.total).substr(0, 5) +
         "% of hours; docs" + first_few(docs) + "; speakers" + first_few(spk) + ")";
}

bool comp_in_pool(const Problem &p, const State &st, int c) { return !p.held[st.split[p.comp_docs[c].front()]]; }

void move_comp(const Problem &p, State &st, int c, int to) {
  for (int d : p.comp_docs[c]) st.move(p, d, to);
}

// First-improvement local search over unit moves and swaps.
void improve(const Problem &p, State &st, const std::vector<char> &eligible_any) {
  const int n_comp = static_cast<int>(p.comp_docs.size());
  const int n_docs = static_cast<int>(p.docs.ids.size());
  const int n_splits = static_cast<int>(p.specs.size());
  double cur = objective(p, st);
  auto try_keep = [&](auto &&apply, auto &&undo) {
    apply();
    const double obj = objective(p, st);
    if (obj < cur - 1e-12) {
      cur = obj;
      return true;
    }
    undo();
    return false;
  };

  for (int pass = 0; pass < 200; ++pass) {
    bool changed = false;
    // Components between held splits and the pool.
    for (int c = 0; c < n_comp; ++c) {
      const int from = st.split[p.comp_docs[c].front()];
      const bool pooled = !p.held[from];
      std::vector<int> saved;
      for (int d : p.comp_docs[c]) saved.push_back(st.split[d]);
      auto restore = [&] {
        for (std::size_t k = 0; k < saved.size(); ++k) st.move(p, p.comp_docs[c][k], saved[k]);
      };
      for (int to = 0; to < n_splits; ++to) {
        if (to == from) continue;
        if (p.held[to] && !eligible_any[c]) continue;
        if (!p.held[to] && !(to == p.train && !pooled)) continue;
        if (try_keep([&] { move_comp(p, st, c, to); }, restore)) {
          changed = true;
          break;
        }
      }
    }
    // Documents inside the pool.
    for (int d = 0; d < n_docs; ++d) {
      const int from = st.split[d];
      if (p.held[from]) continue;
      for (int to = 0; to < n_splits; ++to) {
        if (to == from || p.held[to]) continue;
        if (try_keep([&] { st.move(p, d, to); }, [&] { st.move(p, d, from); })) {
          changed = true;
          break;
        }
      }
    }
    // Component swaps with at least one side held.
    for (int a = 0; a < n_comp; ++a) {
      for (int b = a + 1; b < n_comp; ++b) {
        const int sa = st.split[p.comp_docs[a].front()];
        const int sb = st.split[p.comp_docs[b].front()];
        if (sa == sb || (!p.held[sa] && !p.held[sb])) continue;
        if (p.held[sa] && !eligible_any[b]) continue;
        if (p.held[sb] && !eligible_any[a]) continue;
        std::vector<int> saved_a, saved_b;
        for (int d : p.comp_docs[a]) saved_a.push_back(st.split[d]);
        for (int d : p.comp_docs[b]) saved_b.push_back(st.split[d]);
        const int to_a = p.held[sb] ? sb : p.train;
        const int to_b = p.held[sa] ? sa : p.train;
        auto apply = [&] {
          move_comp(p, st, a, to_a);
          move_comp(p, st, b, to_b);
        };
        auto undo = [&] {
          for (std::size_t k = 0; k < saved_a.size(); ++k) st.move(p, p.comp_docs[a][k], saved_a[k]);
          for (std::size_t k = 0; k < saved_b.size(); ++k) st.move(p, p.comp_docs[b][k], saved_b[k]);
        };
        if (try_keep(apply, undo)) changed = true;
      }
    }
    // Document swaps inside the pool.
    for (int a = 0; a < n_docs; ++a) {
      for (int b = a + 1; b < n_docs; ++b) {
        const int sa = st.split[a], sb = st.split[b];
        if (sa == sb || p.held[sa] || p.held[sb]) continue;
        auto apply = [&] {
          st.move(p, a, sb);
          st.move(p, b, sa);
        };
        auto undo = [&] {
          st.move(p, a, sa);
          st.move(p, b, sb);
        };
        if (try_keep(apply, undo)) changed = true;
      }
    }
    if (!changed) break;
  }
}

State restart(const Problem &p, std::uint64_t seed, const std::vector<char> &eligible) {
  Rng rng(seed);
  const int n_splits = static_cast<int>(p.specs.size());
  State st;
  st.split.assign(p.docs.ids.size(), p.train);
  st.h.assign(n_splits, 0.0);
  st.m.assign(n_splits, 0.0);
  st.f.assign(n_splits, 0.0);
  for (std::size_t d = 0; d < p.docs.ids.size(); ++d) {
    st.h[p.train] += p.docs.hours[d];
    st.m[p.train] += p.docs.male[d];
    st.f[p.train] += p.docs.female[d];
  }

  // Greedy fill: each unit goes to the split with the largest remaining
  // deficit that can take it without overshooting by more than 10%.
  auto pick = [&](double hours, bool want_held) {
    int best = -1;
    double best_deficit = 0.0;
    for (int s = 0; s < n_splits; ++s) {
      if (s == p.train || static_cast<bool>(p.held[s]) != want_held) continue;
      const double deficit = p.target[s] - st.h[s];
      if (deficit <= 0.0 || hours > deficit + 0.1 * p.target[s]) continue;
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = s;
      }
    }
    return best;
  };
  std::vector<int> comp_order(p.comp_docs.size());
  std::iota(comp_order.begin(), comp_order.end(), 0);
  rng.shuffle(comp_order);
  for (int c : comp_order) {
    if (!eligible[c]) continue;
    const int s = pick(p.comp_hours[c], true);
    if (s >= 0) move_comp(p, st, c, s);
  }
  std::vector<int> doc_order;
  for (std::size_t d = 0; d < p.docs.ids.size(); ++d) {
    if (!p.held[st.split[d]]) doc_order.push_back(static_cast<int>(d));
  }
  rng.shuffle(doc_order);
  for (int d : doc_order) {
    const int s = pick(p.docs.hours[d], false);
    if (s >= 0) st.move(p, d, s);
  }
  improve(p, st, eligible);
  return st;
}

}  // namespace

SplitReport compute_report(std::span<const UtteranceManifestRow> manifest, std::span<const SplitSpec> specs,
                           const std::map<std::string, std::string> &doc_split, double gender_weight) {
  const DocInfo docs = collect_docs(manifest);
  SplitReport rep;
  double m_all = 0.0, f_all = 0.0;
  for (std::size_t d = 0; d < docs.ids.size(); ++d) {
    rep.total_hours += docs.hours[d];
    m_all += docs.male[d];
    f_all += docs.female[d];
  }
  if (m_all + f_all > 0.0) {
    rep.global_male_share = m_all / (m_all + f_all);
    rep.global_female_share = f_all / (m_all + f_all);
  }
  std::map<std::string, std::set<std::string>> split_speakers, split_docs;
  std::map<std::string, double> male, female;
  bool complete = true;
  for (const auto &s : specs) {
    rep.splits[s.name].target_hours = s.target_fraction * rep.total_hours;
  }
  for (std::size_t d = 0; d < docs.ids.size(); ++d) {
    const auto it = doc_split.find(docs.ids[d]);
    if (it == doc_split.end() || !rep.splits.count(it->second)) {
      complete = false;
      continue;
    }
    SplitStats &st = rep.splits[it->second];
    st.hours += docs.hours[d];
    male[it->second] += docs.male[d];
    female[it->second] += docs.female[d];
    split_docs[it->second].insert(docs.ids[d]);
    split_speakers[it->second].insert(docs.speakers[d].begin(), docs.speakers[d].end());
  }
  rep.constraints["all_documents_assigned"] = complete && doc_split.size() == docs.ids.size();
  const auto &train_spk = split_speakers[kTrain];
  const auto &train_docs = split_docs[kTrain];
  for (const auto &s : specs) {
    SplitStats &st = rep.splits[s.name];
    const double m = male[s.name], f = female[s.name];
    if (m + f > 0.0) {
      st.male_share = m / (m + f);
      st.female_share = f / (m + f);
    }
    st.gender_l1 = gender_l1(m, f, rep.global_male_share, rep.global_female_share);
    st.docs = static_cast<int>(split_docs[s.name].size());
    st.speakers = static_cast<int>(split_speakers[s.name].size());
    if (rep.total_hours > 0.0) rep.objective += std::abs(st.hours - st.target_hours) / rep.total_hours;
    rep.objective += gender_weight * st.gender_l1;
    if (s.name == kTrain) continue;
    if (s.speaker_disjoint) {
      bool ok = true;
      for (const auto &spk : split_speakers[s.name]) ok = ok && !train_spk.count(spk);
      rep.constraints[s.name + ".speaker_disjoint"] = ok;
    }
    if (s.document_disjoint) {
      bool ok = true;
      for (const auto &doc : split_docs[s.name]) ok = ok && !train_docs.count(doc);
      rep.constraints[s.name + ".document_disjoint"] = ok;
    }
  }
  return rep;
}

SplitAssignment make_splits(std::span<const UtteranceManifestRow> manifest, std::span<const SplitSpec> specs,
                            std::uint64_t seed, const SplitOptions &opts) {
  if (manifest.empty()) throw EmptyInputError("manifest is empty");
  validate_specs(specs);
  Problem p;
  p.docs = collect_docs(manifest);
  p.specs.assign(specs.begin(), specs.end());
  p.alpha = opts.gender_weight;
  double m_all = 0.0, f_all = 0.0;
  for (std::size_t d = 0; d < p.docs.ids.size(); ++d) {
    p.total += p.docs.hours[d];
    m_all += p.docs.male[d];
    f_all += p.docs.female[d];
  }
  if (p.total <= 0.0) throw EmptyInputError("manifest has no duration");
  if (m_all + f_all > 0.0) {
    p.gm = m_all / (m_all + f_all);
    p.gf = f_all / (m_all + f_all);
  }
  for (std::size_t s = 0; s < p.specs.size(); ++s) {
    if (p.specs[s].name == kTrain) p.train = static_cast<int>(s);
    p.held.push_back(p.specs[s].speaker_disjoint ? 1 : 0);
    p.target.push_back(p.specs[s].target_fraction * p.total);
  }
  p.comp_docs = components(p.docs);
  p.doc_comp.assign(p.docs.ids.size(), 0);
  for (std::size_t c = 0; c < p.comp_docs.size(); ++c) {
    double h = 0.0;
    for (int d : p.comp_docs[c]) {
      h += p.docs.hours[d];
      p.doc_comp[d] = static_cast<int>(c);
    }
    p.comp_hours.push_back(h);
  }

  // A component is eligible for speaker-disjoint splits only if it fits the
  // largest of them; every such split needs some eligible component.
  std::vector<char> eligible(p.comp_docs.size(), 0);
  double max_held = 0.0;
  for (std::size_t s = 0; s < p.specs.size(); ++s) {
    if (p.held[s]) max_held = std::max(max_held, p.target[s] * (1.0 + opts.size_slack));
  }
  int smallest = 0;
  for (std::size_t c = 0; c < p.comp_docs.size(); ++c) {
    eligible[c] = p.comp_hours[c] <= max_held;
    if (p.comp_hours[c] < p.comp_hours[smallest]) smallest = static_cast<int>(c);
  }
  for (std::size_t s = 0; s < p.specs.size(); ++s) {
    if (!p.held[s] || p.target[s] <= 0.0) continue;
    if (p.comp_hours[smallest] > p.target[s] * (1.0 + opts.size_slack)) {
      throw InfeasibleError("split " + p.specs[s].name + " cannot be speaker disjoint from train: even the smallest " +
                                "speaker-connected group is too large: " + describe_component(p, smallest),
                            describe_component(p, smallest));
    }
  }

  const int restarts = std::max(1, opts.restarts);
  std::vector<State> results(restarts);
  std::vector<double> scores(restarts);
  auto run = [&](int r) {
    results[r] = restart(p, Rng::derive(seed, static_cast<std::uint64_t>(r)), eligible);
    scores[r] = objective(p, results[r]);
  };
  const int jobs = std::max(1, std::min(opts.jobs, restarts));
  if (jobs == 1) {
    for (int r = 0; r < restarts; ++r) run(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (int r = next++; r < restarts; r = next++) run(r);
      });
    }
    for (auto &th : pool) th.join();
  }
  int best = 0;
  for (int r = 1; r < restarts; ++r) {
    if (scores[r] < scores[best]) best = r;
  }

  const State &st = results[best];
  for (std::size_t s = 0; s < p.specs.size(); ++s) {
    if (p.target[s] > 0.0 && st.h[s] <= 0.0) {
      int blocking = smallest;
      for (std::size_t c = 0; c < p.comp_docs.size(); ++c) {
        if (comp_in_pool(p, st, static_cast<int>(c)) && p.comp_hours[c] > p.comp_hours[blocking]) {
          blocking = static_cast<int>(c);
        }
      }
      throw InfeasibleError("split " + p.specs[s].name + " ends up empty under the disjointness constraints; blocked by " +
                                describe_component(p, blocking),
                            describe_component(p, blocking));
    }
  }

  SplitAssignment out;
  for (std::size_t d = 0; d < p.docs.ids.size(); ++d) out.doc_split[p.docs.ids[d]] = p.specs[st.split[d]].name;
  out.report = compute_report(manifest, specs, out.doc_split, opts.gender_weight);
  return out;
}

Json to_json(const SplitAssignment &a) {
  Json j;
  j["assignment"] = Json::object();
  for (const auto &[doc, split] : a.doc_split) j["assignment"][doc] = split;
  Json rep;
  rep["total_hours"] = a.report.total_hours;
  rep["global_gender"] = {{"M", a.report.global_male_share}, {"F", a.report.global_female_share}};
  rep["splits"] = Json::object();
  for (const auto &[name, st] : a.report.splits) {
    rep["splits"][name] = {{"hours", st.hours},
                           {"target_hours", st.target_hours},
                           {"hours_deviation", st.target_hours > 0.0 ? st.hours / st.target_hours - 1.0 : 0.0},
                           {"gender", {{"M", st.male_share}, {"F", st.female_share}}},
                           {"gender_l1", st.gender_l1},
                           {"docs", st.docs},
                           {"speakers", st.speakers}};
  }
  rep["constraints"] = Json::object();
  for (const auto &[name, ok] : a.report.constraints) rep["constraints"][name] = ok;
  rep["objective"] = a.report.objective;
  j["report"] = std::move(rep);
  return j;
}

}  // namespace longalign::splits
