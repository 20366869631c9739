// Copyright 2026 The nlu-forge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nluforge/eval.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "nluforge/error.h"
#include "nluforge/rng.h"

namespace nluforge {

using nlohmann::json;

const LabelScore *Scores::find(const std::string &label) const {
  for (const auto &s : per_label) {
    if (s.label == label) return &s;
  }
  return nullptr;
}

Scores scores_from_counts(const std::map<std::string, LabelScore> &counts) {
  Scores out;
  double weighted = 0.0;
  size_t predicted_total = 0;
  for (auto [label, s] : counts) {
    s.label = label;
    s.precision = s.predicted > 0 ? double(s.correct) / double(s.predicted) : 0.0;
    s.recall = s.support > 0 ? double(s.correct) / double(s.support) : 0.0;
    s.f1 = s.precision + s.recall > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    out.total_support += s.support;
    predicted_total += s.predicted;
    weighted += double(s.support) * s.f1;
    out.per_label.push_back(s);
  }
  if (out.total_support > 0) {
    out.weighted_f1 = weighted / double(out.total_support);
  } else {
    out.weighted_f1 = predicted_total == 0 ? 1.0 : 0.0;
  }
  return out;
}

Scores span_f1(const std::vector<std::vector<SlotSpan>> &gold,
               const std::vector<std::vector<SlotSpan>> &pred) {
  if (gold.size() != pred.size()) throw UsageError("span_f1: gold/pred sizes differ");
  std::map<std::string, LabelScore> counts;
  for (size_t i = 0; i < gold.size(); ++i) {
    std::set<SlotSpan> gold_set(gold[i].begin(), gold[i].end());
    for (const auto &s : gold[i]) ++counts[s.kind].support;
    for (const auto &s : pred[i]) {
      auto &c = counts[s.kind];
      ++c.predicted;
      if (gold_set.erase(s) > 0) ++c.correct;
    }
  }
  return scores_from_counts(counts);
}

Scores multiclass_f1(std::span<const std::string> gold, std::span<const std::string> pred) {
  if (gold.size() != pred.size()) throw UsageError("multiclass_f1: gold/pred sizes differ");
  std::map<std::string, LabelScore> counts;
  for (size_t i = 0; i < gold.size(); ++i) {
    ++counts[gold[i]].support;
    ++counts[pred[i]].predicted;
    if (gold[i] == pred[i]) ++counts[gold[i]].correct;
  }
  return scores_from_counts(counts);
}

Scores token_f1(const std::vector<std::vector<std::string>> &gold,
                const std::vector<std::vector<std::string>> &pred, bool include_o) {
  if (gold.size() != pred.size()) throw UsageError("token_f1: gold/pred sizes differ");
  std::map<std::string, LabelScore> counts;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != pred[i].size()) {
      throw UsageError("token_f1: sequence " + std::to_string(i) + " length mismatch");
    }
    for (size_t t = 0; t < gold[i].size(); ++t) {
      const std::string &g = gold[i][t], &p = pred[i][t];
      if (include_o || g != "O") ++counts[g].support;
      if (include_o || p != "O") ++counts[p].predicted;
      if (g == p && (include_o || g != "O")) ++counts[g].correct;
    }
  }
  return scores_from_counts(counts);
}

IntentScores intent_scores(const std::vector<std::map<std::string, std::string>> &gold,
                           const std::vector<std::map<std::string, std::string>> &pred,
                           const LabelSchema &schema) {
  if (gold.size() != pred.size()) throw UsageError("intent_scores: gold/pred sizes differ");
  IntentScores out;
  for (const auto &axis : schema.intent_axes) {
    std::vector<std::string> g, p;
    for (size_t i = 0; i < gold.size(); ++i) {
      auto gi = gold[i].find(axis.name);
      if (gi == gold[i].end()) {
        throw DataError("intent_scores: gold item " + std::to_string(i) + " lacks axis '" +
                        axis.name + "'");
      }
      g.push_back(gi->second);
      auto pi = pred[i].find(axis.name);
      p.push_back(pi == pred[i].end() ? std::string() : pi->second);
    }
    out.axes.emplace_back(axis.name, multiclass_f1(g, p));
    out.macro_f1 += out.axes.back().second.weighted_f1;
  }
  if (!out.axes.empty()) out.macro_f1 /= double(out.axes.size());
  return out;
}

FoldPlan repeated_kfold(size_t n_items, int k, int repetitions, uint64_t seed) {
  if (k < 1 || repetitions < 1) throw UsageError("repeated_kfold: k and repetitions must be >= 1");
  if (static_cast<size_t>(k) > n_items) {
    throw UsageError("repeated_kfold: more folds than items");
  }
  FoldPlan plan;
  plan.k = k;
  plan.repetitions = repetitions;
  plan.seed = seed;
  plan.n_items = n_items;
  Rng rng(seed);
  for (int r = 0; r < repetitions; ++r) {
    std::vector<size_t> order(n_items);
    for (size_t i = 0; i < n_items; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::vector<size_t>> folds(k);
    for (size_t i = 0; i < n_items; ++i) folds[i % k].push_back(order[i]);
    for (auto &f : folds) std::sort(f.begin(), f.end());
    plan.assignments.push_back(std::move(folds));
  }
  return plan;
}

double percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw UsageError("percentile of an empty sample");
  const double h = (double(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - double(lo)) * (sorted[lo + 1] - sorted[lo]);
}

Interval ci95(std::span<const double> scores) {
  if (scores.empty()) throw UsageError("ci95 of an empty sample");
  if (scores.size() == 1) warn("ci95: single score, interval collapses to it");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  Interval out;
  double sum = 0.0;
  for (double s : scores) sum += s;
  out.mean = sum / double(scores.size());
  out.lo = percentile(sorted, 0.025);
  out.hi = percentile(sorted, 0.975);
  return out;
}

namespace {

std::vector<const std::vector<size_t> *> flatten(const FoldPlan &plan) {
  std::vector<const std::vector<size_t> *> folds;
  for (const auto &rep : plan.assignments) {
    for (const auto &fold : rep) folds.push_back(&fold);
  }
  return folds;
}

}  // namespace

std::vector<double> score_folds_serial(const FoldPlan &plan, const FoldMetric &metric) {
  std::vector<double> out;
  for (const auto *fold : flatten(plan)) out.push_back(metric(*fold));
  return out;
}

std::vector<double> score_folds(const FoldPlan &plan, const FoldMetric &metric) {
  const auto folds = flatten(plan);
  std::vector<double> out(folds.size());
  const auto n = static_cast<std::ptrdiff_t>(folds.size());
#pragma omp parallel for schedule(dynamic) if (n > 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = metric(*folds[i]);
  return out;
}

std::set<std::string> vocabulary(const std::vector<std::vector<std::string>> &sentences) {
  std::set<std::string> v;
  for (const auto &s : sentences) v.insert(s.begin(), s.end());
  return v;
}

double vocab_overlap(const std::set<std::string> &test, const std::set<std::string> &train) {
  if (test.empty()) return 0.0;
  size_t shared = 0;
  for (const auto &w : test) shared += train.count(w);
  return double(shared) / double(test.size());
}

MentionStats mention_length_stats(const std::string &kind, std::span<const int> lengths) {
  MentionStats s;
  s.kind = kind;
  s.mentions = lengths.size();
  if (lengths.empty()) return s;
  std::vector<int> sorted(lengths.begin(), lengths.end());
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  s.median_length = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.min_length = sorted.front();
  s.max_length = sorted.back();
  return s;
}

double bigram_perplexity(const std::vector<std::vector<std::string>> &eval,
                         const std::vector<std::vector<std::string>> &reference) {
  static const std::string kBos = "<s>", kEos = "</s>", kUnk = "<unk>";
  std::set<std::string> types = vocabulary(reference);
  const double vocab_size = double(types.size() + 2);  // + </s>, <unk>
  std::map<std::pair<std::string, std::string>, double> bigrams;
  std::unordered_map<std::string, double> history;
  for (const auto &s : reference) {
    std::string prev = kBos;
    for (size_t i = 0; i <= s.size(); ++i) {
      const std::string &w = i < s.size() ? s[i] : kEos;
      bigrams[{prev, w}] += 1.0;
      history[prev] += 1.0;
      prev = w;
    }
  }
  double log_prob = 0.0;
  size_t n = 0;
  for (const auto &s : eval) {
    std::string prev = kBos;
    for (size_t i = 0; i <= s.size(); ++i) {
      std::string w = i < s.size() ? s[i] : kEos;
      if (i < s.size() && !types.count(w)) w = kUnk;
      auto b = bigrams.find({prev, w});
      auto h = history.find(prev);
      const double num = (b == bigrams.end() ? 0.0 : b->second) + 1.0;
      const double den = (h == history.end() ? 0.0 : h->second) + vocab_size;
      log_prob += std::log(num / den);
      ++n;
      prev = w;
    }
  }
  if (n == 0) return 1.0;
  return std::exp(-log_prob / double(n));
}

CorpusStats corpus_stats(const Corpus &corpus, const Corpus *reference) {
  CorpusStats out;
  std::vector<std::vector<std::string>> sentences;
  for (const auto &u : corpus.utterances) sentences.push_back(u.tokens);
  out.utterances = sentences.size();
  for (const auto &s : sentences) out.tokens += s.size();
  const auto vocab = vocabulary(sentences);
  out.vocab_size = vocab.size();

  auto mention_vocab = [](const Corpus &c) {
    std::map<std::string, std::pair<std::vector<int>, std::set<std::string>>> by_kind;
    for (const auto &u : c.utterances) {
      for (const auto &span : spans_from_bio(u.slot_tags, c.schema)) {
        auto &[lengths, words] = by_kind[span.kind];
        lengths.push_back(span.end - span.start);
        for (int t = span.start; t < span.end; ++t) words.insert(u.tokens[t]);
      }
    }
    return by_kind;
  };
  const auto kinds = mention_vocab(corpus);
  decltype(mention_vocab(corpus)) ref_kinds;
  if (reference != nullptr) ref_kinds = mention_vocab(*reference);

  for (const auto &kind : corpus.schema.slot_kinds()) {
    auto it = kinds.find(kind);
    MentionStats ms = it == kinds.end()
                          ? mention_length_stats(kind, {})
                          : mention_length_stats(kind, it->second.first);
    if (it != kinds.end()) {
      ms.vocab_size = it->second.second.size();
      if (reference != nullptr) {
        auto rt = ref_kinds.find(kind);
        static const std::set<std::string> kEmpty;
        ms.vocab_overlap =
            vocab_overlap(it->second.second, rt == ref_kinds.end() ? kEmpty : rt->second.second);
      }
    }
    out.mentions.push_back(ms);
  }

  if (reference != nullptr) {
    std::vector<std::vector<std::string>> ref_sentences;
    for (const auto &u : reference->utterances) ref_sentences.push_back(u.tokens);
    const auto ref_vocab = vocabulary(ref_sentences);
    for (const auto &s : sentences) {
      for (const auto &w : s) out.oov_tokens += ref_vocab.count(w) ? 0 : 1;
    }
    for (const auto &w : vocab) out.oov_types += ref_vocab.count(w) ? 0 : 1;
    out.vocab_overlap = vocab_overlap(vocab, ref_vocab);
    out.perplexity = bigram_perplexity(sentences, ref_sentences);
  }
  return out;
}

std::string stats_to_json(const CorpusStats &stats) {
  json j;
  j["utterances"] = stats.utterances;
  j["tokens"] = stats.tokens;
  j["vocab_size"] = stats.vocab_size;
  json mentions = json::object();
  for (const auto &m : stats.mentions) {
    json jm = {{"mentions", m.mentions},         {"median_length", m.median_length},
               {"min_length", m.min_length},     {"max_length", m.max_length},
               {"vocab_size", m.vocab_size}};
    if (m.vocab_overlap >= 0) jm["vocab_overlap"] = m.vocab_overlap;
    mentions[m.kind] = jm;
  }
  j["mentions"] = mentions;
  if (stats.perplexity >= 0) {
    j["reference"] = {{"oov_tokens", stats.oov_tokens},
                      {"oov_types", stats.oov_types},
                      {"oov_rate", stats.vocab_size > 0
                                       ? double(stats.oov_types) / double(stats.vocab_size)
                                       : 0.0},
                      {"vocab_overlap", stats.vocab_overlap},
                      {"bigram_perplexity", stats.perplexity}};
  }
  return j.dump(2) + "\n";
}

const MetricSummary *EvalReport::metric(const std::string &name) const {
  for (const auto &m : metrics) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

EvalReport evaluate(const Corpus &test, const FoldPlan &plan,
                    const std::vector<std::vector<std::string>> *slot_tags,
                    const std::vector<std::map<std::string, std::string>> *intents) {
  const size_t n = test.utterances.size();
  if (plan.n_items != n) {
    throw UsageError("evaluate: fold plan covers " + std::to_string(plan.n_items) +
                     " items but the test set has " + std::to_string(n));
  }
  EvalReport report;
  report.k = plan.k;
  report.repetitions = plan.repetitions;
  report.items = n;

  auto summarize = [&](const std::string &name, double overall, const FoldMetric &metric,
                       const std::function<size_t(std::span<const size_t>)> &support) {
    MetricSummary m;
    m.name = name;
    m.overall = overall;
    m.fold_scores = score_folds(plan, metric);
    for (const auto &rep : plan.assignments) {
      for (const auto &fold : rep) m.fold_support.push_back(support(fold));
    }
    m.interval = ci95(m.fold_scores);
    report.metrics.push_back(std::move(m));
  };

  if (slot_tags != nullptr) {
    if (slot_tags->size() != n) throw UsageError("evaluate: one tag list per test item needed");
    std::vector<std::vector<SlotSpan>> gold_spans(n), pred_spans(n);
    std::vector<std::vector<std::string>> gold_tags(n);
    for (size_t i = 0; i < n; ++i) {
      gold_tags[i] = test.utterances[i].slot_tags;
      gold_spans[i] = spans_from_bio(gold_tags[i], test.schema);
      pred_spans[i] = spans_from_bio((*slot_tags)[i], test.schema);
    }
    report.slot_spans = span_f1(gold_spans, pred_spans);
    report.slot_tokens = token_f1(gold_tags, *slot_tags);

    auto subset = [](const auto &all, std::span<const size_t> items) {
      std::decay_t<decltype(all)> out;
      out.reserve(items.size());
      for (size_t i : items) out.push_back(all[i]);
      return out;
    };
    summarize(
        "slot_span_f1", report.slot_spans->weighted_f1,
        [&](std::span<const size_t> items) {
          return span_f1(subset(gold_spans, items), subset(pred_spans, items)).weighted_f1;
        },
        [&](std::span<const size_t> items) {
          size_t s = 0;
          for (size_t i : items) s += gold_spans[i].size();
          return s;
        });
    summarize(
        "slot_token_f1", report.slot_tokens->weighted_f1,
        [&](std::span<const size_t> items) {
          return token_f1(subset(gold_tags, items), subset(*slot_tags, items)).weighted_f1;
        },
        [&](std::span<const size_t> items) {
          size_t s = 0;
          for (size_t i : items) s += gold_tags[i].size();
          return s;
        });
  }

  if (intents != nullptr) {
    if (intents->size() != n) throw UsageError("evaluate: one intent map per test item needed");
    std::vector<std::map<std::string, std::string>> gold(n);
    for (size_t i = 0; i < n; ++i) gold[i] = test.utterances[i].intents;
    report.intents = intent_scores(gold, *intents, test.schema);
    auto fold_intents = [&](std::span<const size_t> items) {
      std::vector<std::map<std::string, std::string>> g, p;
      for (size_t i : items) {
        g.push_back(gold[i]);
        p.push_back((*intents)[i]);
      }
      return intent_scores(g, p, test.schema);
    };
    auto count = [](std::span<const size_t> items) { return items.size(); };
    for (size_t a = 0; a < report.intents->axes.size(); ++a) {
      summarize(
          "intent_" + report.intents->axes[a].first, report.intents->axes[a].second.weighted_f1,
          [&, a](std::span<const size_t> items) {
            return fold_intents(items).axes[a].second.weighted_f1;
          },
          count);
    }
    summarize(
        "intent_macro", report.intents->macro_f1,
        [&](std::span<const size_t> items) { return fold_intents(items).macro_f1; }, count);
  }
  return report;
}

EvalReport evaluate(const Corpus &test, const FoldPlan &plan, const SlotPredictor &slots,
                    const IntentPredictor &intents) {
  std::optional<std::vector<std::vector<std::string>>> tags;
  std::optional<std::vector<std::map<std::string, std::string>>> labels;
  if (slots) {
    tags.emplace();
    for (const auto &u : test.utterances) tags->push_back(slots(u));
  }
  if (intents) {
    labels.emplace();
    for (const auto &u : test.utterances) labels->push_back(intents(u));
  }
  return evaluate(test, plan, tags ? &*tags : nullptr, labels ? &*labels : nullptr);
}

namespace {

json scores_json(const Scores &s) {
  json labels = json::object();
  for (const auto &l : s.per_label) {
    labels[l.label] = {{"precision", l.precision}, {"recall", l.recall}, {"f1", l.f1},
                       {"support", l.support},     {"predicted", l.predicted}};
  }
  return {{"weighted_f1", s.weighted_f1}, {"support", s.total_support}, {"labels", labels}};
}

}  // namespace

std::string report_to_json(const EvalReport &report) {
  json j;
  j["k"] = report.k;
  j["repetitions"] = report.repetitions;
  j["items"] = report.items;
  j["interval_method"] = "2.5/97.5 percentiles of fold scores (linear interpolation)";
  json metrics = json::object();
  for (const auto &m : report.metrics) {
    metrics[m.name] = {{"overall", m.overall},
                       {"mean", m.interval.mean},
                       {"ci95", {m.interval.lo, m.interval.hi}},
                       {"fold_scores", m.fold_scores},
                       {"fold_support", m.fold_support}};
  }
  j["metrics"] = metrics;
  if (report.slot_spans) j["slot_spans"] = scores_json(*report.slot_spans);
  if (report.slot_tokens) j["slot_tokens"] = scores_json(*report.slot_tokens);
  if (report.intents) {
    json axes = json::object();
    for (const auto &[axis, s] : report.intents->axes) axes[axis] = scores_json(s);
    j["intents"] = {{"axes", axes}, {"macro_f1", report.intents->macro_f1}};
  }
  return j.dump(2) + "\n";
}

std::string report_to_table(const EvalReport &report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%zu test items, %d x %d-fold\n", report.items,
                report.repetitions, report.k);
  os << line;
  std::snprintf(line, sizeof(line), "%-28s %8s %8s %18s\n", "metric", "overall", "mean",
                "95% interval");
  os << line;
  for (const auto &m : report.metrics) {
    std::snprintf(line, sizeof(line), "%-28s %8.4f %8.4f   [%.4f, %.4f]\n", m.name.c_str(),
                  m.overall, m.interval.mean, m.interval.lo, m.interval.hi);
    os << line;
  }
  auto per_label = [&](const char *title, const Scores &s) {
    os << title << "\n";
    for (const auto &l : s.per_label) {
      std::snprintf(line, sizeof(line), "  %-12s P=%.4f R=%.4f F1=%.4f support=%zu\n",
                    l.label.c_str(), l.precision, l.recall, l.f1, l.support);
      os << line;
    }
  };
  if (report.slot_spans) per_label("slot spans", *report.slot_spans);
  if (report.slot_tokens) per_label("slot tokens", *report.slot_tokens);
  return os.str();
}

}  // namespace nluforge
