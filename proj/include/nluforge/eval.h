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

#ifndef NLUFORGE_EVAL_H_
#define NLUFORGE_EVAL_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nluforge/dataset.h"

namespace nluforge {

struct LabelScore {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t support = 0;    // gold count
  size_t predicted = 0;  // predicted count
  size_t correct = 0;
};

// Per-label scores sorted by label. Zero denominators give 0. The weighted
// F1 averages per-label F1 by gold support; when no label has support it is
// 1 if nothing was predicted either and 0 otherwise.
struct Scores {
  std::vector<LabelScore> per_label;
  double weighted_f1 = 0.0;
  size_t total_support = 0;

  const LabelScore *find(const std::string &label) const;
};

Scores scores_from_counts(const std::map<std::string, LabelScore> &counts);

// Exact-match span scoring (start, end and kind all equal), per kind.
Scores span_f1(const std::vector<std::vector<SlotSpan>> &gold,
               const std::vector<std::vector<SlotSpan>> &pred);

// Token-level multi-class scoring over tags. "O" can be excluded.
Scores token_f1(const std::vector<std::vector<std::string>> &gold,
                const std::vector<std::vector<std::string>> &pred, bool include_o = true);

Scores multiclass_f1(std::span<const std::string> gold, std::span<const std::string> pred);

struct IntentScores {
  std::vector<std::pair<std::string, Scores>> axes;  // schema order
  double macro_f1 = 0.0;                             // mean over axes
};

IntentScores intent_scores(const std::vector<std::map<std::string, std::string>> &gold,
                           const std::vector<std::map<std::string, std::string>> &pred,
                           const LabelSchema &schema);

// ---------------------------------------------------------------------------
// Repeated k-fold plans and intervals.
// ---------------------------------------------------------------------------

struct FoldPlan {
  int k = 5;
  int repetitions = 10;
  uint64_t seed = 0;
  size_t n_items = 0;
  // assignments[rep][fold] = item indices, ascending.
  std::vector<std::vector<std::vector<size_t>>> assignments;
};

// Shuffles items per repetition and deals them round-robin, so fold sizes
// differ by at most one and the first n % k folds are the larger ones.
FoldPlan repeated_kfold(size_t n_items, int k, int repetitions, uint64_t seed);

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Linear-interpolation percentile (p in [0, 1]) of ascending values.
double percentile(std::span<const double> sorted, double p);

// Mean and 2.5th/97.5th percentiles of the fold scores. A single score
// collapses the interval (with a warning).
Interval ci95(std::span<const double> scores);

using FoldMetric = std::function<double(std::span<const size_t> items)>;

// Metric per fold, in (repetition, fold) order. The serial version is the
// reference; the OpenMP version writes each fold's slot directly, so both
// give identical results. `metric` must be safe to call concurrently.
std::vector<double> score_folds_serial(const FoldPlan &plan, const FoldMetric &metric);
std::vector<double> score_folds(const FoldPlan &plan, const FoldMetric &metric);

// ---------------------------------------------------------------------------
// Corpus statistics.
// ---------------------------------------------------------------------------

struct MentionStats {
  std::string kind;
  size_t mentions = 0;
  double median_length = 0.0;
  int min_length = 0;
  int max_length = 0;
  size_t vocab_size = 0;
  // Share of this kind's mention vocabulary also seen in the reference
  // corpus mentions of the same kind; -1 without reference.
  double vocab_overlap = -1.0;
};

struct CorpusStats {
  size_t utterances = 0;
  size_t tokens = 0;
  size_t vocab_size = 0;
  std::vector<MentionStats> mentions;
  // Against the reference corpus (zero / -1 when none given).
  size_t oov_tokens = 0;
  size_t oov_types = 0;
  double vocab_overlap = -1.0;
  double perplexity = -1.0;
};

std::set<std::string> vocabulary(const std::vector<std::vector<std::string>> &sentences);

// |test ∩ train| / |test|; 0 for an empty test vocabulary.
double vocab_overlap(const std::set<std::string> &test, const std::set<std::string> &train);

MentionStats mention_length_stats(const std::string &kind, std::span<const int> lengths);

// Perplexity of `eval` under an add-one bigram model of `reference`. Each
// sentence is wrapped in <s> ... </s>; tokens unseen in the reference map to
// a single <unk> type. The model vocabulary is the reference types plus
// </s> and <unk>.
double bigram_perplexity(const std::vector<std::vector<std::string>> &eval,
                         const std::vector<std::vector<std::string>> &reference);

CorpusStats corpus_stats(const Corpus &corpus, const Corpus *reference = nullptr);

std::string stats_to_json(const CorpusStats &stats);

// ---------------------------------------------------------------------------
// Evaluation reports.
// ---------------------------------------------------------------------------

struct MetricSummary {
  std::string name;
  double overall = 0.0;              // whole test set
  std::vector<double> fold_scores;   // (repetition, fold) order
  std::vector<size_t> fold_support;  // gold support per fold
  Interval interval;
};

struct EvalReport {
  int k = 0;
  int repetitions = 0;
  size_t items = 0;
  std::optional<Scores> slot_spans;
  std::optional<Scores> slot_tokens;
  std::vector<MetricSummary> metrics;  // "slot_span_f1", "slot_token_f1",
                                       // "intent_<axis>", "intent_macro"
  std::optional<IntentScores> intents;

  const MetricSummary *metric(const std::string &name) const;
};

struct SlotPredictions {
  std::vector<std::vector<std::string>> tags;  // one tag list per utterance
};

// Scores precomputed predictions. The model is trained once; folds only
// partition the test set to estimate variability.
EvalReport evaluate(const Corpus &test, const FoldPlan &plan,
                    const std::vector<std::vector<std::string>> *slot_tags,
                    const std::vector<std::map<std::string, std::string>> *intents);

using SlotPredictor = std::function<std::vector<std::string>(const Utterance &)>;
using IntentPredictor = std::function<std::map<std::string, std::string>(const Utterance &)>;

EvalReport evaluate(const Corpus &test, const FoldPlan &plan, const SlotPredictor &slots,
                    const IntentPredictor &intents);

std::string report_to_json(const EvalReport &report);
std::string report_to_table(const EvalReport &report);

}  // namespace nluforge

#endif  // NLUFORGE_EVAL_H_
