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

#ifndef NLUFORGE_CRF_H_
#define NLUFORGE_CRF_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nluforge/dataset.h"
#include "nluforge/embeddings.h"

namespace nluforge {

// ---------------------------------------------------------------------------
// Chain kernels. Emissions are T x L row-major; transitions are L x L with
// transitions[prev * L + next].
// ---------------------------------------------------------------------------

struct ChainPotentials {
  int length = 0;
  int labels = 0;
  std::vector<double> emissions;

  double &at(int t, int y) { return emissions[size_t(t) * labels + y]; }
  double at(int t, int y) const { return emissions[size_t(t) * labels + y]; }
};

double log_sum_exp(std::span<const double> values);

// Forward algorithm in log space. Zero-length chains have log Z = 0.
double log_partition(const ChainPotentials &chain, std::span<const double> transitions);

// Unnormalized log score of one tag path.
double path_score(const ChainPotentials &chain, std::span<const double> transitions,
                  std::span<const int> path);

// Max-score path; ties go to the lower label index.
std::vector<int> viterbi(const ChainPotentials &chain, std::span<const double> transitions,
                         double *best_score = nullptr);

struct Marginals {
  double log_z = 0.0;
  std::vector<double> node;  // T x L
  std::vector<double> edge;  // L x L, summed over positions 1..T-1
};
Marginals forward_backward(const ChainPotentials &chain, std::span<const double> transitions);

// ---------------------------------------------------------------------------
// Features and model.
// ---------------------------------------------------------------------------

class FeatureDict {
 public:
  // Returns the id of `name`, adding it unless frozen (then -1).
  int intern(const std::string &name);
  int lookup(const std::string &name) const;
  size_t size() const { return names_.size(); }
  const std::vector<std::string> &names() const { return names_; }
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> names_;
  bool frozen_ = false;
};

struct FeatureVector {
  std::vector<std::string> sparse;  // active binary features
  std::vector<double> dense;        // raw embedding of the token, if any
};

// Orthographic features for token t: bias, +/-2 word window with <s>/</s>
// padding, word bigram, shape, prefixes and suffixes of length 1-3, date and
// number flags; lemma (+/-1) and POS (+/-2) windows when those columns are
// given. Throws DataError when t is out of range.
FeatureVector extract_features(std::span<const std::string> tokens,
                               std::span<const std::string> lemmas,
                               std::span<const std::string> pos,
                               const EmbeddingModel *embeddings, size_t t);

bool is_date_like(const std::string &token);
std::string word_shape(const std::string &token);

struct EmbeddingRef {
  std::string path;
  std::string checksum;
};

// Parameters live in one flat vector: sparse emission weights (F x L), then
// dense emission weights (dense_dim x L), then transitions (L x L).
class CrfModel {
 public:
  std::vector<std::string> labels;
  FeatureDict features;
  int dense_dim = 0;
  std::vector<double> dense_mean;
  std::vector<double> dense_std;
  double l2 = 0.0;
  std::optional<EmbeddingRef> embedding;
  std::vector<double> params;

  int num_labels() const { return static_cast<int>(labels.size()); }
  size_t sparse_offset() const { return 0; }
  size_t dense_offset() const { return features.size() * labels.size(); }
  size_t transition_offset() const { return dense_offset() + size_t(dense_dim) * labels.size(); }
  size_t num_params() const { return transition_offset() + labels.size() * labels.size(); }
  std::span<const double> transitions() const {
    return {params.data() + transition_offset(), labels.size() * labels.size()};
  }
  // Sizes `params` (zeros) after features/labels/dense_dim are settled.
  void allocate();
};

struct CompiledSentence {
  int length = 0;
  std::vector<std::vector<int>> features;  // per position, known ids only
  std::vector<double> dense;               // length x dense_dim, standardized
  std::vector<int> gold;                   // label ids; empty when unlabeled
};

// Interns features when `grow` is set and the dictionary is not frozen.
CompiledSentence compile_sentence(CrfModel &model, const Utterance &utt,
                                  const EmbeddingModel *embeddings, bool grow);
CompiledSentence compile_sentence(const CrfModel &model, const Utterance &utt,
                                  const EmbeddingModel *embeddings);

ChainPotentials emission_scores(const CrfModel &model, const CompiledSentence &sent);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Sum over sentences of -log p(gold) plus (l2/2)||params||^2. The serial
// version is the reference; the OpenMP version maps sentences in parallel
// and reduces in sentence order, so both return identical bits.
LossAndGrad nll_and_grad_serial(const CrfModel &model, std::span<const CompiledSentence> batch);
LossAndGrad nll_and_grad(const CrfModel &model, std::span<const CompiledSentence> batch);

struct CrfTrainOptions {
  double lr = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int epochs = 10;
  size_t batch_size = 16;
  double l2 = 1e-4;
  uint64_t seed = 1;
  int patience = 0;  // epochs without dev improvement before stopping; 0 = off
};

struct CrfTrainLog {
  std::vector<double> train_loss;
  std::vector<double> dev_f1;
  int best_epoch = -1;
};

// Mini-batch Adam; returns the checkpoint with the best dev span F1 (the
// last epoch when `dev` is empty).
CrfModel train_crf(const Corpus &train, const Corpus &dev, const CrfTrainOptions &opts,
                   const EmbeddingModel *embeddings = nullptr, CrfTrainLog *log = nullptr);

struct Prediction {
  std::vector<std::string> tags;
  std::vector<SlotSpan> spans;
};

Prediction predict(const CrfModel &model, const Utterance &utt,
                   const EmbeddingModel *embeddings = nullptr);
Prediction predict(const CrfModel &model, const std::vector<std::string> &tokens,
                   const EmbeddingModel *embeddings = nullptr);

std::string crf_to_json(const CrfModel &model);
CrfModel crf_from_json(std::string_view text);
void save_crf(const CrfModel &model, const std::string &path);
CrfModel load_crf(const std::string &path);

}  // namespace nluforge

#endif  // NLUFORGE_CRF_H_
