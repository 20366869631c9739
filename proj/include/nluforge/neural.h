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

#ifndef NLUFORGE_NEURAL_H_
#define NLUFORGE_NEURAL_H_

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nluforge/dataset.h"
#include "nluforge/embeddings.h"
#include "nluforge/rng.h"

namespace nluforge {

// Named row-major slices of one flat parameter vector. Gradients live in
// caller-owned vectors of the same size, so a model can be shared read-only
// between threads.
struct ParamSlot {
  std::string name;
  std::vector<int> shape;
  size_t offset = 0;
  size_t size = 0;
};

class ParamStore {
 public:
  size_t add(const std::string &name, std::vector<int> shape);
  bool has(const std::string &name) const;
  const ParamSlot &slot(const std::string &name) const;
  double *value(const std::string &name) { return values.data() + slot(name).offset; }
  const double *value(const std::string &name) const { return values.data() + slot(name).offset; }
  size_t size() const { return values.size(); }

  std::vector<double> values;
  std::vector<ParamSlot> slots;

 private:
  std::unordered_map<std::string, size_t> index_;
};

// ---------------------------------------------------------------------------
// Layers.
// ---------------------------------------------------------------------------

// W is 4H x (I + H): gate blocks i, f, o, g; columns are input then
// recurrent weights. b is 4H.
struct LstmCache {
  int length = 0;
  int input_dim = 0;
  int hidden = 0;
  bool reverse = false;
  std::vector<double> x;      // T x I
  std::vector<double> gates;  // T x 4H, after activation
  std::vector<double> c;      // T x H
  std::vector<double> h;      // T x H (output, in position order)
};

void lstm_forward(const double *W, const double *b, int input_dim, int hidden,
                  std::span<const double> x, bool reverse, LstmCache &cache);
// Adds parameter gradients into dW/db and writes input gradients to dx.
void lstm_backward(const double *W, const LstmCache &cache, std::span<const double> dh,
                   double *dW, double *db, std::span<double> dx);

// Valid convolution over time with kernel k and F filters, ReLU, then max
// over time. W is F x (k * dim) (window-major), b is F. Sequences shorter
// than k are left-padded with zero vectors.
struct ConvCache {
  int positions = 0;           // padded length
  int dim = 0;
  int kernel = 0;
  int filters = 0;
  int pad = 0;                 // zero vectors added on the left
  std::vector<double> x;       // padded input, positions x dim
  std::vector<double> pre;     // windows x F, before ReLU
  std::vector<int> argmax;     // per filter, window of the max
  std::vector<double> out;     // F
};

void conv1d_maxpool(const double *W, const double *b, int dim, int kernel, int filters,
                    std::span<const double> x, ConvCache &cache);
// dx covers the unpadded input.
void conv1d_maxpool_backward(const double *W, const ConvCache &cache,
                             std::span<const double> dout, double *dW, double *db,
                             std::span<double> dx);

// Softmax over `logits` in place; returns log-sum-exp.
double softmax_inplace(std::span<double> logits);

// ---------------------------------------------------------------------------
// Token vocabulary shared by both models. Id 0 is <unk>.
// ---------------------------------------------------------------------------

class TokenVocab {
 public:
  TokenVocab();
  explicit TokenVocab(const std::vector<std::string> &words);
  int add(const std::string &word);
  int id(const std::string &word) const;
  size_t size() const { return words_.size(); }
  const std::vector<std::string> &words() const { return words_; }
  std::vector<int> encode(const std::vector<std::string> &tokens) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Training tokens, plus the pretrained vocabulary when given.
TokenVocab build_token_vocab(const Corpus &corpus, const EmbeddingModel *pretrained);

struct TrainCurve {
  std::vector<double> train_loss;
  std::vector<double> dev_score;
  int best_epoch = -1;
};

// ---------------------------------------------------------------------------
// biLSTM tagger.
// ---------------------------------------------------------------------------

enum class OutputLayer { kSoftmax, kCrf };

struct TaggerConfig {
  int embed_dim = 100;
  int hidden = 64;
  int layers = 1;  // 1 or 2
  double dropout = 0.2;
  OutputLayer output = OutputLayer::kSoftmax;
  bool freeze_embeddings = false;
  int epochs = 10;
  size_t batch_size = 16;
  double lr = 1e-3;
  uint64_t seed = 1;

  void validate() const;
};

class BiLstmTagger {
 public:
  TaggerConfig config;
  std::vector<std::string> labels;
  TokenVocab vocab;
  ParamStore params;
  std::string schema_checksum;

  int num_labels() const { return static_cast<int>(labels.size()); }
};

// Random initialization from config.seed; embedding rows copied from
// `pretrained` where available (its dimension overrides embed_dim).
BiLstmTagger make_tagger(std::vector<std::string> labels, TokenVocab vocab, TaggerConfig config,
                         const EmbeddingModel *pretrained = nullptr);

// Emission scores (T x L). Dropout is applied only when `dropout_rng` is set.
std::vector<double> tagger_emissions(const BiLstmTagger &model, const std::vector<int> &ids,
                                     Rng *dropout_rng = nullptr);

// Softmax mode: mean token cross-entropy. CRF mode: sentence NLL. Adds the
// gradient into `grad` (size params.size()) when non-null.
double tagger_loss(const BiLstmTagger &model, const std::vector<int> &ids,
                   const std::vector<int> &gold, std::vector<double> *grad,
                   Rng *dropout_rng = nullptr);

// Per-token label distributions: softmax outputs, or CRF node marginals.
std::vector<double> tag_distributions(const BiLstmTagger &model,
                                      const std::vector<std::string> &tokens);
std::vector<std::string> tag(const BiLstmTagger &model, const std::vector<std::string> &tokens);

BiLstmTagger train_tagger(const Corpus &train, const Corpus &dev, const TaggerConfig &config,
                          const EmbeddingModel *pretrained = nullptr,
                          TrainCurve *curve = nullptr);

// ---------------------------------------------------------------------------
// Convolutional intent classifier.
// ---------------------------------------------------------------------------

struct IntentConfig {
  int embed_dim = 100;
  int kernel = 3;
  int filters = 100;
  double dropout = 0.5;
  // One conv encoder per axis instead of a shared one.
  bool separate_encoders = false;
  bool freeze_embeddings = false;
  int epochs = 10;
  size_t batch_size = 16;
  double lr = 1e-3;
  uint64_t seed = 1;

  void validate() const;
};

class CnnIntentClassifier {
 public:
  IntentConfig config;
  std::vector<IntentAxis> axes;
  TokenVocab vocab;
  ParamStore params;
  std::string schema_checksum;
};

CnnIntentClassifier make_intent_classifier(std::vector<IntentAxis> axes, TokenVocab vocab,
                                           IntentConfig config,
                                           const EmbeddingModel *pretrained = nullptr);

// Sum over axes of the cross-entropy; gold holds one category index per axis.
double intent_loss(const CnnIntentClassifier &model, const std::vector<int> &ids,
                   const std::vector<int> &gold, std::vector<double> *grad,
                   Rng *dropout_rng = nullptr);

// One probability vector per axis.
std::vector<std::vector<double>> intent_probabilities(const CnnIntentClassifier &model,
                                                      const std::vector<std::string> &tokens);
std::map<std::string, std::string> classify(const CnnIntentClassifier &model,
                                            const std::vector<std::string> &tokens);

// Throws DataError when an utterance lacks one of the schema axes.
CnnIntentClassifier train_intents(const Corpus &train, const Corpus &dev,
                                  const IntentConfig &config,
                                  const EmbeddingModel *pretrained = nullptr,
                                  TrainCurve *curve = nullptr);

// ---------------------------------------------------------------------------
// Hyperparameter search.
// ---------------------------------------------------------------------------

struct GridPoint {
  int embed_dim = 100;
  int hidden = 64;
  double dropout = 0.2;
  int kernel = 3;
  int filters = 100;

  bool operator==(const GridPoint &) const = default;
};

// Embedding dims {50, 100, 300}; hidden {64, 128, 256}; dropout 0.1..0.5 in
// steps of 0.1; kernel 2..5; filters 50..250 in steps of 50.
GridPoint sample_grid_point(Rng &rng);
std::vector<GridPoint> sample_grid(uint64_t seed, int n);
bool in_grid(const GridPoint &point);

struct SearchResult {
  GridPoint point;
  uint64_t seed = 0;
  double dev_score = 0.0;
};

// Trains and scores each point (seed derived per point). Points run in
// parallel on up to `threads` threads; results keep point order.
std::vector<SearchResult> random_search(
    const std::vector<GridPoint> &points, uint64_t seed, int threads,
    const std::function<double(const GridPoint &, uint64_t seed)> &train_and_score);

// ---------------------------------------------------------------------------
// Serialization: JSON manifest at `path`, little-endian f64 parameters at
// `path + ".bin"` in manifest slot order.
// ---------------------------------------------------------------------------

void save_tagger(const BiLstmTagger &model, const std::string &path);
BiLstmTagger load_tagger(const std::string &path);
void save_intents(const CnnIntentClassifier &model, const std::string &path);
CnnIntentClassifier load_intents(const std::string &path);

// Model kind recorded in a manifest ("bilstm", "cnn-intent") or a CRF file
// ("crf"); DataError for anything else.
std::string model_kind(const std::string &path);

}  // namespace nluforge

#endif  // NLUFORGE_NEURAL_H_
