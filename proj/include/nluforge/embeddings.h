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

#ifndef NLUFORGE_EMBEDDINGS_H_
#define NLUFORGE_EMBEDDINGS_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nluforge/rng.h"

namespace nluforge {

struct SubwordConfig {
  int n_min = 3;
  int n_max = 6;
  uint32_t buckets = 1u << 21;
  bool enabled = true;

  void validate() const;
};

// Token inventory sorted by descending count, then token. Negative samples
// are drawn from counts^0.75.
class Vocab {
 public:
  Vocab() = default;
  Vocab(std::vector<std::pair<std::string, uint64_t>> counted, int min_count);

  size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  int find(std::string_view word) const;
  const std::string &word(size_t i) const { return words_[i]; }
  uint64_t count(size_t i) const { return counts_[i]; }
  int min_count() const { return min_count_; }
  const std::vector<std::string> &words() const { return words_; }

  int sample_negative(Rng &rng) const;
  // Normalized counts^0.75 for word i.
  double negative_probability(size_t i) const;

 private:
  std::vector<std::string> words_;
  std::vector<uint64_t> counts_;
  std::unordered_map<std::string, int> index_;
  std::vector<double> cumulative_;
  int min_count_ = 1;
};

// Character n-grams of "<" + word + ">" for n in [n_min, n_max] (code
// points), plus the bracketed word itself when its length is outside the
// range. Order: by n, then by position.
std::vector<std::string> char_ngrams(std::string_view word, const SubwordConfig &cfg);

uint32_t fnv1a32(std::string_view bytes);
inline uint32_t hash_ngram(std::string_view ngram, uint32_t buckets) {
  return fnv1a32(ngram) % buckets;
}

// Tokenizes each line with the corpus tokenizer.
Vocab build_vocab(const std::vector<std::string> &lines, int min_count);
Vocab build_vocab(const std::vector<std::vector<std::string>> &sentences, int min_count);

struct SkipgramOptions {
  int dim = 100;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double lr = 0.05;
  int min_count = 1;
  SubwordConfig subword;
  uint64_t seed = 1;
  // 1 = deterministic; more = lock-free concurrent updates (not reproducible).
  int threads = 1;
};

struct WordVector {
  std::vector<double> values;
  bool oov = false;
};

// Skip-gram parameters. Input rows hold one row per vocabulary word followed
// by one row per hash bucket that some vocabulary n-gram falls into; buckets
// never touched by the vocabulary are implicitly zero.
class EmbeddingModel {
 public:
  int dim = 0;
  Vocab vocab;
  SubwordConfig subword;
  std::vector<double> input;   // (V + materialized buckets) x dim
  std::vector<double> output;  // V x dim
  std::unordered_map<uint32_t, int> bucket_rows;
  // Per vocabulary word: the input rows composing it, own row first.
  std::vector<std::vector<int>> word_rows;
  std::vector<double> epoch_losses;

  // Input rows for an arbitrary word; -1 marks a bucket with no row. Own
  // word row first when in vocabulary.
  std::vector<int> rows_for(std::string_view word) const;
  void compose(std::span<const int> rows, std::span<double> out) const;

  std::span<double> input_row(int r) { return {input.data() + size_t(r) * dim, size_t(dim)}; }
  std::span<const double> input_row(int r) const {
    return {input.data() + size_t(r) * dim, size_t(dim)};
  }
  std::span<double> output_row(int r) { return {output.data() + size_t(r) * dim, size_t(dim)}; }
  std::span<const double> output_row(int r) const {
    return {output.data() + size_t(r) * dim, size_t(dim)};
  }
};

// Allocates and initializes parameters for `vocab` (input ~ U(-1/dim,
// 1/dim), output zero).
EmbeddingModel init_model(Vocab vocab, int dim, const SubwordConfig &subword, uint64_t seed);

// Negative-sampling loss of one (center, context) pair:
//   -log s(u_ctx . v) - sum_neg log s(-u_neg . v)
// with v the mean of the center's input rows.
double pair_loss(const EmbeddingModel &model, int center, int context,
                 std::span<const int> negatives);

struct PairGradient {
  double loss = 0.0;
  std::map<int, std::vector<double>> input_rows;
  std::map<int, std::vector<double>> output_rows;
};
PairGradient pair_gradient(const EmbeddingModel &model, int center, int context,
                           std::span<const int> negatives);

// SGD with linearly decaying learning rate over all (center, context) pairs
// within the window. Throws DataError when the vocabulary is empty.
EmbeddingModel train_skipgram(const std::vector<std::vector<std::string>> &sentences,
                              const SkipgramOptions &opts);
EmbeddingModel train_skipgram(const std::vector<std::string> &lines,
                              const SkipgramOptions &opts);

// In-vocabulary: the training-time composition. OOV with subwords: mean over
// its n-gram buckets. OOV without subwords: zeros, flagged.
WordVector word_vector(const EmbeddingModel &model, std::string_view word);

// Text vector file ("V dim" header, then "token x1 .. xdim", %.6g) plus a
// "<path>.subword" sidecar holding word rows and bucket rows.
void save_vectors(const EmbeddingModel &model, const std::string &path);
std::string vectors_to_text(const EmbeddingModel &model);
std::string subword_to_text(const EmbeddingModel &model);
// Loads the sidecar too when present; otherwise the vectors become word rows
// with subwords disabled.
EmbeddingModel load_vectors(const std::string &path);
EmbeddingModel parse_vectors(std::string_view vec_text, std::string_view sidecar_text = {});

// Top-k vocabulary words by cosine similarity, excluding the query word.
// Ties break toward the lexicographically smaller token.
std::vector<std::pair<std::string, double>> nearest(const EmbeddingModel &model,
                                                    std::string_view word, size_t k);

double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace nluforge

#endif  // NLUFORGE_EMBEDDINGS_H_
