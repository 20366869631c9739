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

#include "nluforge/embeddings.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "nluforge/dataset.h"
#include "nluforge/error.h"
#include "nluforge/io.h"

namespace nluforge {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x))
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double dot(const double *a, const double *b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Loss of one (v, context, negatives) example. grad_v receives dL/dv and
// coeffs[t] the scalar such that dL/du_t = coeffs[t] * v, for targets
// [context, negatives...].
double pair_kernel(const double *v, const std::vector<double> &output, int dim, int context,
                   std::span<const int> negatives, double *grad_v, double *coeffs) {
  std::fill(grad_v, grad_v + dim, 0.0);
  double loss = 0.0;
  const size_t n_targets = 1 + negatives.size();
  for (size_t t = 0; t < n_targets; ++t) {
    const int target = t == 0 ? context : negatives[t - 1];
    const double *u = output.data() + size_t(target) * dim;
    const double score = dot(u, v, dim);
    double g;
    if (t == 0) {
      loss += softplus(-score);
      g = sigmoid(score) - 1.0;
    } else {
      loss += softplus(score);
      g = sigmoid(score);
    }
    coeffs[t] = g;
    for (int d = 0; d < dim; ++d) grad_v[d] += g * u[d];
  }
  return loss;
}

std::string format_row(const std::string &label, std::span<const double> values,
                       const char *fmt) {
  std::string line = label;
  char buf[40];
  for (double x : values) {
    std::snprintf(buf, sizeof(buf), fmt, x);
    line += ' ';
    line += buf;
  }
  line += '\n';
  return line;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    pos = eol + 1;
  }
  return lines;
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
    if (end > pos) out.emplace_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

double parse_double(const std::string &s, size_t line_no) {
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw DataError("vector file line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

long parse_long(const std::string &s, const char *what) {
  char *end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || v < 0) {
    throw DataError(std::string("vector file: bad ") + what + " '" + s + "'");
  }
  return v;
}

void materialize_rows(EmbeddingModel &model) {
  const size_t V = model.vocab.size();
  model.word_rows.assign(V, {});
  for (size_t i = 0; i < V; ++i) {
    auto &rows = model.word_rows[i];
    rows.push_back(static_cast<int>(i));
    if (!model.subword.enabled) continue;
    for (const auto &g : char_ngrams(model.vocab.word(i), model.subword)) {
      const uint32_t b = hash_ngram(g, model.subword.buckets);
      auto [it, inserted] = model.bucket_rows.try_emplace(
          b, static_cast<int>(V + model.bucket_rows.size()));
      rows.push_back(it->second);
    }
  }
}

}  // namespace

void SubwordConfig::validate() const {
  if (n_min < 1 || n_min > n_max) throw UsageError("subword: need 1 <= n_min <= n_max");
  if (buckets == 0) throw UsageError("subword: bucket count must be positive");
}

Vocab::Vocab(std::vector<std::pair<std::string, uint64_t>> counted, int min_count)
    : min_count_(min_count) {
  double total = 0.0;
  for (auto &[word, count] : counted) {
    if (count < static_cast<uint64_t>(std::max(min_count, 0))) continue;
    index_.emplace(word, static_cast<int>(words_.size()));
    words_.push_back(std::move(word));
    counts_.push_back(count);
    total += std::pow(static_cast<double>(count), 0.75);
    cumulative_.push_back(total);
  }
}

int Vocab::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? -1 : it->second;
}

int Vocab::sample_negative(Rng &rng) const {
  const double r = rng.uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
  return static_cast<int>(std::min<size_t>(it - cumulative_.begin(), words_.size() - 1));
}

double Vocab::negative_probability(size_t i) const {
  const double prev = i == 0 ? 0.0 : cumulative_[i - 1];
  return (cumulative_[i] - prev) / cumulative_.back();
}

std::vector<std::string> char_ngrams(std::string_view word, const SubwordConfig &cfg) {
  const auto chars = utf8_chars("<" + std::string(word) + ">");
  const int len = static_cast<int>(chars.size());
  std::vector<std::string> out;
  for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
    for (int i = 0; i + n <= len; ++i) {
      std::string g;
      for (int k = i; k < i + n; ++k) g += chars[k];
      out.push_back(std::move(g));
    }
  }
  if (len < cfg.n_min || len > cfg.n_max) {
    std::string whole;
    for (const auto &c : chars) whole += c;
    out.push_back(std::move(whole));
  }
  return out;
}

uint32_t fnv1a32(std::string_view bytes) {
  uint32_t h = 2166136261u;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

Vocab build_vocab(const std::vector<std::vector<std::string>> &sentences, int min_count) {
  std::unordered_map<std::string, uint64_t> counts;
  for (const auto &s : sentences) {
    for (const auto &tok : s) ++counts[tok];
  }
  std::vector<std::pair<std::string, uint64_t>> counted(counts.begin(), counts.end());
  std::sort(counted.begin(), counted.end(), [](const auto &a, const auto &b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return Vocab(std::move(counted), min_count);
}

Vocab build_vocab(const std::vector<std::string> &lines, int min_count) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(lines.size());
  for (const auto &line : lines) sentences.push_back(tokenize(line));
  return build_vocab(sentences, min_count);
}

std::vector<int> EmbeddingModel::rows_for(std::string_view word) const {
  const int idx = vocab.find(word);
  if (idx >= 0 && static_cast<size_t>(idx) < word_rows.size()) return word_rows[idx];
  std::vector<int> rows;
  if (idx >= 0) rows.push_back(idx);
  if (!subword.enabled) return rows;
  for (const auto &g : char_ngrams(word, subword)) {
    auto it = bucket_rows.find(hash_ngram(g, subword.buckets));
    rows.push_back(it == bucket_rows.end() ? -1 : it->second);
  }
  return rows;
}

void EmbeddingModel::compose(std::span<const int> rows, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (rows.empty()) return;
  for (int r : rows) {
    if (r < 0) continue;
    const double *src = input.data() + size_t(r) * dim;
    for (int d = 0; d < dim; ++d) out[d] += src[d];
  }
  const double scale = 1.0 / static_cast<double>(rows.size());
  for (auto &x : out) x *= scale;
}

EmbeddingModel init_model(Vocab vocab, int dim, const SubwordConfig &subword, uint64_t seed) {
  if (dim <= 0) throw UsageError("embedding dimension must be positive");
  if (subword.enabled) subword.validate();
  EmbeddingModel model;
  model.dim = dim;
  model.vocab = std::move(vocab);
  model.subword = subword;
  materialize_rows(model);
  const size_t rows = model.vocab.size() + model.bucket_rows.size();
  model.input.resize(rows * dim);
  Rng rng(seed);
  const double bound = 1.0 / dim;
  for (auto &x : model.input) x = rng.uniform(-bound, bound);
  model.output.assign(model.vocab.size() * dim, 0.0);
  return model;
}

double pair_loss(const EmbeddingModel &model, int center, int context,
                 std::span<const int> negatives) {
  const auto &rows = model.word_rows.at(center);
  std::vector<double> v(model.dim), grad(model.dim), coeffs(1 + negatives.size());
  model.compose(rows, v);
  return pair_kernel(v.data(), model.output, model.dim, context, negatives, grad.data(),
                     coeffs.data());
}

PairGradient pair_gradient(const EmbeddingModel &model, int center, int context,
                           std::span<const int> negatives) {
  const int dim = model.dim;
  const auto &rows = model.word_rows.at(center);
  std::vector<double> v(dim), grad_v(dim), coeffs(1 + negatives.size());
  model.compose(rows, v);
  PairGradient out;
  out.loss = pair_kernel(v.data(), model.output, dim, context, negatives, grad_v.data(),
                         coeffs.data());
  const double share = 1.0 / static_cast<double>(rows.size());
  for (int r : rows) {
    auto &g = out.input_rows[r];
    g.resize(dim, 0.0);
    for (int d = 0; d < dim; ++d) g[d] += grad_v[d] * share;
  }
  for (size_t t = 0; t < coeffs.size(); ++t) {
    const int target = t == 0 ? context : negatives[t - 1];
    auto &g = out.output_rows[target];
    g.resize(dim, 0.0);
    for (int d = 0; d < dim; ++d) g[d] += coeffs[t] * v[d];
  }
  return out;
}

EmbeddingModel train_skipgram(const std::vector<std::vector<std::string>> &sentences,
                              const SkipgramOptions &opts) {
  if (opts.window < 1 || opts.negatives < 0 || opts.epochs < 0 || !(opts.lr > 0.0)) {
    throw UsageError("skip-gram: invalid window, negatives, epochs or learning rate");
  }
  Vocab vocab = build_vocab(sentences, opts.min_count);
  if (vocab.empty()) throw DataError("skip-gram: vocabulary is empty after min_count filtering");
  EmbeddingModel model = init_model(std::move(vocab), opts.dim, opts.subword, opts.seed);
  const int dim = model.dim;

  std::vector<std::vector<int>> ids;
  ids.reserve(sentences.size());
  std::vector<size_t> offset;
  size_t total_tokens = 0;
  for (const auto &s : sentences) {
    std::vector<int> row;
    for (const auto &tok : s) {
      const int id = model.vocab.find(tok);
      if (id >= 0) row.push_back(id);
    }
    offset.push_back(total_tokens);
    total_tokens += row.size();
    ids.push_back(std::move(row));
  }
  const double budget = static_cast<double>(total_tokens) * std::max(opts.epochs, 1);

  // One sentence of SGD. v, grad_v and coeffs are caller-owned scratch.
  auto train_sentence = [&](size_t s, int epoch, Rng &rng, std::vector<double> &v,
                            std::vector<double> &grad_v, std::vector<double> &coeffs,
                            std::vector<int> &negs, double &loss, size_t &pairs) {
    const auto &sent = ids[s];
    const int n = static_cast<int>(sent.size());
    for (int i = 0; i < n; ++i) {
      const double progress =
          (static_cast<double>(epoch) * total_tokens + offset[s] + i) / budget;
      const double lr = opts.lr * std::max(1.0 - progress, 1e-4);
      const auto &rows = model.word_rows[sent[i]];
      const double share = 1.0 / static_cast<double>(rows.size());
      for (int j = std::max(0, i - opts.window); j <= std::min(n - 1, i + opts.window); ++j) {
        if (j == i) continue;
        const int context = sent[j];
        negs.clear();
        for (int k = 0; k < opts.negatives; ++k) {
          const int neg = model.vocab.sample_negative(rng);
          if (neg != context) negs.push_back(neg);
        }
        model.compose(rows, v);
        loss += pair_kernel(v.data(), model.output, dim, context, negs, grad_v.data(),
                            coeffs.data());
        ++pairs;
        for (size_t t = 0; t <= negs.size(); ++t) {
          const int target = t == 0 ? context : negs[t - 1];
          double *u = model.output.data() + size_t(target) * dim;
          const double step = lr * coeffs[t];
          for (int d = 0; d < dim; ++d) u[d] -= step * v[d];
        }
        const double step = lr * share;
        for (int r : rows) {
          double *w = model.input.data() + size_t(r) * dim;
          for (int d = 0; d < dim; ++d) w[d] -= step * grad_v[d];
        }
      }
    }
  };

  Rng seeder(opts.seed ^ 0x5bd1e995ULL);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    double loss = 0.0;
    size_t pairs = 0;
    const uint64_t epoch_seed = seeder.fork();
    if (opts.threads <= 1) {
      Rng rng(epoch_seed);
      std::vector<double> v(dim), grad_v(dim), coeffs(1 + opts.negatives);
      std::vector<int> negs;
      for (size_t s = 0; s < ids.size(); ++s) {
        train_sentence(s, epoch, rng, v, grad_v, coeffs, negs, loss, pairs);
      }
    } else {
#pragma omp parallel num_threads(opts.threads) reduction(+ : loss, pairs)
      {
        Rng rng(epoch_seed + static_cast<uint64_t>(omp_get_thread_num()) * 0x9e3779b97f4a7c15ULL);
        std::vector<double> v(dim), grad_v(dim), coeffs(1 + opts.negatives);
        std::vector<int> negs;
#pragma omp for schedule(static)
        for (size_t s = 0; s < ids.size(); ++s) {
          train_sentence(s, epoch, rng, v, grad_v, coeffs, negs, loss, pairs);
        }
      }
    }
    model.epoch_losses.push_back(pairs > 0 ? loss / static_cast<double>(pairs) : 0.0);
  }
  return model;
}

EmbeddingModel train_skipgram(const std::vector<std::string> &lines,
                              const SkipgramOptions &opts) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(lines.size());
  for (const auto &line : lines) sentences.push_back(tokenize(line));
  return train_skipgram(sentences, opts);
}

WordVector word_vector(const EmbeddingModel &model, std::string_view word) {
  WordVector out;
  out.values.assign(model.dim, 0.0);
  const auto rows = model.rows_for(word);
  out.oov = model.vocab.find(word) < 0;
  if (!rows.empty()) model.compose(rows, out.values);
  return out;
}

std::string vectors_to_text(const EmbeddingModel &model) {
  std::string out = std::to_string(model.vocab.size()) + " " + std::to_string(model.dim) + "\n";
  std::vector<double> v(model.dim);
  for (size_t i = 0; i < model.vocab.size(); ++i) {
    model.compose(model.word_rows[i], v);
    out += format_row(model.vocab.word(i), v, "%.6g");
  }
  return out;
}

std::string subword_to_text(const EmbeddingModel &model) {
  std::ostringstream header;
  header << "subword " << model.subword.n_min << ' ' << model.subword.n_max << ' '
         << model.subword.buckets << ' ' << (model.subword.enabled ? 1 : 0) << ' '
         << model.dim << ' ' << model.vocab.size() << ' ' << model.bucket_rows.size() << "\n";
  std::string out = header.str();
  for (size_t i = 0; i < model.vocab.size(); ++i) {
    out += format_row(model.vocab.word(i) + " " + std::to_string(model.vocab.count(i)),
                      model.input_row(static_cast<int>(i)), "%.9g");
  }
  std::vector<uint32_t> bucket_of(model.bucket_rows.size());
  for (const auto &[bucket, row] : model.bucket_rows) {
    bucket_of[row - model.vocab.size()] = bucket;
  }
  for (size_t b = 0; b < bucket_of.size(); ++b) {
    out += format_row(std::to_string(bucket_of[b]),
                      model.input_row(static_cast<int>(model.vocab.size() + b)), "%.9g");
  }
  return out;
}

void save_vectors(const EmbeddingModel &model, const std::string &path) {
  write_file_atomic(path, vectors_to_text(model));
  write_file_atomic(path + ".subword", subword_to_text(model));
}

EmbeddingModel parse_vectors(std::string_view vec_text, std::string_view sidecar_text) {
  const auto lines = split_lines(vec_text);
  if (lines.empty()) throw DataError("vector file: missing header");
  const auto header = split_fields(lines[0]);
  if (header.size() != 2) throw DataError("vector file: header must be 'V dim'");
  const size_t V = static_cast<size_t>(parse_long(header[0], "vocabulary size"));
  const int dim = static_cast<int>(parse_long(header[1], "dimension"));
  if (dim <= 0) throw DataError("vector file: dimension must be positive");
  if (lines.size() - 1 != V) {
    throw DataError("vector file: header declares " + std::to_string(V) + " rows, body has " +
                    std::to_string(lines.size() - 1));
  }
  std::vector<std::string> words;
  std::vector<double> composed(V * dim);
  for (size_t i = 0; i < V; ++i) {
    const auto fields = split_fields(lines[i + 1]);
    if (fields.size() != static_cast<size_t>(dim) + 1) {
      throw DataError("vector file line " + std::to_string(i + 2) + ": expected " +
                      std::to_string(dim + 1) + " fields, got " +
                      std::to_string(fields.size()));
    }
    words.push_back(fields[0]);
    for (int d = 0; d < dim; ++d) composed[i * dim + d] = parse_double(fields[d + 1], i + 2);
  }

  EmbeddingModel model;
  model.dim = dim;
  if (sidecar_text.empty()) {
    std::vector<std::pair<std::string, uint64_t>> counted;
    for (auto &w : words) counted.emplace_back(std::move(w), 1);
    model.vocab = Vocab(std::move(counted), 0);
    model.subword.enabled = false;
    materialize_rows(model);
    model.input = std::move(composed);
    model.output.assign(V * dim, 0.0);
    return model;
  }

  const auto side = split_lines(sidecar_text);
  if (side.empty()) throw DataError("subword sidecar: empty");
  const auto h = split_fields(side[0]);
  if (h.size() != 8 || h[0] != "subword") throw DataError("subword sidecar: bad header");
  model.subword.n_min = static_cast<int>(parse_long(h[1], "n_min"));
  model.subword.n_max = static_cast<int>(parse_long(h[2], "n_max"));
  model.subword.buckets = static_cast<uint32_t>(parse_long(h[3], "bucket count"));
  model.subword.enabled = parse_long(h[4], "enabled flag") != 0;
  const size_t side_dim = static_cast<size_t>(parse_long(h[5], "dimension"));
  const size_t side_v = static_cast<size_t>(parse_long(h[6], "vocabulary size"));
  const size_t side_b = static_cast<size_t>(parse_long(h[7], "bucket rows"));
  if (side_dim != static_cast<size_t>(dim) || side_v != V) {
    throw DataError("subword sidecar does not match the vector file");
  }
  if (side.size() != 1 + side_v + side_b) {
    throw DataError("subword sidecar: header declares " + std::to_string(side_v + side_b) +
                    " rows, body has " + std::to_string(side.size() - 1));
  }
  std::vector<std::pair<std::string, uint64_t>> counted;
  model.input.assign((V + side_b) * dim, 0.0);
  for (size_t i = 0; i < V; ++i) {
    const auto fields = split_fields(side[1 + i]);
    if (fields.size() != static_cast<size_t>(dim) + 2) {
      throw DataError("subword sidecar line " + std::to_string(i + 2) + ": wrong field count");
    }
    counted.emplace_back(fields[0], static_cast<uint64_t>(parse_long(fields[1], "count")));
    for (int d = 0; d < dim; ++d) model.input[i * dim + d] = parse_double(fields[d + 2], i + 2);
  }
  std::unordered_map<uint32_t, int> declared;
  for (size_t b = 0; b < side_b; ++b) {
    const auto fields = split_fields(side[1 + V + b]);
    if (fields.size() != static_cast<size_t>(dim) + 1) {
      throw DataError("subword sidecar line " + std::to_string(V + b + 2) +
                      ": wrong field count");
    }
    declared[static_cast<uint32_t>(parse_long(fields[0], "bucket"))] = static_cast<int>(V + b);
    for (int d = 0; d < dim; ++d) {
      model.input[(V + b) * dim + d] = parse_double(fields[d + 1], V + b + 2);
    }
  }
  model.vocab = Vocab(std::move(counted), 0);
  model.bucket_rows = std::move(declared);
  // Recompute per-word rows; every vocabulary n-gram bucket must be present.
  const size_t before = model.bucket_rows.size();
  materialize_rows(model);
  if (model.bucket_rows.size() != before) {
    throw DataError("subword sidecar is missing bucket rows for vocabulary n-grams");
  }
  model.output.assign(V * dim, 0.0);
  return model;
}

EmbeddingModel load_vectors(const std::string &path) {
  const std::string sidecar = path + ".subword";
  try {
    return parse_vectors(read_file(path), file_exists(sidecar) ? read_file(sidecar) : "");
  } catch (const Error &e) {
    if (e.kind() != ErrorKind::kData) throw;
    throw DataError(path + ": " + e.what());
  }
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

std::vector<std::pair<std::string, double>> nearest(const EmbeddingModel &model,
                                                    std::string_view word, size_t k) {
  std::vector<std::pair<std::string, double>> scored;
  if (k == 0) return scored;
  const WordVector query = word_vector(model, word);
  std::vector<double> v(model.dim);
  for (size_t i = 0; i < model.vocab.size(); ++i) {
    if (model.vocab.word(i) == word) continue;
    model.compose(model.word_rows[i], v);
    scored.emplace_back(model.vocab.word(i), cosine(query.values, v));
  }
  std::sort(scored.begin(), scored.end(), [](const auto &a, const auto &b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

}  // namespace nluforge
