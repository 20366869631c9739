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

#include <algorithm>
#include <cmath>

#include "nluforge/error.h"
#include "nluforge/eval.h"
#include "nluforge/neural.h"
#include "train_loop.h"

namespace nluforge {

void IntentConfig::validate() const {
  if (embed_dim < 1) throw UsageError("intent embedding size must be positive");
  if (kernel < 1 || filters < 1) throw UsageError("conv kernel and filter counts must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("dropout must be in [0, 1)");
  if (batch_size == 0) throw UsageError("batch size must be >= 1");
  if (epochs < 0) throw UsageError("epochs must be >= 0");
}

namespace {

std::string conv_name(const CnnIntentClassifier &m, size_t axis, const char *what) {
  if (!m.config.separate_encoders) return std::string("conv.") + what;
  return "conv." + m.axes[axis].name + "." + what;
}

std::string head_name(const CnnIntentClassifier &m, size_t axis, const char *what) {
  return "head." + m.axes[axis].name + "." + what;
}

size_t encoder_of(const CnnIntentClassifier &m, size_t axis) {
  return m.config.separate_encoders ? axis : 0;
}

size_t num_encoders(const CnnIntentClassifier &m) {
  return m.config.separate_encoders ? m.axes.size() : 1;
}

struct IntentTrace {
  std::vector<double> x;                    // T x E
  std::vector<ConvCache> conv;              // per encoder
  std::vector<std::vector<double>> masks;   // per encoder, on pooled features
  std::vector<std::vector<double>> pooled;  // per encoder, after dropout
  std::vector<std::vector<double>> logits;  // per axis
};

void run_forward(const CnnIntentClassifier &m, const std::vector<int> &ids, Rng *rng,
                 IntentTrace &tr) {
  const auto &cfg = m.config;
  const int E = cfg.embed_dim, F = cfg.filters;
  const double *embed = m.params.value("embed");
  tr.x.assign(ids.size() * E, 0.0);
  for (size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || size_t(ids[t]) >= m.vocab.size()) throw UsageError("token id out of range");
    std::copy(embed + size_t(ids[t]) * E, embed + size_t(ids[t] + 1) * E, tr.x.begin() + t * E);
  }
  const size_t n_enc = num_encoders(m);
  tr.conv.assign(n_enc, {});
  tr.masks.assign(n_enc, std::vector<double>(F, 1.0));
  tr.pooled.assign(n_enc, {});
  for (size_t e = 0; e < n_enc; ++e) {
    conv1d_maxpool(m.params.value(conv_name(m, e, "W")), m.params.value(conv_name(m, e, "b")), E,
                   cfg.kernel, F, tr.x, tr.conv[e]);
    tr.pooled[e] = tr.conv[e].out;
    if (rng != nullptr && cfg.dropout > 0.0) {
      for (double &v : tr.masks[e]) v = rng->bernoulli(cfg.dropout) ? 0.0 : 1.0 / (1.0 - cfg.dropout);
    }
    for (int f = 0; f < F; ++f) tr.pooled[e][f] *= tr.masks[e][f];
  }
  tr.logits.assign(m.axes.size(), {});
  for (size_t a = 0; a < m.axes.size(); ++a) {
    const int C = static_cast<int>(m.axes[a].categories.size());
    const double *W = m.params.value(head_name(m, a, "W"));
    const double *b = m.params.value(head_name(m, a, "b"));
    const auto &z = tr.pooled[encoder_of(m, a)];
    auto &out = tr.logits[a];
    out.assign(C, 0.0);
    for (int c = 0; c < C; ++c) {
      double acc = b[c];
      for (int f = 0; f < F; ++f) acc += W[size_t(c) * F + f] * z[f];
      out[c] = acc;
    }
  }
}

}  // namespace

CnnIntentClassifier make_intent_classifier(std::vector<IntentAxis> axes, TokenVocab vocab,
                                           IntentConfig config,
                                           const EmbeddingModel *pretrained) {
  if (pretrained != nullptr && pretrained->dim != config.embed_dim) {
    warn("intent embedding size set to " + std::to_string(pretrained->dim) +
         " to match the pretrained vectors");
    config.embed_dim = pretrained->dim;
  }
  config.validate();
  if (axes.empty()) throw UsageError("intent classifier needs at least one axis");
  CnnIntentClassifier m;
  m.config = config;
  m.axes = std::move(axes);
  m.vocab = std::move(vocab);
  const int E = config.embed_dim, F = config.filters, K = config.kernel;
  auto &P = m.params;
  P.add("embed", {int(m.vocab.size()), E});
  for (size_t e = 0; e < num_encoders(m); ++e) {
    P.add(conv_name(m, e, "W"), {F, K * E});
    P.add(conv_name(m, e, "b"), {F});
  }
  for (size_t a = 0; a < m.axes.size(); ++a) {
    const int C = static_cast<int>(m.axes[a].categories.size());
    if (C < 1) throw DataError("intent axis '" + m.axes[a].name + "' has no categories");
    P.add(head_name(m, a, "W"), {C, F});
    P.add(head_name(m, a, "b"), {C});
  }

  Rng rng(config.seed);
  double *embed = P.value("embed");
  for (size_t i = 0; i < m.vocab.size() * E; ++i) embed[i] = rng.uniform(-0.1, 0.1);
  if (pretrained != nullptr) {
    for (size_t i = 1; i < m.vocab.size(); ++i) {
      const WordVector v = word_vector(*pretrained, m.vocab.words()[i]);
      if (v.oov && !pretrained->subword.enabled) continue;
      std::copy(v.values.begin(), v.values.end(), embed + i * E);
    }
  }
  for (const auto &slot : P.slots) {
    if (slot.name == "embed" || slot.shape.size() != 2) continue;
    const double a = 1.0 / std::sqrt(double(slot.shape[1]));
    for (size_t i = 0; i < slot.size; ++i) P.values[slot.offset + i] = rng.uniform(-a, a);
  }
  return m;
}

double intent_loss(const CnnIntentClassifier &m, const std::vector<int> &ids,
                   const std::vector<int> &gold, std::vector<double> *grad, Rng *dropout_rng) {
  if (gold.size() != m.axes.size()) throw DataError("intent loss: one gold label per axis needed");
  for (size_t a = 0; a < gold.size(); ++a) {
    if (gold[a] < 0 || size_t(gold[a]) >= m.axes[a].categories.size()) {
      throw DataError("intent loss: gold label out of range for axis '" + m.axes[a].name + "'");
    }
  }
  IntentTrace tr;
  run_forward(m, ids, dropout_rng, tr);
  const int E = m.config.embed_dim, F = m.config.filters;
  double loss = 0.0;
  std::vector<std::vector<double>> dz(num_encoders(m), std::vector<double>(F, 0.0));
  for (size_t a = 0; a < m.axes.size(); ++a) {
    std::vector<double> p = tr.logits[a];
    loss += softmax_inplace(p) - tr.logits[a][gold[a]];
    if (grad == nullptr) continue;
    p[gold[a]] -= 1.0;
    const double *W = m.params.value(head_name(m, a, "W"));
    double *dW = grad->data() + m.params.slot(head_name(m, a, "W")).offset;
    double *db = grad->data() + m.params.slot(head_name(m, a, "b")).offset;
    const auto &z = tr.pooled[encoder_of(m, a)];
    auto &dze = dz[encoder_of(m, a)];
    for (size_t c = 0; c < p.size(); ++c) {
      db[c] += p[c];
      for (int f = 0; f < F; ++f) {
        dW[c * F + f] += p[c] * z[f];
        dze[f] += p[c] * W[c * F + f];
      }
    }
  }
  if (grad == nullptr) return loss;
  if (grad->size() != m.params.size()) throw UsageError("gradient buffer has the wrong size");
  std::vector<double> dx(tr.x.size(), 0.0), dxe(tr.x.size());
  for (size_t e = 0; e < dz.size(); ++e) {
    for (int f = 0; f < F; ++f) dz[e][f] *= tr.masks[e][f];
    conv1d_maxpool_backward(m.params.value(conv_name(m, e, "W")), tr.conv[e], dz[e],
                            grad->data() + m.params.slot(conv_name(m, e, "W")).offset,
                            grad->data() + m.params.slot(conv_name(m, e, "b")).offset, dxe);
    for (size_t i = 0; i < dx.size(); ++i) dx[i] += dxe[i];
  }
  double *de = grad->data() + m.params.slot("embed").offset;
  for (size_t t = 0; t < ids.size(); ++t) {
    for (int k = 0; k < E; ++k) de[size_t(ids[t]) * E + k] += dx[t * E + k];
  }
  return loss;
}

std::vector<std::vector<double>> intent_probabilities(const CnnIntentClassifier &m,
                                                      const std::vector<std::string> &tokens) {
  IntentTrace tr;
  run_forward(m, m.vocab.encode(tokens), nullptr, tr);
  for (auto &l : tr.logits) softmax_inplace(l);
  return tr.logits;
}

std::map<std::string, std::string> classify(const CnnIntentClassifier &m,
                                            const std::vector<std::string> &tokens) {
  const auto probs = intent_probabilities(m, tokens);
  std::map<std::string, std::string> out;
  for (size_t a = 0; a < m.axes.size(); ++a) {
    const auto best = std::max_element(probs[a].begin(), probs[a].end()) - probs[a].begin();
    out[m.axes[a].name] = m.axes[a].categories[best];
  }
  return out;
}

CnnIntentClassifier train_intents(const Corpus &train, const Corpus &dev,
                                  const IntentConfig &config, const EmbeddingModel *pretrained,
                                  TrainCurve *curve) {
  if (train.utterances.empty()) throw DataError("intent training set is empty");
  CnnIntentClassifier m = make_intent_classifier(
      train.schema.intent_axes, build_token_vocab(train, pretrained), config, pretrained);
  m.schema_checksum = train.schema.checksum();
  auto check_axes = [&](const Utterance &u) {
    std::vector<int> gold;
    for (const auto &axis : m.axes) {
      auto it = u.intents.find(axis.name);
      if (it == u.intents.end()) {
        throw DataError("utterance '" + u.id + "' has no label for intent axis '" + axis.name + "'");
      }
      const int c = axis.index_of(it->second);
      if (c < 0) {
        throw DataError("utterance '" + u.id + "': unknown " + axis.name + " category '" +
                        it->second + "'");
      }
      gold.push_back(c);
    }
    return gold;
  };
  std::vector<internal::Example> examples;
  for (const auto &u : train.utterances) {
    examples.push_back({m.vocab.encode(u.tokens), check_axes(u)});
  }
  for (const auto &u : dev.utterances) check_axes(u);

  internal::LoopOptions opts;
  opts.epochs = m.config.epochs;
  opts.batch_size = m.config.batch_size;
  opts.lr = m.config.lr;
  opts.seed = m.config.seed;
  if (m.config.freeze_embeddings) opts.frozen = &m.params.slot("embed");
  std::function<double()> score;
  if (!dev.utterances.empty()) {
    score = [&] {
      std::vector<std::map<std::string, std::string>> gold, pred;
      for (const auto &u : dev.utterances) {
        gold.push_back(u.intents);
        pred.push_back(classify(m, u.tokens));
      }
      return intent_scores(gold, pred, dev.schema).macro_f1;
    };
  }
  const TrainCurve c = internal::run_training(
      m.params, examples, opts,
      [&](const internal::Example &ex, std::vector<double> *grad, Rng *rng) {
        return intent_loss(m, ex.ids, ex.gold, grad, rng);
      },
      score);
  if (curve != nullptr) *curve = c;
  return m;
}

}  // namespace nluforge
