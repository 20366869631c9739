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

#include "nluforge/crf.h"
#include "nluforge/error.h"
#include "nluforge/eval.h"
#include "nluforge/neural.h"
#include "train_loop.h"

namespace nluforge {

void TaggerConfig::validate() const {
  if (embed_dim < 1 || hidden < 1) throw UsageError("tagger dimensions must be positive");
  if (layers < 1 || layers > 2) throw UsageError("tagger supports 1 or 2 biLSTM layers");
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("dropout must be in [0, 1)");
  if (batch_size == 0) throw UsageError("batch size must be >= 1");
  if (epochs < 0) throw UsageError("epochs must be >= 0");
}

namespace {

std::string lstm_name(int layer, bool reverse, const char *what) {
  return "lstm" + std::to_string(layer) + (reverse ? ".bwd." : ".fwd.") + what;
}

void uniform_fill(double *p, size_t n, double a, Rng &rng) {
  for (size_t i = 0; i < n; ++i) p[i] = rng.uniform(-a, a);
}

void init_embeddings(ParamStore &params, const TokenVocab &vocab, int dim,
                     const EmbeddingModel *pretrained, Rng &rng) {
  double *e = params.value("embed");
  uniform_fill(e, vocab.size() * dim, 0.1, rng);
  if (pretrained == nullptr) return;
  for (size_t i = 1; i < vocab.size(); ++i) {
    const WordVector v = word_vector(*pretrained, vocab.words()[i]);
    if (v.oov && !pretrained->subword.enabled) continue;
    std::copy(v.values.begin(), v.values.end(), e + i * dim);
  }
}

// Activations kept for the backward pass.
struct TaggerTrace {
  int T = 0;
  std::vector<std::vector<double>> inputs;  // per layer, after dropout
  std::vector<std::vector<double>> masks;   // [0] embedding, [l + 1] layer l
  std::vector<LstmCache> fwd, bwd;
  std::vector<double> top;                  // T x 2H, after dropout
  std::vector<double> emissions;            // T x L
};

std::vector<double> dropout_mask(size_t n, double p, Rng *rng) {
  std::vector<double> m(n, 1.0);
  if (rng == nullptr || p <= 0.0) return m;
  const double keep = 1.0 / (1.0 - p);
  for (double &v : m) v = rng->bernoulli(p) ? 0.0 : keep;
  return m;
}

void run_forward(const BiLstmTagger &model, const std::vector<int> &ids, Rng *rng,
                 TaggerTrace &tr) {
  const auto &cfg = model.config;
  const int T = static_cast<int>(ids.size());
  const int E = cfg.embed_dim, H = cfg.hidden, L = model.num_labels();
  tr.T = T;
  tr.inputs.assign(cfg.layers, {});
  tr.masks.assign(cfg.layers + 1, {});
  tr.fwd.assign(cfg.layers, {});
  tr.bwd.assign(cfg.layers, {});

  const double *embed = model.params.value("embed");
  std::vector<double> x(size_t(T) * E);
  for (int t = 0; t < T; ++t) {
    if (ids[t] < 0 || size_t(ids[t]) >= model.vocab.size()) throw UsageError("token id out of range");
    std::copy(embed + size_t(ids[t]) * E, embed + size_t(ids[t] + 1) * E, x.begin() + size_t(t) * E);
  }
  tr.masks[0] = dropout_mask(x.size(), cfg.dropout, rng);
  for (size_t i = 0; i < x.size(); ++i) x[i] *= tr.masks[0][i];

  for (int l = 0; l < cfg.layers; ++l) {
    const int in = l == 0 ? E : 2 * H;
    tr.inputs[l] = x;
    lstm_forward(model.params.value(lstm_name(l, false, "W")),
                 model.params.value(lstm_name(l, false, "b")), in, H, x, false, tr.fwd[l]);
    lstm_forward(model.params.value(lstm_name(l, true, "W")),
                 model.params.value(lstm_name(l, true, "b")), in, H, x, true, tr.bwd[l]);
    x.assign(size_t(T) * 2 * H, 0.0);
    for (int t = 0; t < T; ++t) {
      std::copy_n(tr.fwd[l].h.begin() + size_t(t) * H, H, x.begin() + size_t(t) * 2 * H);
      std::copy_n(tr.bwd[l].h.begin() + size_t(t) * H, H, x.begin() + size_t(t) * 2 * H + H);
    }
    tr.masks[l + 1] = dropout_mask(x.size(), cfg.dropout, rng);
    for (size_t i = 0; i < x.size(); ++i) x[i] *= tr.masks[l + 1][i];
  }
  tr.top = std::move(x);

  const double *W = model.params.value("proj.W");
  const double *b = model.params.value("proj.b");
  tr.emissions.assign(size_t(T) * L, 0.0);
  for (int t = 0; t < T; ++t) {
    const double *h = tr.top.data() + size_t(t) * 2 * H;
    for (int y = 0; y < L; ++y) {
      double acc = b[y];
      const double *w = W + size_t(y) * 2 * H;
      for (int k = 0; k < 2 * H; ++k) acc += w[k] * h[k];
      tr.emissions[size_t(t) * L + y] = acc;
    }
  }
}

void run_backward(const BiLstmTagger &model, const std::vector<int> &ids, const TaggerTrace &tr,
                  std::span<const double> d_emissions, std::vector<double> &grad) {
  const auto &cfg = model.config;
  const auto &P = model.params;
  const int T = tr.T, E = cfg.embed_dim, H = cfg.hidden, L = model.num_labels();
  const double *W = P.value("proj.W");
  double *dW = grad.data() + P.slot("proj.W").offset;
  double *db = grad.data() + P.slot("proj.b").offset;
  std::vector<double> dx(size_t(T) * 2 * H, 0.0);
  for (int t = 0; t < T; ++t) {
    const double *h = tr.top.data() + size_t(t) * 2 * H;
    double *dh = dx.data() + size_t(t) * 2 * H;
    for (int y = 0; y < L; ++y) {
      const double d = d_emissions[size_t(t) * L + y];
      if (d == 0.0) continue;
      db[y] += d;
      const double *w = W + size_t(y) * 2 * H;
      double *dw = dW + size_t(y) * 2 * H;
      for (int k = 0; k < 2 * H; ++k) {
        dw[k] += d * h[k];
        dh[k] += d * w[k];
      }
    }
  }
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const int in = l == 0 ? E : 2 * H;
    for (size_t i = 0; i < dx.size(); ++i) dx[i] *= tr.masks[l + 1][i];
    std::vector<double> dhf(size_t(T) * H), dhb(size_t(T) * H);
    for (int t = 0; t < T; ++t) {
      std::copy_n(dx.begin() + size_t(t) * 2 * H, H, dhf.begin() + size_t(t) * H);
      std::copy_n(dx.begin() + size_t(t) * 2 * H + H, H, dhb.begin() + size_t(t) * H);
    }
    std::vector<double> dxf(size_t(T) * in), dxb(size_t(T) * in);
    lstm_backward(P.value(lstm_name(l, false, "W")), tr.fwd[l], dhf,
                  grad.data() + P.slot(lstm_name(l, false, "W")).offset,
                  grad.data() + P.slot(lstm_name(l, false, "b")).offset, dxf);
    lstm_backward(P.value(lstm_name(l, true, "W")), tr.bwd[l], dhb,
                  grad.data() + P.slot(lstm_name(l, true, "W")).offset,
                  grad.data() + P.slot(lstm_name(l, true, "b")).offset, dxb);
    dx.assign(size_t(T) * in, 0.0);
    for (size_t i = 0; i < dx.size(); ++i) dx[i] = dxf[i] + dxb[i];
  }
  double *de = grad.data() + P.slot("embed").offset;
  for (int t = 0; t < T; ++t) {
    double *row = de + size_t(ids[t]) * E;
    for (int e = 0; e < E; ++e) row[e] += dx[size_t(t) * E + e] * tr.masks[0][size_t(t) * E + e];
  }
}

ChainPotentials as_chain(const BiLstmTagger &model, const std::vector<double> &emissions) {
  ChainPotentials c;
  c.labels = model.num_labels();
  c.length = static_cast<int>(emissions.size() / c.labels);
  c.emissions = emissions;
  return c;
}

std::span<const double> transitions(const BiLstmTagger &model) {
  const size_t L = model.labels.size();
  return {model.params.value("trans"), L * L};
}

}  // namespace

BiLstmTagger make_tagger(std::vector<std::string> labels, TokenVocab vocab, TaggerConfig config,
                         const EmbeddingModel *pretrained) {
  if (pretrained != nullptr && pretrained->dim != config.embed_dim) {
    warn("tagger embedding size set to " + std::to_string(pretrained->dim) +
         " to match the pretrained vectors");
    config.embed_dim = pretrained->dim;
  }
  config.validate();
  if (labels.empty()) throw UsageError("tagger needs at least one label");
  BiLstmTagger m;
  m.config = config;
  m.labels = std::move(labels);
  m.vocab = std::move(vocab);
  const int E = config.embed_dim, H = config.hidden, L = m.num_labels();
  auto &P = m.params;
  P.add("embed", {int(m.vocab.size()), E});
  for (int l = 0; l < config.layers; ++l) {
    const int in = l == 0 ? E : 2 * H;
    for (bool rev : {false, true}) {
      P.add(lstm_name(l, rev, "W"), {4 * H, in + H});
      P.add(lstm_name(l, rev, "b"), {4 * H});
    }
  }
  P.add("proj.W", {L, 2 * H});
  P.add("proj.b", {L});
  if (config.output == OutputLayer::kCrf) P.add("trans", {L, L});

  Rng rng(config.seed);
  init_embeddings(P, m.vocab, E, pretrained, rng);
  const double a = 1.0 / std::sqrt(double(H));
  for (int l = 0; l < config.layers; ++l) {
    for (bool rev : {false, true}) {
      const auto &w = P.slot(lstm_name(l, rev, "W"));
      uniform_fill(P.values.data() + w.offset, w.size, a, rng);
      double *b = P.value(lstm_name(l, rev, "b"));
      for (int j = 0; j < H; ++j) b[H + j] = 1.0;  // forget gate
    }
  }
  uniform_fill(P.value("proj.W"), size_t(L) * 2 * H, 1.0 / std::sqrt(2.0 * H), rng);
  return m;
}

std::vector<double> tagger_emissions(const BiLstmTagger &model, const std::vector<int> &ids,
                                     Rng *dropout_rng) {
  TaggerTrace tr;
  run_forward(model, ids, dropout_rng, tr);
  return tr.emissions;
}

double tagger_loss(const BiLstmTagger &model, const std::vector<int> &ids,
                   const std::vector<int> &gold, std::vector<double> *grad, Rng *dropout_rng) {
  if (gold.size() != ids.size()) throw DataError("tagger loss: gold/token length mismatch");
  const int T = static_cast<int>(ids.size()), L = model.num_labels();
  if (T == 0) return 0.0;
  for (int g : gold) {
    if (g < 0 || g >= L) throw DataError("tagger loss: gold label out of range");
  }
  TaggerTrace tr;
  run_forward(model, ids, dropout_rng, tr);
  std::vector<double> d(size_t(T) * L, 0.0);
  double loss = 0.0;
  if (model.config.output == OutputLayer::kSoftmax) {
    for (int t = 0; t < T; ++t) {
      std::span<double> p(d.data() + size_t(t) * L, L);
      std::copy_n(tr.emissions.begin() + size_t(t) * L, L, p.begin());
      const double lse = softmax_inplace(p);
      loss += lse - tr.emissions[size_t(t) * L + gold[t]];
      p[gold[t]] -= 1.0;
      for (double &v : p) v /= T;
    }
    loss /= T;
  } else {
    const ChainPotentials chain = as_chain(model, tr.emissions);
    const Marginals m = forward_backward(chain, transitions(model));
    loss = m.log_z - path_score(chain, transitions(model), gold);
    if (grad != nullptr) {
      d = m.node;
      double *dt = grad->data() + model.params.slot("trans").offset;
      for (size_t i = 0; i < m.edge.size(); ++i) dt[i] += m.edge[i];
      for (int t = 0; t < T; ++t) {
        d[size_t(t) * L + gold[t]] -= 1.0;
        if (t > 0) dt[size_t(gold[t - 1]) * L + gold[t]] -= 1.0;
      }
    }
  }
  if (grad != nullptr) {
    if (grad->size() != model.params.size()) throw UsageError("gradient buffer has the wrong size");
    run_backward(model, ids, tr, d, *grad);
  }
  return loss;
}

std::vector<double> tag_distributions(const BiLstmTagger &model,
                                      const std::vector<std::string> &tokens) {
  const auto e = tagger_emissions(model, model.vocab.encode(tokens));
  const int L = model.num_labels();
  if (model.config.output == OutputLayer::kCrf) {
    return forward_backward(as_chain(model, e), transitions(model)).node;
  }
  std::vector<double> p = e;
  for (size_t t = 0; t < tokens.size(); ++t) softmax_inplace({p.data() + t * L, size_t(L)});
  return p;
}

std::vector<std::string> tag(const BiLstmTagger &model, const std::vector<std::string> &tokens) {
  const auto e = tagger_emissions(model, model.vocab.encode(tokens));
  const int L = model.num_labels();
  std::vector<std::string> out;
  if (model.config.output == OutputLayer::kCrf) {
    for (int y : viterbi(as_chain(model, e), transitions(model))) out.push_back(model.labels[y]);
    return out;
  }
  for (size_t t = 0; t < tokens.size(); ++t) {
    const double *row = e.data() + t * L;
    out.push_back(model.labels[std::max_element(row, row + L) - row]);
  }
  return out;
}

BiLstmTagger train_tagger(const Corpus &train, const Corpus &dev, const TaggerConfig &config,
                          const EmbeddingModel *pretrained, TrainCurve *curve) {
  if (train.utterances.empty()) throw DataError("tagger training set is empty");
  BiLstmTagger model = make_tagger(train.schema.slot_labels, build_token_vocab(train, pretrained),
                                   config, pretrained);
  model.schema_checksum = train.schema.checksum();
  std::vector<internal::Example> examples;
  for (const auto &u : train.utterances) {
    internal::Example ex;
    ex.ids = model.vocab.encode(u.tokens);
    for (const auto &t : u.slot_tags) {
      const int y = train.schema.slot_index(t);
      if (y < 0) throw DataError("utterance '" + u.id + "': unknown slot tag '" + t + "'");
      ex.gold.push_back(y);
    }
    if (ex.gold.size() != ex.ids.size()) {
      throw DataError("utterance '" + u.id + "': tag/token count mismatch");
    }
    examples.push_back(std::move(ex));
  }
  internal::LoopOptions opts;
  opts.epochs = model.config.epochs;
  opts.batch_size = model.config.batch_size;
  opts.lr = model.config.lr;
  opts.seed = model.config.seed;
  if (model.config.freeze_embeddings) opts.frozen = &model.params.slot("embed");
  std::function<double()> score;
  if (!dev.utterances.empty()) {
    score = [&] {
      std::vector<std::vector<SlotSpan>> gold, pred;
      for (const auto &u : dev.utterances) {
        gold.push_back(spans_from_bio(u.slot_tags, dev.schema));
        pred.push_back(spans_from_bio(tag(model, u.tokens)));
      }
      return span_f1(gold, pred).weighted_f1;
    };
  }
  const TrainCurve c = internal::run_training(
      model.params, examples, opts,
      [&](const internal::Example &ex, std::vector<double> *grad, Rng *rng) {
        return tagger_loss(model, ex.ids, ex.gold, grad, rng);
      },
      score);
  if (curve != nullptr) *curve = c;
  return model;
}

}  // namespace nluforge
