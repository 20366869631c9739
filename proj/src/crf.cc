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

#include "nluforge/crf.h"

#include <algorithm>
#include <cmath>
#include <regex>

#include "json.hpp"
#include "nluforge/error.h"
#include "nluforge/eval.h"
#include "nluforge/io.h"
#include "nluforge/optim.h"
#include "nluforge/rng.h"

namespace nluforge {

using nlohmann::json;

int FeatureDict::intern(const std::string &name) {
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  if (frozen_) return -1;
  const int id = static_cast<int>(names_.size());
  ids_.emplace(name, id);
  names_.push_back(name);
  return id;
}

int FeatureDict::lookup(const std::string &name) const {
  auto it = ids_.find(name);
  return it == ids_.end() ? -1 : it->second;
}

bool is_date_like(const std::string &token) {
  static const std::regex re(R"(^\d{1,2}/\d{1,2}/\d{2,4}$)");
  return std::regex_match(token, re);
}

std::string word_shape(const std::string &token) {
  std::string out;
  for (const auto &ch : utf8_chars(token)) {
    char c;
    if (ch.size() > 1) {
      c = 'x';
    } else if (ch[0] >= '0' && ch[0] <= '9') {
      c = 'd';
    } else if (ch[0] >= 'A' && ch[0] <= 'Z') {
      c = 'X';
    } else if (ch[0] >= 'a' && ch[0] <= 'z') {
      c = 'x';
    } else {
      c = ch[0];
    }
    if (out.empty() || out.back() != c) out.push_back(c);
  }
  return out;
}

namespace {

bool is_number(const std::string &token) {
  bool digit = false;
  for (char c : token) {
    if (c >= '0' && c <= '9') {
      digit = true;
    } else if (c != '.' && c != ',') {
      return false;
    }
  }
  return digit;
}

const std::string &at_offset(std::span<const std::string> seq, size_t t, int off) {
  static const std::string kBos = "<s>", kEos = "</s>";
  const auto i = static_cast<std::ptrdiff_t>(t) + off;
  if (i < 0) return kBos;
  if (i >= static_cast<std::ptrdiff_t>(seq.size())) return kEos;
  return seq[i];
}

}  // namespace

FeatureVector extract_features(std::span<const std::string> tokens,
                               std::span<const std::string> lemmas,
                               std::span<const std::string> pos,
                               const EmbeddingModel *embeddings, size_t t) {
  if (t >= tokens.size()) throw DataError("feature position out of range");
  FeatureVector fv;
  auto &f = fv.sparse;
  const std::string &w = tokens[t];
  f.push_back("b");
  for (int o = -2; o <= 2; ++o) f.push_back("w[" + std::to_string(o) + "]=" + at_offset(tokens, t, o));
  f.push_back("w[-1]w[0]=" + at_offset(tokens, t, -1) + "|" + w);
  f.push_back("shape=" + word_shape(w));
  const auto chars = utf8_chars(w);
  for (size_t n = 1; n <= 3 && n <= chars.size(); ++n) {
    std::string pre, suf;
    for (size_t i = 0; i < n; ++i) {
      pre += chars[i];
      suf += chars[chars.size() - n + i];
    }
    f.push_back("p" + std::to_string(n) + "=" + pre);
    f.push_back("s" + std::to_string(n) + "=" + suf);
  }
  if (is_date_like(w)) f.push_back("date");
  if (is_number(w)) f.push_back("num");
  if (!lemmas.empty()) {
    if (lemmas.size() != tokens.size()) throw DataError("lemma column length mismatch");
    for (int o = -1; o <= 1; ++o) f.push_back("l[" + std::to_string(o) + "]=" + at_offset(lemmas, t, o));
  }
  if (!pos.empty()) {
    if (pos.size() != tokens.size()) throw DataError("POS column length mismatch");
    for (int o = -2; o <= 2; ++o) f.push_back("t[" + std::to_string(o) + "]=" + at_offset(pos, t, o));
  }
  if (embeddings != nullptr) fv.dense = word_vector(*embeddings, w).values;
  return fv;
}

void CrfModel::allocate() { params.assign(num_params(), 0.0); }

namespace {

template <typename Model>
CompiledSentence compile(Model &model, const Utterance &utt, const EmbeddingModel *embeddings,
                         bool grow) {
  if (model.dense_dim > 0 && embeddings == nullptr) {
    throw UsageError("CRF model uses embedding features but no embeddings were given");
  }
  if (model.dense_dim > 0 && embeddings->dim != model.dense_dim) {
    throw DataError("embedding dimension " + std::to_string(embeddings->dim) +
                    " does not match the CRF model (" + std::to_string(model.dense_dim) + ")");
  }
  const EmbeddingModel *emb = model.dense_dim > 0 ? embeddings : nullptr;
  CompiledSentence s;
  s.length = static_cast<int>(utt.tokens.size());
  s.features.resize(utt.tokens.size());
  s.dense.reserve(utt.tokens.size() * model.dense_dim);
  for (size_t t = 0; t < utt.tokens.size(); ++t) {
    FeatureVector fv = extract_features(utt.tokens, utt.lemmas, utt.pos, emb, t);
    for (const auto &name : fv.sparse) {
      int id;
      if constexpr (std::is_const_v<Model>) {
        id = model.features.lookup(name);
      } else {
        id = grow ? model.features.intern(name) : model.features.lookup(name);
      }
      if (id >= 0) s.features[t].push_back(id);
    }
    for (int d = 0; d < model.dense_dim; ++d) {
      s.dense.push_back((fv.dense[d] - model.dense_mean[d]) / model.dense_std[d]);
    }
  }
  if (!utt.slot_tags.empty()) {
    if (utt.slot_tags.size() != utt.tokens.size()) {
      throw DataError("utterance '" + utt.id + "': tag/token count mismatch");
    }
    for (const auto &tag : utt.slot_tags) {
      auto it = std::find(model.labels.begin(), model.labels.end(), tag);
      if (it == model.labels.end()) {
        throw DataError("utterance '" + utt.id + "': unknown slot tag '" + tag + "'");
      }
      s.gold.push_back(static_cast<int>(it - model.labels.begin()));
    }
  }
  return s;
}

}  // namespace

CompiledSentence compile_sentence(CrfModel &model, const Utterance &utt,
                                  const EmbeddingModel *embeddings, bool grow) {
  return compile(model, utt, embeddings, grow);
}

CompiledSentence compile_sentence(const CrfModel &model, const Utterance &utt,
                                  const EmbeddingModel *embeddings) {
  return compile(model, utt, embeddings, false);
}

ChainPotentials emission_scores(const CrfModel &model, const CompiledSentence &sent) {
  const int L = model.num_labels();
  const int D = model.dense_dim;
  ChainPotentials c;
  c.length = sent.length;
  c.labels = L;
  c.emissions.assign(size_t(sent.length) * L, 0.0);
  const double *dense_w = model.params.data() + model.dense_offset();
  for (int t = 0; t < sent.length; ++t) {
    double *e = c.emissions.data() + size_t(t) * L;
    for (int f : sent.features[t]) {
      const double *w = model.params.data() + size_t(f) * L;
      for (int y = 0; y < L; ++y) e[y] += w[y];
    }
    for (int d = 0; d < D; ++d) {
      const double x = sent.dense[size_t(t) * D + d];
      const double *w = dense_w + size_t(d) * L;
      for (int y = 0; y < L; ++y) e[y] += x * w[y];
    }
  }
  return c;
}

namespace {

Prediction decode(const CrfModel &model, const CompiledSentence &sent) {
  Prediction p;
  for (int y : viterbi(emission_scores(model, sent), model.transitions())) {
    p.tags.push_back(model.labels[y]);
  }
  p.spans = spans_from_bio(p.tags);
  return p;
}

double dev_span_f1(const CrfModel &model, const std::vector<CompiledSentence> &dev,
                   const Corpus &corpus) {
  std::vector<std::vector<SlotSpan>> gold, pred;
  for (size_t i = 0; i < dev.size(); ++i) {
    gold.push_back(spans_from_bio(corpus.utterances[i].slot_tags, corpus.schema));
    pred.push_back(decode(model, dev[i]).spans);
  }
  return span_f1(gold, pred).weighted_f1;
}

}  // namespace

CrfModel train_crf(const Corpus &train, const Corpus &dev, const CrfTrainOptions &opts,
                   const EmbeddingModel *embeddings, CrfTrainLog *log) {
  if (train.utterances.empty()) throw DataError("CRF training set is empty");
  if (opts.batch_size == 0) throw UsageError("CRF batch size must be >= 1");
  CrfModel model;
  model.labels = train.schema.slot_labels;
  model.l2 = opts.l2;
  if (embeddings != nullptr) {
    const int D = embeddings->dim;
    model.dense_dim = D;
    model.dense_mean.assign(D, 0.0);
    model.dense_std.assign(D, 0.0);
    std::vector<std::vector<double>> rows;
    for (const auto &u : train.utterances) {
      for (const auto &w : u.tokens) rows.push_back(word_vector(*embeddings, w).values);
    }
    for (const auto &r : rows) {
      for (int d = 0; d < D; ++d) model.dense_mean[d] += r[d];
    }
    for (int d = 0; d < D; ++d) model.dense_mean[d] /= double(rows.size());
    for (const auto &r : rows) {
      for (int d = 0; d < D; ++d) {
        const double c = r[d] - model.dense_mean[d];
        model.dense_std[d] += c * c;
      }
    }
    for (int d = 0; d < D; ++d) {
      model.dense_std[d] = std::sqrt(model.dense_std[d] / double(rows.size()));
      if (model.dense_std[d] < 1e-12) model.dense_std[d] = 1.0;
    }
  }

  std::vector<CompiledSentence> sents;
  for (const auto &u : train.utterances) sents.push_back(compile_sentence(model, u, embeddings, true));
  model.features.freeze();
  model.allocate();
  std::vector<CompiledSentence> dev_sents;
  for (const auto &u : dev.utterances) {
    dev_sents.push_back(compile_sentence(std::as_const(model), u, embeddings));
  }

  if (opts.epochs <= 0) {
    warn("CRF trained for zero epochs; all weights are zero");
    return model;
  }

  Adam adam(model.num_params(), {opts.lr, opts.beta1, opts.beta2, opts.eps});
  Rng rng(opts.seed);
  std::vector<double> best_params = model.params;
  double best_f1 = -1.0;
  int stale = 0;
  CrfTrainLog local;
  CrfTrainLog &out = log != nullptr ? *log : local;
  out = {};
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(sents);
    double total = 0.0;
    for (size_t start = 0; start < sents.size(); start += opts.batch_size) {
      const size_t n = std::min(opts.batch_size, sents.size() - start);
      LossAndGrad lg = nll_and_grad(model, {sents.data() + start, n});
      total += lg.loss;
      adam.step(model.params, lg.grad);
    }
    out.train_loss.push_back(total / double(sents.size()));
    if (dev_sents.empty()) {
      best_params = model.params;
      out.best_epoch = epoch;
      continue;
    }
    const double f1 = dev_span_f1(model, dev_sents, dev);
    out.dev_f1.push_back(f1);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_params = model.params;
      out.best_epoch = epoch;
      stale = 0;
    } else if (opts.patience > 0 && ++stale >= opts.patience) {
      break;
    }
  }
  model.params = std::move(best_params);
  return model;
}

Prediction predict(const CrfModel &model, const Utterance &utt, const EmbeddingModel *embeddings) {
  Utterance copy = utt;
  copy.slot_tags.clear();
  return decode(model, compile_sentence(model, copy, embeddings));
}

Prediction predict(const CrfModel &model, const std::vector<std::string> &tokens,
                   const EmbeddingModel *embeddings) {
  Utterance u;
  u.tokens = tokens;
  return decode(model, compile_sentence(model, u, embeddings));
}

std::string crf_to_json(const CrfModel &model) {
  json j;
  j["format"] = "nluforge-crf/1";
  j["labels"] = model.labels;
  j["features"] = model.features.names();
  j["dense"] = {{"dim", model.dense_dim}, {"mean", model.dense_mean}, {"std", model.dense_std}};
  j["l2"] = model.l2;
  if (model.embedding) {
    j["embedding"] = {{"path", model.embedding->path}, {"checksum", model.embedding->checksum}};
  } else {
    j["embedding"] = nullptr;
  }
  j["params"] = model.params;
  return j.dump() + "\n";
}

CrfModel crf_from_json(std::string_view text) {
  CrfModel m;
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "nluforge-crf/1") throw DataError("not a CRF model file");
    m.labels = j.at("labels").get<std::vector<std::string>>();
    for (const auto &name : j.at("features")) m.features.intern(name.get<std::string>());
    m.features.freeze();
    m.dense_dim = j.at("dense").at("dim").get<int>();
    m.dense_mean = j.at("dense").at("mean").get<std::vector<double>>();
    m.dense_std = j.at("dense").at("std").get<std::vector<double>>();
    m.l2 = j.at("l2").get<double>();
    if (!j.at("embedding").is_null()) {
      m.embedding = EmbeddingRef{j["embedding"].at("path").get<std::string>(),
                                 j["embedding"].at("checksum").get<std::string>()};
    }
    m.params = j.at("params").get<std::vector<double>>();
  } catch (const json::exception &e) {
    throw DataError(std::string("malformed CRF model: ") + e.what());
  }
  if (m.labels.empty() || m.params.size() != m.num_params() ||
      m.dense_mean.size() != size_t(m.dense_dim) || m.dense_std.size() != size_t(m.dense_dim)) {
    throw DataError("CRF model file has inconsistent shapes");
  }
  return m;
}

void save_crf(const CrfModel &model, const std::string &path) {
  write_file_atomic(path, crf_to_json(model));
}

CrfModel load_crf(const std::string &path) { return crf_from_json(read_file(path)); }

}  // namespace nluforge
