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

#include <cmath>
#include <filesystem>

#include <unistd.h>

#include "doctest.h"
#include "nluforge/crf.h"
#include "nluforge/error.h"
#include "nluforge/eval.h"
#include "nluforge/generator.h"
#include "oracles.h"

using namespace nluforge;
using namespace nluforge::testing;
namespace fs = std::filesystem;

namespace {

Corpus sample_corpus(size_t n, uint64_t seed) {
  const auto pack = read_pack(std::string(NLUFORGE_DATA_DIR) + "/sample_pack.json");
  return generate(pack, n, seed);
}

bool has(const std::vector<std::string> &v, const std::string &s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("log_sum_exp") {
  CHECK(log_sum_exp(std::vector<double>{}) == -INFINITY);
  CHECK(log_sum_exp(std::vector<double>{0.0, 0.0}) == doctest::Approx(std::log(2.0)));
  CHECK(log_sum_exp(std::vector<double>{1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(log_sum_exp(std::vector<double>{-INFINITY, 0.0}) == 0.0);
}

TEST_CASE("hand-computed two-step chain") {
  ChainPotentials c;
  c.length = 2;
  c.labels = 2;
  c.emissions = {1.0, 0.0, 0.0, 2.0};
  const std::vector<double> tr = {0.5, 0.0, 0.0, 0.0};
  // Paths: 00 -> 1.5, 01 -> 3, 10 -> 0, 11 -> 2.
  const double z = std::log(std::exp(1.5) + std::exp(3.0) + 1.0 + std::exp(2.0));
  CHECK(log_partition(c, tr) == doctest::Approx(z));
  double best = 0.0;
  CHECK(viterbi(c, tr, &best) == std::vector<int>{0, 1});
  CHECK(best == doctest::Approx(3.0));
  const auto m = forward_backward(c, tr);
  CHECK(m.node[0] == doctest::Approx((std::exp(1.5) + std::exp(3.0)) / std::exp(z)));
  CHECK(m.edge[1] == doctest::Approx(std::exp(3.0 - z)));
}

TEST_CASE("viterbi breaks ties toward lower labels") {
  ChainPotentials c;
  c.length = 3;
  c.labels = 3;
  c.emissions.assign(9, 0.0);
  const std::vector<double> tr(9, 0.0);
  CHECK(viterbi(c, tr) == std::vector<int>{0, 0, 0});
}

TEST_CASE("chain kernels agree with enumeration") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const int T = 1 + int(rng.index(5)), L = 1 + int(rng.index(4));
    const auto c = random_chain(rng, T, L);
    const auto tr = random_vector(rng, size_t(L) * L, 2.0);
    const auto brute = enumerate_paths(c, tr);
    CHECK(log_partition(c, tr) == doctest::Approx(brute.log_z).epsilon(1e-12));
    double best = 0.0;
    const auto path = viterbi(c, tr, &best);
    CHECK(best == doctest::Approx(brute.best).epsilon(1e-12));
    CHECK(path_score(c, tr, path) == doctest::Approx(brute.best).epsilon(1e-12));

    // Viterbi beats random paths.
    for (int k = 0; k < 20; ++k) {
      std::vector<int> p(T);
      for (int &y : p) y = int(rng.index(L));
      CHECK(path_score(c, tr, p) <= best + 1e-12);
    }

    const auto m = forward_backward(c, tr);
    CHECK(m.log_z == doctest::Approx(brute.log_z).epsilon(1e-12));
    for (int t = 0; t < T; ++t) {
      double s = 0.0;
      for (int y = 0; y < L; ++y) s += m.node[size_t(t) * L + y];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    double e = 0.0;
    for (double x : m.edge) e += x;
    CHECK(e == doctest::Approx(double(T - 1)).epsilon(1e-12));
  }
}

TEST_CASE("empty chains and bad shapes") {
  ChainPotentials c;
  c.labels = 3;
  const std::vector<double> tr(9, 0.0);
  CHECK(log_partition(c, tr) == 0.0);
  CHECK(viterbi(c, tr).empty());
  c.length = 1;
  CHECK_THROWS_AS(log_partition(c, tr), Error);
}

TEST_CASE("word shape and date detection") {
  CHECK(word_shape("Créatinine") == "Xx");
  CHECK(word_shape("27/03/2015") == "d/d/d");
  CHECK(word_shape("CRP") == "X");
  CHECK(is_date_like("27/03/2015"));
  CHECK(is_date_like("1/3/15"));
  CHECK_FALSE(is_date_like("3,5"));
  CHECK_FALSE(is_date_like("mars"));
}

TEST_CASE("feature templates") {
  const std::vector<std::string> toks = {"créatinine", "du", "27/03/2015"};
  const auto f0 = extract_features(toks, {}, {}, nullptr, 0).sparse;
  CHECK(has(f0, "b"));
  CHECK(has(f0, "w[-2]=<s>"));
  CHECK(has(f0, "w[-1]=<s>"));
  CHECK(has(f0, "w[0]=créatinine"));
  CHECK(has(f0, "w[2]=27/03/2015"));
  CHECK(has(f0, "w[-1]w[0]=<s>|créatinine"));
  CHECK(has(f0, "p2=cr"));
  CHECK(has(f0, "p3=cré"));
  CHECK(has(f0, "s3=ine"));
  CHECK_FALSE(has(f0, "date"));
  const auto f2 = extract_features(toks, {}, {}, nullptr, 2).sparse;
  CHECK(has(f2, "date"));
  CHECK_FALSE(has(f2, "num"));
  const std::vector<std::string> dose = {"à", "3,5"};
  CHECK(has(extract_features(dose, {}, {}, nullptr, 1).sparse, "num"));
  CHECK(has(f2, "w[1]=</s>"));
  CHECK(has(f2, "w[2]=</s>"));
  const std::vector<std::string> lem = {"créatinine", "de", "date"}, pos = {"NC", "P", "NUM"};
  const auto f1 = extract_features(toks, lem, pos, nullptr, 1).sparse;
  CHECK(has(f1, "l[-1]=créatinine"));
  CHECK(has(f1, "t[1]=NUM"));
  CHECK(has(f1, "t[-2]=<s>"));
  CHECK_THROWS_AS(extract_features(toks, {}, {}, nullptr, 3), Error);
  CHECK_THROWS_AS(extract_features(toks, std::vector<std::string>{"x"}, {}, nullptr, 0), Error);
}

TEST_CASE("feature dictionary freezing") {
  FeatureDict d;
  CHECK(d.intern("a") == 0);
  CHECK(d.intern("b") == 1);
  CHECK(d.intern("a") == 0);
  d.freeze();
  CHECK(d.intern("c") == -1);
  CHECK(d.lookup("b") == 1);
  CHECK(d.lookup("c") == -1);
  CHECK(d.size() == 2);
}

TEST_CASE("NLL gradient and the parallel reduction") {
  const auto corpus = sample_corpus(60, 3);
  SkipgramOptions so;
  so.dim = 4;
  so.epochs = 1;
  so.subword.buckets = 5000;
  std::vector<std::vector<std::string>> sents;
  for (const auto &u : corpus.utterances) sents.push_back(u.tokens);
  const auto emb = train_skipgram(sents, so);

  CrfModel model;
  model.labels = corpus.schema.slot_labels;
  model.dense_dim = 4;
  model.dense_mean.assign(4, 0.0);
  model.dense_std.assign(4, 1.0);
  model.l2 = 0.1;
  std::vector<CompiledSentence> batch;
  for (const auto &u : corpus.utterances) batch.push_back(compile_sentence(model, u, &emb, true));
  model.allocate();
  Rng rng(5);
  model.params = random_vector(rng, model.num_params(), 0.3);

  const auto serial = nll_and_grad_serial(model, batch);
  const auto par = nll_and_grad(model, batch);
  CHECK(serial.loss == par.loss);
  CHECK(serial.grad == par.grad);

  const std::vector<CompiledSentence> few(batch.begin(), batch.begin() + 3);
  const auto g = nll_and_grad_serial(model, few);
  auto coords = sample_coords(rng, model.num_params(), 300);
  for (size_t i = model.dense_offset(); i < model.num_params(); ++i) coords.push_back(i);
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  std::vector<double> analytic;
  for (size_t i : coords) analytic.push_back(g.grad[i]);
  auto f = [&](const std::vector<double> &x) {
    CrfModel m = model;
    m.params = x;
    return nll_and_grad_serial(m, few).loss;
  };
  CHECK(relative_error(analytic, numeric_gradient(f, model.params, coords)) < 1e-6);

  CompiledSentence unlabeled = batch[0];
  unlabeled.gold.clear();
  std::vector<CompiledSentence> bad = {unlabeled};
  CHECK_THROWS_AS(nll_and_grad(model, bad), Error);
}

TEST_CASE("training learns the synthetic slots and round-trips through JSON") {
  const auto train = sample_corpus(400, 1);
  const auto dev = sample_corpus(120, 2);
  CrfTrainOptions o;
  o.epochs = 5;
  o.seed = 4;
  CrfTrainLog log;
  const auto model = train_crf(train, dev, o, nullptr, &log);
  CHECK(log.train_loss.size() == 5);
  CHECK(log.dev_f1.size() == 5);
  CHECK(log.best_epoch >= 0);
  CHECK(log.dev_f1[log.best_epoch] == *std::max_element(log.dev_f1.begin(), log.dev_f1.end()));
  CHECK(log.train_loss.back() < log.train_loss.front());

  std::vector<std::vector<SlotSpan>> gold, pred;
  for (const auto &u : dev.utterances) {
    gold.push_back(spans_from_bio(u.slot_tags));
    pred.push_back(predict(model, u).spans);
  }
  CHECK(span_f1(gold, pred).weighted_f1 > 0.9);

  const auto again = train_crf(train, dev, o);
  CHECK(again.params == model.params);

  const auto back = crf_from_json(crf_to_json(model));
  CHECK(back.params == model.params);
  CHECK(back.labels == model.labels);
  CHECK(back.features.names() == model.features.names());
  const auto dir = fs::temp_directory_path() / ("nluforge-crf-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  save_crf(model, (dir / "m.json").string());
  const auto loaded = load_crf((dir / "m.json").string());
  for (const auto &u : dev.utterances) CHECK(predict(loaded, u).tags == predict(model, u).tags);

  // Unknown tokens at prediction time are fine.
  const auto p = predict(model, std::vector<std::string>{"zzz", "qqq"});
  CHECK(p.tags.size() == 2);
  CHECK(predict(model, std::vector<std::string>{}).tags.empty());

  CHECK_THROWS_AS(crf_from_json("{\"format\": \"other\"}"), Error);
  CHECK_THROWS_AS(train_crf(Corpus{}, dev, o), Error);
}

TEST_CASE("model trained with embeddings needs them at prediction") {
  const auto train = sample_corpus(80, 1);
  SkipgramOptions so;
  so.dim = 4;
  so.epochs = 1;
  so.subword.buckets = 5000;
  std::vector<std::vector<std::string>> sents;
  for (const auto &u : train.utterances) sents.push_back(u.tokens);
  const auto emb = train_skipgram(sents, so);
  CrfTrainOptions o;
  o.epochs = 1;
  const auto model = train_crf(train, Corpus{}, o, &emb);
  CHECK(model.dense_dim == 4);
  CHECK_NOTHROW(predict(model, train.utterances[0], &emb));
  CHECK_THROWS_AS(predict(model, train.utterances[0]), Error);
  so.dim = 3;
  const auto other = train_skipgram(sents, so);
  CHECK_THROWS_AS(predict(model, train.utterances[0], &other), Error);
}
