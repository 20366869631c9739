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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "nluforge/crf.h"
#include "nluforge/embeddings.h"
#include "nluforge/error.h"
#include "nluforge/eval.h"
#include "nluforge/generator.h"
#include "nluforge/io.h"
#include "nluforge/neural.h"
#include "nluforge/paraphraser.h"
#include "oracles.h"

using namespace nluforge;
using namespace nluforge::testing;

namespace {

using Clock = std::chrono::steady_clock;

int g_failures = 0;

void report(const char *name, bool ok, const std::string &detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char *f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

std::string data_path(const std::string &name) {
  return std::string(NLUFORGE_DATA_DIR) + "/" + name;
}

void quiet(const std::string &) {}

// Runs `body`, turning exceptions into a FAIL line.
void criterion(const char *name, const std::function<void()> &body) {
  try {
    body();
  } catch (const std::exception &e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

void oracle_equivalence() {
  const auto t0 = Clock::now();
  Rng rng(2026);
  double worst = 0.0;
  int path_mismatch = 0;
  for (int i = 0; i < 100; ++i) {
    const int T = 1 + int(rng.index(6)), L = 1 + int(rng.index(4));
    const auto c = random_chain(rng, T, L);
    const auto tr = random_vector(rng, size_t(L) * L, 2.0);
    const auto brute = enumerate_paths(c, tr);
    double best = 0.0;
    const auto path = viterbi(c, tr, &best);
    worst = std::max(worst, std::abs(log_partition(c, tr) - brute.log_z));
    worst = std::max(worst, std::abs(best - brute.best));
    worst = std::max(worst, std::abs(forward_backward(c, tr).log_z - brute.log_z));
    if (path != brute.argmax) ++path_mismatch;
  }
  const double secs = seconds_since(t0);
  report("oracle-equivalence", worst < 1e-10 && path_mismatch == 0 && secs < 10.0,
         "max abs error " + fmt("%.2e", worst) + ", " + std::to_string(path_mismatch) +
             " argmax mismatches over 100 chains, " + fmt("%.2f s", secs));
}

// ---------------------------------------------------------------------------

struct GradResult {
  std::string name;
  double error;
  double limit;
};

GradResult crf_gradient() {
  const auto pack = read_pack(data_path("sample_pack.json"));
  const auto corpus = generate(pack, 6, 1);
  std::vector<std::vector<std::string>> sents;
  for (const auto &u : corpus.utterances) sents.push_back(u.tokens);
  SkipgramOptions so;
  so.dim = 3;
  so.epochs = 1;
  so.subword.buckets = 4096;
  const auto emb = train_skipgram(sents, so);

  CrfModel model;
  model.labels = corpus.schema.slot_labels;
  model.dense_dim = 3;
  model.dense_mean.assign(3, 0.0);
  model.dense_std.assign(3, 1.0);
  model.l2 = 0.05;
  std::vector<CompiledSentence> batch;
  for (const auto &u : corpus.utterances) batch.push_back(compile_sentence(model, u, &emb, true));
  model.allocate();
  Rng rng(17);
  model.params = random_vector(rng, model.num_params(), 0.5);
  const auto g = nll_and_grad(model, batch);
  auto coords = sample_coords(rng, model.dense_offset(), 400);
  for (size_t i = model.dense_offset(); i < model.num_params(); ++i) coords.push_back(i);
  std::vector<double> analytic;
  for (size_t i : coords) analytic.push_back(g.grad[i]);
  auto f = [&](const std::vector<double> &x) {
    CrfModel m = model;
    m.params = x;
    return nll_and_grad_serial(m, batch).loss;
  };
  return {"crf", relative_error(analytic, numeric_gradient(f, model.params, coords)), 1e-6};
}

GradResult skipgram_gradient() {
  const std::vector<std::vector<std::string>> sents = {
      {"le", "taux", "de", "créatinine", "est", "élevé"},
      {"la", "protéine", "c", "réactive", "est", "normale"}};
  SubwordConfig sc;
  sc.buckets = 2048;
  auto model = init_model(build_vocab(sents, 1), 5, sc, 3);
  Rng rng(5);
  for (double &x : model.input) x = rng.uniform(-0.5, 0.5);
  for (double &x : model.output) x = rng.uniform(-0.5, 0.5);
  const int center = model.vocab.find("créatinine");
  const int context = model.vocab.find("taux");
  const std::vector<int> negs = {model.vocab.find("la"), model.vocab.find("normale"),
                                 model.vocab.find("c")};
  const auto g = pair_gradient(model, center, context, negs);
  std::vector<size_t> coords;
  std::vector<double> analytic;
  const size_t n_in = model.input.size();
  for (const auto &[row, grad] : g.input_rows) {
    for (int d = 0; d < model.dim; ++d) {
      coords.push_back(size_t(row) * model.dim + d);
      analytic.push_back(grad[d]);
    }
  }
  for (const auto &[row, grad] : g.output_rows) {
    for (int d = 0; d < model.dim; ++d) {
      coords.push_back(n_in + size_t(row) * model.dim + d);
      analytic.push_back(grad[d]);
    }
  }
  std::vector<double> flat = model.input;
  flat.insert(flat.end(), model.output.begin(), model.output.end());
  auto f = [&](const std::vector<double> &x) {
    EmbeddingModel m = model;
    std::copy(x.begin(), x.begin() + n_in, m.input.begin());
    std::copy(x.begin() + n_in, x.end(), m.output.begin());
    return pair_loss(m, center, context, negs);
  };
  return {"skip-gram", relative_error(analytic, numeric_gradient(f, flat, coords)), 1e-6};
}

GradResult lstm_gradient() {
  const int I = 3, H = 4, T = 4;
  Rng rng(8);
  double worst = 0.0;
  for (bool reverse : {false, true}) {
    const auto W = random_vector(rng, 4 * H * (I + H));
    const auto b = random_vector(rng, 4 * H);
    const auto x = random_vector(rng, T * I);
    const auto w_out = random_vector(rng, T * H);
    LstmCache cache;
    lstm_forward(W.data(), b.data(), I, H, x, reverse, cache);
    std::vector<double> dW(W.size(), 0.0), db(b.size(), 0.0), dx(x.size(), 0.0);
    lstm_backward(W.data(), cache, w_out, dW.data(), db.data(), dx);
    std::vector<double> flat = W, analytic = dW;
    flat.insert(flat.end(), b.begin(), b.end());
    flat.insert(flat.end(), x.begin(), x.end());
    analytic.insert(analytic.end(), db.begin(), db.end());
    analytic.insert(analytic.end(), dx.begin(), dx.end());
    auto f = [&](const std::vector<double> &p) {
      LstmCache c;
      std::vector<double> xx(p.begin() + W.size() + b.size(), p.end());
      lstm_forward(p.data(), p.data() + W.size(), I, H, xx, reverse, c);
      return std::inner_product(c.h.begin(), c.h.end(), w_out.begin(), 0.0);
    };
    worst = std::max(worst,
                     relative_error(analytic, numeric_gradient(f, flat, all_coords(flat.size()))));
  }
  return {"lstm", worst, 1e-4};
}

GradResult conv_gradient() {
  const int E = 3, k = 3, F = 4, T = 6;
  Rng rng(12);
  const auto W = random_vector(rng, F * k * E);
  const auto b = random_vector(rng, F, 0.1);
  const auto x = random_vector(rng, T * E);
  const auto w_out = random_vector(rng, F);
  ConvCache cache;
  conv1d_maxpool(W.data(), b.data(), E, k, F, x, cache);
  std::vector<double> dW(W.size(), 0.0), db(F, 0.0), dx(x.size(), 0.0);
  conv1d_maxpool_backward(W.data(), cache, w_out, dW.data(), db.data(), dx);
  std::vector<double> flat = W, analytic = dW;
  flat.insert(flat.end(), b.begin(), b.end());
  flat.insert(flat.end(), x.begin(), x.end());
  analytic.insert(analytic.end(), db.begin(), db.end());
  analytic.insert(analytic.end(), dx.begin(), dx.end());
  auto f = [&](const std::vector<double> &p) {
    ConvCache c;
    std::vector<double> xx(p.begin() + W.size() + F, p.end());
    conv1d_maxpool(p.data(), p.data() + W.size(), E, k, F, xx, c);
    return std::inner_product(c.out.begin(), c.out.end(), w_out.begin(), 0.0);
  };
  return {"conv1d", relative_error(analytic, numeric_gradient(f, flat, all_coords(flat.size()))),
          1e-4};
}

TokenVocab toy_vocab() { return TokenVocab({"le", "taux", "de", "créatinine", "depuis", "hier"}); }

GradResult intent_gradient() {
  double worst = 0.0;
  for (bool separate : {false, true}) {
    IntentConfig c;
    c.embed_dim = 4;
    c.kernel = 2;
    c.filters = 3;
    c.separate_encoders = separate;
    auto m = make_intent_classifier(LabelSchema::default_schema().intent_axes, toy_vocab(), c);
    Rng rng(2);
    for (double &v : m.params.values) v += rng.uniform(-0.3, 0.3);
    const auto ids = m.vocab.encode({"le", "taux", "de", "créatinine", "hier"});
    const std::vector<int> gold = {1, 2, 0, 3};
    std::vector<double> grad(m.params.size(), 0.0);
    intent_loss(m, ids, gold, &grad);
    auto f = [&](const std::vector<double> &p) {
      CnnIntentClassifier mm = m;
      mm.params.values = p;
      return intent_loss(mm, ids, gold, nullptr);
    };
    worst = std::max(worst, relative_error(grad, numeric_gradient(f, m.params.values,
                                                                  all_coords(grad.size()))));
  }
  return {"intent heads", worst, 1e-4};
}

GradResult tagger_gradient() {
  double worst = 0.0;
  for (auto mode : {OutputLayer::kSoftmax, OutputLayer::kCrf}) {
    TaggerConfig c;
    c.embed_dim = 4;
    c.hidden = 3;
    c.layers = 2;
    c.output = mode;
    auto m = make_tagger(LabelSchema::default_schema().slot_labels, toy_vocab(), c);
    Rng rng(1);
    for (double &v : m.params.values) v += rng.uniform(-0.3, 0.3);
    const auto ids = m.vocab.encode({"taux", "créatinine", "hier"});
    const std::vector<int> gold = {0, 1, 3};
    std::vector<double> grad(m.params.size(), 0.0);
    tagger_loss(m, ids, gold, &grad);
    auto f = [&](const std::vector<double> &p) {
      BiLstmTagger mm = m;
      mm.params.values = p;
      return tagger_loss(mm, ids, gold, nullptr);
    };
    worst = std::max(worst, relative_error(grad, numeric_gradient(f, m.params.values,
                                                                  all_coords(grad.size()))));
  }
  return {"bilstm tagger", worst, 1e-4};
}

void gradient_suite() {
  const auto t0 = Clock::now();
  std::vector<GradResult> results = {crf_gradient(),   skipgram_gradient(), lstm_gradient(),
                                     conv_gradient(),  intent_gradient(),   tagger_gradient()};
  const double secs = seconds_since(t0);
  bool ok = secs < 60.0;
  std::string detail;
  for (const auto &r : results) {
    ok = ok && r.error < r.limit;
    detail += r.name + " " + fmt("%.1e", r.error) + (r.error < r.limit ? "" : " (over limit)") + ", ";
  }
  report("gradient-suite", ok, detail + fmt("%.2f s", secs));
}

// ---------------------------------------------------------------------------

void generation_fidelity() {
  const auto t0 = Clock::now();
  const auto pack = read_pack(data_path("sample_pack.json"));
  const auto a = generate(pack, 10000, 99);
  const auto b = generate(pack, 10000, 99);
  size_t bio_bad = 0, lab_bad = 0;
  for (const auto &u : a.utterances) {
    try {
      validate_utterance(u, a.schema);
    } catch (const Error &) {
      ++bio_bad;
      continue;
    }
    if (!is_bio_valid(u.slot_tags)) ++bio_bad;
    const auto spans = spans_from_bio(u.slot_tags, a.schema);
    int labs = 0;
    bool match = false;
    const auto &mention = pack.lab_lexicon.at(std::stoul(u.provenance.mention_id));
    for (const auto &s : spans) {
      if (s.kind != "LAB") continue;
      ++labs;
      match = join({u.tokens.begin() + s.start, u.tokens.begin() + s.end}) == join(tokenize(mention));
    }
    if (labs != 1 || !match) ++lab_bad;
  }
  const bool same = serialize_corpus(a) == serialize_corpus(b);
  const double secs = seconds_since(t0);
  report("generation-fidelity",
         a.utterances.size() == 10000 && bio_bad == 0 && lab_bad == 0 && same && secs < 30.0,
         std::to_string(a.utterances.size()) + " utterances, " + std::to_string(bio_bad) +
             " invalid, " + std::to_string(lab_bad) + " LAB mismatches, runs " +
             (same ? "identical" : "differ") + ", " + fmt("%.2f s", secs));
}

// ---------------------------------------------------------------------------

TemplatePack synthetic_pack(size_t n_cores, size_t n_mentions) {
  const auto schema = LabelSchema::default_schema();
  TemplatePack p;
  for (size_t i = 0; i < n_cores; ++i) {
    CoreTemplate c;
    c.id = "c" + std::to_string(i);
    c.text = "question " + std::to_string(i) + " sur le <lab>";
    for (const char *axis : {kAxisResultType, kAxisInterpretation, kAxisTime}) {
      const auto &cats = schema.axis(axis).categories;
      c.intents[axis] = cats[i % cats.size()];
    }
    p.cores.push_back(c);
  }
  p.modifiers = {{"m0", "depuis <date|duration>", "date", {}, {}},
                 {"m1", "sur la période <range>", "range", {}, {}}};
  for (size_t i = 0; i < n_mentions; ++i) p.lab_lexicon.push_back("marqueur " + std::to_string(i));
  p.validate();
  return p;
}

void paper_counts() {
  const auto pack = synthetic_pack(223, 409);
  const auto [train, dev] = split_pack(pack, 170.0 / 223.0, 336.0 / 409.0, 11);
  const auto tr = generate(train, 16000, 1);
  const auto dv = generate(dev, 4000, 2);
  const auto plan = repeated_kfold(178, 5, 10, 3);
  bool folds_ok = plan.assignments.size() == 10;
  for (const auto &rep : plan.assignments) {
    std::vector<size_t> sizes;
    for (const auto &f : rep) sizes.push_back(f.size());
    folds_ok = folds_ok && sizes == std::vector<size_t>{36, 36, 36, 35, 35};
  }
  const bool ok = train.cores.size() == 170 && dev.cores.size() == 53 &&
                  train.lab_lexicon.size() == 336 && dev.lab_lexicon.size() == 73 &&
                  tr.utterances.size() == 16000 && dv.utterances.size() == 4000 && folds_ok;
  report("paper-counts", ok,
         "templates (" + std::to_string(train.cores.size()) + ", " +
             std::to_string(dev.cores.size()) + "), mentions (" +
             std::to_string(train.lab_lexicon.size()) + ", " +
             std::to_string(dev.lab_lexicon.size()) + "), utterances " +
             std::to_string(tr.utterances.size()) + "/" + std::to_string(dv.utterances.size()) +
             ", folds " + (folds_ok ? "{36,36,36,35,35} x 10" : "wrong"));
}

// ---------------------------------------------------------------------------

double dev_span_f1(const Corpus &dev, const std::function<std::vector<std::string>(const Utterance &)> &tagger) {
  std::vector<std::vector<SlotSpan>> gold, pred;
  for (const auto &u : dev.utterances) {
    gold.push_back(spans_from_bio(u.slot_tags, dev.schema));
    pred.push_back(spans_from_bio(tagger(u), dev.schema));
  }
  return span_f1(gold, pred).weighted_f1;
}

void end_to_end() {
  const auto t0 = Clock::now();
  const auto pack = read_pack(data_path("sample_pack.json"));
  auto mock = MockBackend::from_json(read_file(data_path("mock_table.json")));
  PivotConfig pc;
  pc.n_languages = 10;
  pc.language_pool = {"en", "de", "es", "it", "pt", "nl", "ru", "zh", "ja", "ar"};
  pc.seed = 5;
  ParaphraseReport rep;
  const auto augmented = paraphrase_pack(pack, pc, mock, &rep);
  const auto all = generate(augmented, 1250, 7);
  Corpus train, dev;
  train.schema = dev.schema = all.schema;
  train.utterances.assign(all.utterances.begin(), all.utterances.begin() + 1000);
  dev.utterances.assign(all.utterances.begin() + 1000, all.utterances.end());

  CrfTrainOptions co;
  co.epochs = 10;
  co.seed = 1;
  const auto crf = train_crf(train, dev, co);
  const double crf_f1 = dev_span_f1(dev, [&](const Utterance &u) { return predict(crf, u).tags; });

  TaggerConfig tc;
  tc.embed_dim = 50;
  tc.hidden = 64;
  tc.epochs = 10;
  tc.lr = 5e-3;
  tc.seed = 1;
  const auto tagger = train_tagger(train, dev, tc);
  const double lstm_f1 = dev_span_f1(dev, [&](const Utterance &u) { return tag(tagger, u.tokens); });

  IntentConfig ic;
  ic.embed_dim = 50;
  ic.epochs = 10;
  ic.lr = 5e-3;
  ic.seed = 1;
  const auto intents = train_intents(train, dev, ic);
  std::vector<std::map<std::string, std::string>> gold, pred;
  for (const auto &u : dev.utterances) {
    gold.push_back(u.intents);
    pred.push_back(classify(intents, u.tokens));
  }
  const auto is = intent_scores(gold, pred, dev.schema);
  double worst_axis = 1.0;
  std::string axes;
  for (const auto &[name, s] : is.axes) {
    worst_axis = std::min(worst_axis, s.weighted_f1);
    axes += " " + name + " " + fmt("%.3f", s.weighted_f1);
  }
  const double secs = seconds_since(t0);
  report("end-to-end",
         rep.added_cores > 0 && crf_f1 >= 0.9 && lstm_f1 >= 0.9 && worst_axis >= 0.9 && secs < 300.0,
         "+" + std::to_string(rep.added_cores) + " paraphrased cores; dev span F1 crf " +
             fmt("%.3f", crf_f1) + ", bilstm " + fmt("%.3f", lstm_f1) + "; intents" + axes +
             "; " + fmt("%.1f s", secs));
}

// ---------------------------------------------------------------------------

void metric_fixtures() {
  std::vector<std::string> failed;
  int checked = 0;
  auto check = [&](const char *what, double got, double want, double tol) {
    ++checked;
    if (!(std::abs(got - want) <= tol)) failed.push_back(std::string(what) + "=" + fmt("%.15g", got));
  };
  const auto tok = token_f1({{"B-LAB", "O", "O", "B-DATE"}}, {{"B-LAB", "O", "B-DATE", "O"}});
  check("token B-LAB", tok.find("B-LAB")->f1, 1.0, 1e-12);
  check("token O", tok.find("O")->f1, 0.5, 1e-12);
  check("token B-DATE", tok.find("B-DATE")->f1, 0.0, 1e-12);
  check("token weighted", tok.weighted_f1, 0.5, 1e-12);

  const std::vector<std::string> g = {"a", "a", "a", "b", "b", "c"};
  const std::vector<std::string> p = {"a", "a", "b", "b", "c", "c"};
  check("weighted 3-class", multiclass_f1(g, p).weighted_f1, 61.0 / 90.0, 1e-12);

  const auto sp = span_f1({{{0, 1, "LAB"}, {2, 4, "DATE"}}}, {{{0, 1, "LAB"}, {2, 3, "DATE"}}});
  check("span weighted", sp.weighted_f1, 0.5, 1e-12);

  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  const auto ci = ci95(v);
  check("ci mean", ci.mean, 50.5, 1e-12);
  check("ci lo", ci.lo, 3.475, 1e-12);
  check("ci hi", ci.hi, 97.525, 1e-12);

  check("overlap", vocab_overlap({"a", "b", "c"}, {"a", "b", "d"}), 2.0 / 3.0, 1e-12);
  const std::vector<int> lens = {int(tokenize("créatinine").size()),
                                 int(tokenize("protéine C réactive").size())};
  check("median length", mention_length_stats("LAB", lens).median_length, 2.0, 1e-12);
  check("perplexity", bigram_perplexity({{"a", "b"}}, {{"a", "b"}, {"a", "b"}}), 2.0, 1e-9);
  // Vocabulary {a, b, </s>, <unk>}: P(a|<s>) = 2/5, P(</s>|a) = 1/5.
  check("perplexity unseen", bigram_perplexity({{"a"}}, {{"a", "b"}}), std::sqrt(12.5), 1e-9);
  report("metric-fixtures", failed.empty(),
         failed.empty() ? std::to_string(checked) + " golden values matched"
                        : "mismatches: " + std::accumulate(failed.begin(), failed.end(), std::string(),
                                                           [](std::string a, const std::string &b) {
                                                             return a + b + " ";
                                                           }));
}

void subword_fixtures() {
  SubwordConfig cfg;
  const std::vector<std::string> want = {"<da", "dat", "ate", "te>", "<dat",
                                         "date", "ate>", "<date", "date>", "<date>"};
  const std::vector<uint32_t> want_idx = {602436, 986502, 99351, 95844, 1601168,
                                          1236057, 199819, 1485743, 1111589, 1054019};
  const auto got = char_ngrams("date", cfg);
  bool ok = got == want;
  for (size_t i = 0; ok && i < got.size(); ++i) ok = hash_ngram(got[i], cfg.buckets) == want_idx[i];
  ok = ok && fnv1a32("") == 0x811c9dc5u && fnv1a32("a") == 0xe40c292cu &&
       hash_ngram("créat", cfg.buckets) == 482869u && hash_ngram("<protéine>", cfg.buckets) == 5126u;
  report("subword-fixtures", ok,
         ok ? "10 n-grams of \"date\", 12 bucket indices and 2 raw hashes matched"
            : "n-gram or bucket mismatch");
}

// ---------------------------------------------------------------------------

// Clinical-note style lines in which every lab mention appears.
std::vector<std::vector<std::string>> note_corpus(const TemplatePack &pack, Rng &rng) {
  static const char *kPatterns[] = {
      "bilan biologique : %s à %d unités",
      "dosage de %s ce jour",
      "contrôle du %s prévu demain",
      "le %s est à %d ce matin",
      "résultat du %s : %d",
      "%s dans les normes",
      "hausse du %s depuis %d jours",
      "on note un %s à %d",
      "prélèvement pour %s envoyé au laboratoire",
      "surveillance du %s et de la %s",
  };
  std::vector<std::vector<std::string>> out;
  const size_t n = pack.lab_lexicon.size();
  for (size_t m = 0; m < n; ++m) {
    for (int r = 0; r < 25; ++r) {
      const char *pat = kPatterns[rng.index(std::size(kPatterns))];
      char buf[256];
      const std::string a = pack.lab_lexicon[m];
      const std::string b = pack.lab_lexicon[rng.index(n)];
      const int value = 1 + int(rng.index(200));
      if (std::string(pat).find("%s et de la %s") != std::string::npos) {
        std::snprintf(buf, sizeof(buf), pat, a.c_str(), b.c_str());
      } else if (std::string(pat).find("%d") != std::string::npos) {
        std::snprintf(buf, sizeof(buf), pat, a.c_str(), value);
      } else {
        std::snprintf(buf, sizeof(buf), pat, a.c_str());
      }
      out.push_back(tokenize(buf));
    }
  }
  return out;
}

std::set<std::string> mention_vocab(const std::vector<std::string> &mentions) {
  std::set<std::string> v;
  for (const auto &m : mentions) {
    for (auto &t : tokenize(m)) v.insert(std::move(t));
  }
  return v;
}

double lab_f1(const CrfModel &model, const Corpus &test, const EmbeddingModel *emb) {
  std::vector<std::vector<SlotSpan>> gold, pred;
  for (const auto &u : test.utterances) {
    gold.push_back(spans_from_bio(u.slot_tags, test.schema));
    pred.push_back(predict(model, u, emb).spans);
  }
  const auto s = span_f1(gold, pred);
  const auto *lab = s.find("LAB");
  return lab ? lab->f1 : 0.0;
}

void directional() {
  const auto t0 = Clock::now();
  const auto pack = read_pack(data_path("sample_pack.json"));
  int wins = 0;
  double worst_overlap = 0.0;
  std::string detail;
  for (uint64_t seed : {1, 2, 3}) {
    const auto [train_pack, test_pack] = split_pack(pack, 0.8, 0.5, seed);
    const double overlap =
        vocab_overlap(mention_vocab(test_pack.lab_lexicon), mention_vocab(train_pack.lab_lexicon));
    worst_overlap = std::max(worst_overlap, overlap);
    const auto train = generate(train_pack, 1000, seed * 10 + 1);
    const auto test = generate(test_pack, 500, seed * 10 + 2);

    Rng rng(seed * 10 + 3);
    SkipgramOptions so;
    so.dim = 50;
    so.window = 4;
    so.epochs = 5;
    so.seed = seed * 10 + 4;
    const auto emb = train_skipgram(note_corpus(pack, rng), so);

    CrfTrainOptions co;
    co.epochs = 10;
    co.seed = seed * 10 + 5;
    const Corpus no_dev;
    const auto plain = train_crf(train, no_dev, co);
    const auto dense = train_crf(train, no_dev, co, &emb);
    const double f_plain = lab_f1(plain, test, nullptr);
    const double f_dense = lab_f1(dense, test, &emb);
    if (f_dense > f_plain) ++wins;
    detail += "seed " + std::to_string(seed) + ": overlap " + fmt("%.3f", overlap) +
              ", LAB F1 " + fmt("%.3f", f_plain) + " -> " + fmt("%.3f", f_dense) + "; ";
  }
  const double secs = seconds_since(t0);
  report("directional", wins == 3 && worst_overlap < 0.3 && secs < 600.0,
         detail + std::to_string(wins) + "/3 seeds improved, " + fmt("%.1f s", secs));
}

}  // namespace

int main() {
  set_warning_sink(&quiet);
  criterion("oracle-equivalence", oracle_equivalence);
  criterion("gradient-suite", gradient_suite);
  criterion("generation-fidelity", generation_fidelity);
  criterion("paper-counts", paper_counts);
  criterion("end-to-end", end_to_end);
  criterion("metric-fixtures", metric_fixtures);
  criterion("subword-fixtures", subword_fixtures);
  criterion("directional", directional);
  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
