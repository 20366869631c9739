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

#include "cli.h"

#include <omp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nluforge/crf.h"
#include "nluforge/dataset.h"
#include "nluforge/embeddings.h"
#include "nluforge/error.h"
#include "nluforge/eval.h"
#include "nluforge/generator.h"
#include "nluforge/io.h"
#include "nluforge/neural.h"
#include "nluforge/paraphraser.h"

namespace nluforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::map<std::string, std::string> kDefaultPaths = {
    {"train_pack", "train_pack.json"},   {"dev_pack", "dev_pack.json"},
    {"train_corpus", "train.jsonl"},     {"dev_corpus", "dev.jsonl"},
    {"vectors", "vectors.vec"},          {"slot_model", "slots.model.json"},
    {"intent_model", "intents.model.json"}, {"report", "report.json"},
    {"stats", "stats.json"},
};
const std::set<std::string> kPathKeys = {
    "pack",       "schema",      "work_dir",     "train_pack", "dev_pack",
    "train_corpus", "dev_corpus", "test_corpus", "unlabeled",  "vectors",
    "slot_model", "intent_model", "report",      "stats",      "mock_table"};
const std::set<std::string> kSections = {"seed",      "threads",     "paths",      "generation",
                                         "paraphrase", "embedding",  "slot_model", "intent_model",
                                         "eval"};

std::ostream *g_warn_stream = nullptr;

void warning_to_stream(const std::string &message) {
  if (g_warn_stream != nullptr) *g_warn_stream << "warning: " << message << "\n";
}

// "a.b.c=value": value parsed as JSON when possible, else taken as a string.
void apply_override(json &config, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw UsageError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json *node = &config;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i])) (*node)[parts[i]] = json::object();
    node = &(*node)[parts[i]];
    if (!node->is_object()) throw UsageError("override '" + key + "' descends into a non-object");
  }
  (*node)[parts.back()] = value;
}

class Context {
 public:
  Context(const std::string &config_path, std::optional<uint64_t> seed, std::optional<int> threads,
          const std::vector<std::string> &overrides, std::istream &in, std::ostream &out,
          std::ostream &err)
      : in(in), out(out), err(err) {
    if (!file_exists(config_path)) throw UsageError("config file '" + config_path + "' not found");
    config = json::parse(read_file(config_path), nullptr, false);
    if (config.is_discarded() || !config.is_object()) {
      throw UsageError("config file '" + config_path + "' is not a JSON object");
    }
    for (const auto &o : overrides) apply_override(config, o);
    if (seed) config["seed"] = *seed;
    if (threads) config["threads"] = *threads;
    for (const auto &[key, _] : std::as_const(config).items()) {
      if (!kSections.count(key)) throw UsageError("unknown config section '" + key + "'");
    }
    const json paths = config.value("paths", json::object());
    for (const auto &[key, _] : paths.items()) {
      if (!kPathKeys.count(key)) throw UsageError("unknown path key 'paths." + key + "'");
    }
    if (!config.contains("seed") || !config["seed"].is_number_unsigned()) {
      throw UsageError("a non-negative integer seed is required (config \"seed\" or --seed)");
    }
    this->seed = config["seed"].get<uint64_t>();
    this->threads = config.value("threads", 1);
    if (this->threads < 1) throw UsageError("threads must be >= 1");
    omp_set_num_threads(this->threads);
    base_dir = fs::absolute(config_path).parent_path();
    config_hash = checksum_hex(config.dump());
  }

  json section(const std::string &name) const {
    json s = config.value(name, json::object());
    if (!s.is_object()) throw UsageError("config section '" + name + "' must be an object");
    return s;
  }

  std::string resolve(const std::string &p) const {
    fs::path path(p);
    return (path.is_absolute() ? path : base_dir / path).lexically_normal().string();
  }

  std::optional<std::string> maybe_path(const std::string &key) const {
    const json paths = section("paths");
    if (paths.contains(key)) return resolve(paths[key].get<std::string>());
    auto it = kDefaultPaths.find(key);
    if (it == kDefaultPaths.end()) return std::nullopt;
    return (fs::path(resolve(paths.value("work_dir", "work"))) / it->second).string();
  }

  std::string path(const std::string &key) const {
    auto p = maybe_path(key);
    if (!p) throw UsageError("config lacks paths." + key);
    return *p;
  }

  std::string test_corpus() const {
    auto p = maybe_path("test_corpus");
    return p ? *p : path("dev_corpus");
  }

  // Independent stream per pipeline stage.
  uint64_t stage_seed(const std::string &stage) const {
    Rng rng(seed ^ std::stoull(checksum_hex(stage), nullptr, 16));
    return rng.fork();
  }

  LabelSchema schema() const {
    auto p = maybe_path("schema");
    return p ? read_schema(*p) : LabelSchema::default_schema();
  }

  // Reproduction record next to an output; no timestamps here.
  void manifest(const std::string &command, const std::string &output,
                const std::vector<std::string> &inputs) const {
    json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["config"] = config;
    j["seed"] = seed;
    j["threads"] = threads;
    json in_sums = json::object();
    for (const auto &p : inputs) in_sums[p] = file_checksum(p);
    j["inputs"] = in_sums;
    j["output"] = {{"path", output}, {"checksum", file_checksum(output)}};
    write_file_atomic(output + ".manifest.json", j.dump(2) + "\n");
  }

  void log(const std::string &command, const std::string &message) const {
    const fs::path dir = resolve(section("paths").value("work_dir", "work"));
    fs::create_directories(dir);
    std::ofstream f(dir / "nlu-forge.log", std::ios::app);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    f << stamp << " " << command << " " << message << "\n";
  }

  json config;
  uint64_t seed = 0;
  int threads = 1;
  std::string config_hash;
  fs::path base_dir;
  std::istream &in;
  std::ostream &out;
  std::ostream &err;
};

Corpus load_corpus(const Context &ctx, const std::string &path, const char *what) {
  if (!file_exists(path)) {
    throw DataError(std::string("missing ") + what + " '" + path + "' (run generate first)");
  }
  return read_corpus(path, ctx.schema());
}

SkipgramOptions embedding_options(const Context &ctx) {
  const json e = ctx.section("embedding");
  SkipgramOptions o;
  o.dim = e.value("dim", 50);
  o.window = e.value("window", 5);
  o.negatives = e.value("negatives", 5);
  o.epochs = e.value("epochs", 5);
  o.lr = e.value("lr", 0.05);
  o.min_count = e.value("min_count", 1);
  const json s = e.value("subword", json::object());
  o.subword.n_min = s.value("n_min", 3);
  o.subword.n_max = s.value("n_max", 6);
  o.subword.buckets = s.value("buckets", 1u << 21);
  o.subword.enabled = s.value("enabled", true);
  o.seed = ctx.stage_seed("embed");
  o.threads = ctx.threads;
  return o;
}

std::shared_ptr<EmbeddingModel> load_embeddings(const std::string &path) {
  if (!file_exists(path)) throw DataError("missing vectors '" + path + "' (run embed first)");
  return std::make_shared<EmbeddingModel>(load_vectors(path));
}

// ---------------------------------------------------------------------------

int cmd_generate(const Context &ctx) {
  const json g = ctx.section("generation");
  const size_t train_count = g.value("train_count", 1000);
  const size_t dev_count = g.value("dev_count", 250);
  GenerateOptions opts;
  opts.modifier_prob = g.value("modifier_prob", 0.5);
  const LabelSchema schema = ctx.schema();

  TemplatePack train_pack, dev_pack;
  std::vector<std::string> inputs;
  if (g.value("use_paraphrases", false)) {
    for (const char *key : {"train_pack", "dev_pack"}) {
      const auto p = ctx.path(key);
      if (!file_exists(p)) {
        throw DataError("missing paraphrased pack '" + p + "' (run paraphrase first)");
      }
      inputs.push_back(p);
    }
    train_pack = read_pack(inputs[0], schema);
    dev_pack = read_pack(inputs[1], schema);
  } else {
    inputs.push_back(ctx.path("pack"));
    const TemplatePack base = read_pack(inputs[0], schema);
    if (g.value("split", true)) {
      std::tie(train_pack, dev_pack) =
          split_pack(base, g.value("template_ratio", 0.8), g.value("mention_ratio", 0.8),
                     ctx.stage_seed("split"));
    } else {
      train_pack = dev_pack = base;
    }
  }

  const std::string train_path = ctx.path("train_corpus");
  const std::string dev_path = ctx.path("dev_corpus");
  Corpus train, dev;
  if (g.value("split", true)) {
    opts.id_prefix = "train";
    train = generate(train_pack, train_count, ctx.stage_seed("generate-train"), opts);
    opts.id_prefix = "dev";
    if (dev_count > 0) dev = generate(dev_pack, dev_count, ctx.stage_seed("generate-dev"), opts);
  } else {
    // One draw cut in two, so no utterance lands in both corpora.
    Corpus all = generate(train_pack, train_count + dev_count, ctx.stage_seed("generate"), opts);
    train.schema = dev.schema = all.schema;
    train.utterances.assign(all.utterances.begin(), all.utterances.begin() + train_count);
    dev.utterances.assign(all.utterances.begin() + train_count, all.utterances.end());
  }
  write_corpus(train, train_path);
  ctx.manifest("generate", train_path, inputs);
  ctx.out << "wrote " << train.utterances.size() << " utterances to " << train_path << "\n";
  if (dev_count > 0) {
    write_corpus(dev, dev_path);
    ctx.manifest("generate", dev_path, inputs);
    ctx.out << "wrote " << dev.utterances.size() << " utterances to " << dev_path << "\n";
  }
  return kOk;
}

std::unique_ptr<TranslationBackend> make_backend(const Context &ctx, const json &p,
                                                 std::vector<std::string> &inputs) {
  const std::string kind = p.value("backend", "mock");
  if (kind == "identity") return std::make_unique<IdentityBackend>();
  if (kind == "mock") {
    const auto table = ctx.maybe_path("mock_table");
    if (!table) throw UsageError("mock backend needs paths.mock_table");
    inputs.push_back(*table);
    return std::make_unique<MockBackend>(MockBackend::from_json(read_file(*table)));
  }
  if (kind == "http") {
    HttpBackendConfig hc = HttpBackendConfig::from_env();
    if (hc.url.empty()) throw UsageError("http backend needs NLU_FORGE_TRANSLATE_URL");
    hc.timeout_ms = p.value("timeout_ms", hc.timeout_ms);
    return std::make_unique<HttpBackend>(hc);
  }
  throw UsageError("unknown translation backend '" + kind + "' (mock, http, identity)");
}

int cmd_paraphrase(const Context &ctx) {
  const json g = ctx.section("generation");
  const json p = ctx.section("paraphrase");
  std::vector<std::string> inputs = {ctx.path("pack")};
  const TemplatePack base = read_pack(inputs[0], ctx.schema());
  auto backend = make_backend(ctx, p, inputs);

  PivotConfig pc;
  pc.n_languages = p.value("n_languages", 10);
  if (p.contains("pool")) pc.language_pool = p["pool"].get<std::vector<std::string>>();
  pc.source_lang = p.value("source_lang", "fr");
  pc.max_in_flight = p.value("max_in_flight", size_t(ctx.threads));

  auto run = [&](const TemplatePack &pack, const std::string &key) {
    pc.seed = ctx.stage_seed("paraphrase-" + key);
    ParaphraseReport report;
    const TemplatePack out = paraphrase_pack(pack, pc, *backend, &report);
    const std::string path = ctx.path(key);
    write_file_atomic(path, pack_to_json(out));
    ctx.manifest("paraphrase", path, inputs);
    ctx.out << key << ": " << report.calls << " calls, " << report.failures << " failures, "
            << report.rejected_sentinel << " rejected, " << report.duplicates << " duplicates, +"
            << report.added_cores << " cores, +" << report.added_modifiers << " modifiers -> "
            << path << "\n";
  };
  if (g.value("split", true)) {
    const auto [train, dev] = split_pack(base, g.value("template_ratio", 0.8),
                                         g.value("mention_ratio", 0.8), ctx.stage_seed("split"));
    run(train, "train_pack");
    run(dev, "dev_pack");
  } else {
    run(base, "train_pack");
    run(base, "dev_pack");
  }
  return kOk;
}

int cmd_embed(const Context &ctx) {
  const SkipgramOptions opts = embedding_options(ctx);
  std::vector<std::vector<std::string>> sentences;
  std::string input;
  if (auto unlabeled = ctx.maybe_path("unlabeled")) {
    input = *unlabeled;
    if (!file_exists(input)) throw DataError("missing unlabeled corpus '" + input + "'");
    std::istringstream lines(read_file(input));
    std::string line;
    while (std::getline(lines, line)) {
      auto toks = tokenize(line);
      if (!toks.empty()) sentences.push_back(std::move(toks));
    }
  } else {
    input = ctx.path("train_corpus");
    for (auto &u : load_corpus(ctx, input, "training corpus").utterances) {
      sentences.push_back(std::move(u.tokens));
    }
  }
  const EmbeddingModel model = train_skipgram(sentences, opts);
  const std::string path = ctx.path("vectors");
  save_vectors(model, path);
  ctx.manifest("embed", path, {input});
  ctx.out << "vocabulary " << model.vocab.size() << ", dim " << model.dim << ", "
          << model.bucket_rows.size() << " subword buckets\n";
  for (size_t e = 0; e < model.epoch_losses.size(); ++e) {
    ctx.out << "epoch " << e + 1 << " loss " << model.epoch_losses[e] << "\n";
  }
  ctx.out << "wrote " << path << "\n";
  return kOk;
}

void print_curve(const Context &ctx, const TrainCurve &c) {
  for (size_t e = 0; e < c.train_loss.size(); ++e) {
    ctx.out << "epoch " << e + 1 << " loss " << c.train_loss[e];
    if (e < c.dev_score.size()) ctx.out << " dev " << c.dev_score[e];
    ctx.out << "\n";
  }
  ctx.out << "best epoch " << c.best_epoch + 1 << "\n";
}

// Samples `search` grid points, trains each, then retrains and returns the
// best one.
template <typename Train>
auto grid_search(const Context &ctx, int search, Train train) {
  const auto points = sample_grid(ctx.stage_seed("search"), search);
  const auto results = random_search(points, ctx.stage_seed("search-seeds"), ctx.threads,
                                     [&](const GridPoint &p, uint64_t seed) {
                                       TrainCurve c;
                                       train(p, seed, &c);
                                       return c.dev_score.empty() ? 0.0
                                                                  : c.dev_score[c.best_epoch];
                                     });
  size_t best = 0;
  for (size_t i = 0; i < results.size(); ++i) {
    const auto &r = results[i];
    ctx.out << "point " << i + 1 << ": dim " << r.point.embed_dim << " hidden " << r.point.hidden
            << " dropout " << r.point.dropout << " kernel " << r.point.kernel << " filters "
            << r.point.filters << " -> dev " << r.dev_score << "\n";
    if (r.dev_score > results[best].dev_score) best = i;
  }
  ctx.out << "best point " << best + 1 << "\n";
  TrainCurve c;
  auto model = train(results[best].point, results[best].seed, &c);
  print_curve(ctx, c);
  return model;
}

int cmd_train_slots(const Context &ctx) {
  const json s = ctx.section("slot_model");
  const std::string type = s.value("type", "crf");
  std::vector<std::string> inputs = {ctx.path("train_corpus"), ctx.path("dev_corpus")};
  const Corpus train = load_corpus(ctx, inputs[0], "training corpus");
  const Corpus dev = load_corpus(ctx, inputs[1], "dev corpus");
  std::shared_ptr<EmbeddingModel> emb;
  if (s.value("use_embeddings", false)) {
    inputs.push_back(ctx.path("vectors"));
    emb = load_embeddings(inputs.back());
  }
  const std::string path = ctx.path("slot_model");
  if (type == "crf") {
    CrfTrainOptions o;
    o.lr = s.value("lr", o.lr);
    o.epochs = s.value("epochs", o.epochs);
    o.batch_size = s.value("batch_size", o.batch_size);
    o.l2 = s.value("l2", o.l2);
    o.patience = s.value("patience", 0);
    o.seed = ctx.stage_seed("train-slots");
    CrfTrainLog log;
    CrfModel model = train_crf(train, dev, o, emb.get(), &log);
    if (emb) model.embedding = EmbeddingRef{inputs.back(), file_checksum(inputs.back())};
    for (size_t e = 0; e < log.train_loss.size(); ++e) {
      ctx.out << "epoch " << e + 1 << " loss " << log.train_loss[e];
      if (e < log.dev_f1.size()) ctx.out << " dev " << log.dev_f1[e];
      ctx.out << "\n";
    }
    ctx.out << "best epoch " << log.best_epoch + 1 << "\n";
    save_crf(model, path);
  } else if (type == "bilstm" || type == "bilstm-crf") {
    TaggerConfig c;
    c.embed_dim = s.value("embed_dim", 50);
    c.hidden = s.value("hidden", 64);
    c.layers = s.value("layers", 1);
    c.dropout = s.value("dropout", 0.2);
    c.output = type == "bilstm-crf" ? OutputLayer::kCrf : OutputLayer::kSoftmax;
    c.freeze_embeddings = s.value("freeze_embeddings", false);
    c.epochs = s.value("epochs", 10);
    c.batch_size = s.value("batch_size", 16);
    c.lr = s.value("lr", 5e-3);
    c.seed = ctx.stage_seed("train-slots");
    BiLstmTagger model;
    auto train_point = [&](const GridPoint &p, uint64_t seed, TrainCurve *curve) {
      TaggerConfig pc = c;
      pc.embed_dim = p.embed_dim;
      pc.hidden = p.hidden;
      pc.dropout = p.dropout;
      pc.seed = seed;
      return train_tagger(train, dev, pc, emb.get(), curve);
    };
    if (const int search = s.value("search", 0); search > 0) {
      model = grid_search(ctx, search, train_point);
    } else {
      TrainCurve curve;
      model = train_tagger(train, dev, c, emb.get(), &curve);
      print_curve(ctx, curve);
    }
    save_tagger(model, path);
  } else {
    throw UsageError("unknown slot model type '" + type + "' (crf, bilstm, bilstm-crf)");
  }
  ctx.manifest("train-slots", path, inputs);
  ctx.out << "wrote " << path << "\n";
  return kOk;
}

int cmd_train_intents(const Context &ctx) {
  const json s = ctx.section("intent_model");
  std::vector<std::string> inputs = {ctx.path("train_corpus"), ctx.path("dev_corpus")};
  const Corpus train = load_corpus(ctx, inputs[0], "training corpus");
  const Corpus dev = load_corpus(ctx, inputs[1], "dev corpus");
  std::shared_ptr<EmbeddingModel> emb;
  if (s.value("use_embeddings", false)) {
    inputs.push_back(ctx.path("vectors"));
    emb = load_embeddings(inputs.back());
  }
  IntentConfig c;
  c.embed_dim = s.value("embed_dim", 50);
  c.kernel = s.value("kernel", 3);
  c.filters = s.value("filters", 100);
  c.dropout = s.value("dropout", 0.5);
  c.separate_encoders = s.value("separate_encoders", false);
  c.freeze_embeddings = s.value("freeze_embeddings", false);
  c.epochs = s.value("epochs", 10);
  c.batch_size = s.value("batch_size", 16);
  c.lr = s.value("lr", 5e-3);
  c.seed = ctx.stage_seed("train-intents");
  CnnIntentClassifier model;
  if (const int search = s.value("search", 0); search > 0) {
    model = grid_search(ctx, search, [&](const GridPoint &p, uint64_t seed, TrainCurve *curve) {
      IntentConfig pc = c;
      pc.embed_dim = p.embed_dim;
      pc.kernel = p.kernel;
      pc.filters = p.filters;
      pc.dropout = p.dropout;
      pc.seed = seed;
      return train_intents(train, dev, pc, emb.get(), curve);
    });
  } else {
    TrainCurve curve;
    model = train_intents(train, dev, c, emb.get(), &curve);
    print_curve(ctx, curve);
  }
  const std::string path = ctx.path("intent_model");
  save_intents(model, path);
  ctx.manifest("train-intents", path, inputs);
  ctx.out << "wrote " << path << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// Loaded models for evaluate / predict.
// ---------------------------------------------------------------------------

struct Models {
  std::function<std::vector<std::string>(const std::vector<std::string> &)> tag;
  std::function<std::map<std::string, std::string>(const std::vector<std::string> &)> classify;
  std::vector<std::string> inputs;
};

Models load_models(const Context &ctx, const LabelSchema &schema) {
  Models m;
  const std::string slot_path = ctx.path("slot_model");
  if (!file_exists(slot_path)) {
    throw DataError("missing model '" + slot_path + "' (run train-slots first)");
  }
  m.inputs.push_back(slot_path);
  const std::string kind = model_kind(slot_path);
  if (kind == "crf") {
    auto crf = std::make_shared<CrfModel>(load_crf(slot_path));
    if (crf->labels != schema.slot_labels) {
      throw DataError("slot model labels do not match the label schema");
    }
    std::shared_ptr<EmbeddingModel> emb;
    if (crf->embedding) {
      emb = load_embeddings(crf->embedding->path);
      if (file_checksum(crf->embedding->path) != crf->embedding->checksum) {
        throw DataError("vectors '" + crf->embedding->path +
                        "' changed since the slot model was trained");
      }
      m.inputs.push_back(crf->embedding->path);
    }
    m.tag = [crf, emb](const std::vector<std::string> &tokens) {
      return predict(*crf, tokens, emb.get()).tags;
    };
  } else if (kind == "bilstm") {
    auto tagger = std::make_shared<BiLstmTagger>(load_tagger(slot_path));
    if (tagger->schema_checksum != schema.checksum()) {
      throw DataError("slot model was trained with a different label schema");
    }
    m.tag = [tagger](const std::vector<std::string> &tokens) { return tag(*tagger, tokens); };
  } else {
    throw DataError("'" + slot_path + "' is not a slot model");
  }

  const std::string intent_path = ctx.path("intent_model");
  if (file_exists(intent_path)) {
    auto cnn = std::make_shared<CnnIntentClassifier>(load_intents(intent_path));
    if (cnn->schema_checksum != schema.checksum()) {
      throw DataError("intent model was trained with a different label schema");
    }
    m.inputs.push_back(intent_path);
    m.classify = [cnn](const std::vector<std::string> &tokens) { return classify(*cnn, tokens); };
  } else {
    warn("no intent model at '" + intent_path + "'; intents are skipped");
  }
  return m;
}

int cmd_evaluate(const Context &ctx) {
  const std::string test_path = ctx.test_corpus();
  const Corpus test = load_corpus(ctx, test_path, "test corpus");
  const Models models = load_models(ctx, test.schema);
  const json e = ctx.section("eval");
  const FoldPlan plan = repeated_kfold(test.utterances.size(), e.value("k", 5),
                                       e.value("repetitions", 10), ctx.stage_seed("evaluate"));
  SlotPredictor slots = [&](const Utterance &u) { return models.tag(u.tokens); };
  IntentPredictor intents;
  if (models.classify) intents = [&](const Utterance &u) { return models.classify(u.tokens); };
  const EvalReport report = evaluate(test, plan, slots, intents);
  const std::string path = ctx.path("report");
  write_file_atomic(path, report_to_json(report));
  std::vector<std::string> inputs = {test_path};
  inputs.insert(inputs.end(), models.inputs.begin(), models.inputs.end());
  ctx.manifest("evaluate", path, inputs);
  ctx.out << report_to_table(report) << "wrote " << path << "\n";
  return kOk;
}

int cmd_stats(const Context &ctx) {
  const std::string train_path = ctx.path("train_corpus");
  const std::string test_path = ctx.test_corpus();
  const Corpus train = load_corpus(ctx, train_path, "training corpus");
  const Corpus test = load_corpus(ctx, test_path, "test corpus");
  json j;
  j["train"] = json::parse(stats_to_json(corpus_stats(train)));
  j["test"] = json::parse(stats_to_json(corpus_stats(test, &train)));
  const std::string text = j.dump(2) + "\n";
  const std::string path = ctx.path("stats");
  write_file_atomic(path, text);
  ctx.manifest("stats", path, {train_path, test_path});
  ctx.out << text;
  return kOk;
}

int cmd_predict(const Context &ctx, const std::string &input, const std::string &output) {
  const Models models = load_models(ctx, ctx.schema());
  std::string text;
  if (input.empty() || input == "-") {
    std::stringstream ss;
    ss << ctx.in.rdbuf();
    text = ss.str();
  } else {
    text = read_file(input);
  }
  std::ostringstream results;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    const auto tags = models.tag(tokens);
    json spans = json::array();
    for (const auto &s : spans_from_bio(tags)) {
      spans.push_back({{"start", s.start},
                       {"end", s.end},
                       {"kind", s.kind},
                       {"text", join({tokens.begin() + s.start, tokens.begin() + s.end})}});
    }
    json j = {{"text", line}, {"tokens", tokens}, {"tags", tags}, {"spans", spans}};
    if (models.classify) j["intents"] = models.classify(tokens);
    results << j.dump() << "\n";
  }
  if (output.empty() || output == "-") {
    ctx.out << results.str();
  } else {
    write_file_atomic(output, results.str());
  }
  return kOk;
}

int report_error(std::ostream &err, const char *kind, const std::string &message, int code) {
  std::string flat = message;
  for (char &c : flat) {
    if (c == '\n') c = ' ';
  }
  err << "error[" << kind << "]: " << flat << "\n";
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::istream &in, std::ostream &out,
            std::ostream &err) {
  CLI::App app{"Synthetic clinical NLU corpora, taggers and classifiers", "nlu-forge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "nlu-forge 1.0.0");

  std::string config_path, input, output;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::vector<std::string> overrides, positional;

  struct Command {
    const char *name;
    const char *help;
  };
  const Command commands[] = {
      {"generate", "Generate train/dev corpora from the template pack"},
      {"paraphrase", "Extend the pack with pivot-translation paraphrases"},
      {"embed", "Train skip-gram subword embeddings"},
      {"train-slots", "Train the slot tagger (crf, bilstm, bilstm-crf)"},
      {"train-intents", "Train the convolutional intent classifier"},
      {"evaluate", "Score trained models on the test corpus with repeated k-fold intervals"},
      {"stats", "Corpus statistics of the train and test corpora"},
      {"predict", "Tag and classify utterances, one per line, as JSON lines"},
  };
  for (const auto &c : commands) {
    CLI::App *sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "Project config (JSON)")->required();
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--threads", threads, "Worker threads; 1 is fully deterministic");
    sub->add_option("--set", overrides, "Config override key.path=value")->take_all();
    sub->add_option("overrides", positional, "Config overrides key.path=value");
    if (std::string(c.name) == "predict") {
      sub->add_option("--input", input, "Input file, one utterance per line (default stdin)");
      sub->add_option("--output", output, "Output JSONL file (default stdout)");
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    if (!app.get_subcommands().empty()) out << app.get_subcommands().front()->help();
    return kOk;
  } catch (const CLI::CallForVersion &e) {
    out << e.what() << "\n";
    return kOk;
  } catch (const CLI::ParseError &e) {
    return report_error(err, "usage", e.what(), kUsage);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  overrides.insert(overrides.end(), positional.begin(), positional.end());

  std::ostream *previous = g_warn_stream;
  g_warn_stream = &err;
  set_warning_sink(&warning_to_stream);
  struct Restore {
    std::ostream *prev;
    ~Restore() {
      g_warn_stream = prev;
      set_warning_sink(nullptr);
    }
  } restore{previous};

  try {
    const Context ctx(config_path, seed, threads, overrides, in, out, err);
    ctx.log(command, "start seed=" + std::to_string(ctx.seed));
    int code = kOk;
    if (command == "generate") code = cmd_generate(ctx);
    else if (command == "paraphrase") code = cmd_paraphrase(ctx);
    else if (command == "embed") code = cmd_embed(ctx);
    else if (command == "train-slots") code = cmd_train_slots(ctx);
    else if (command == "train-intents") code = cmd_train_intents(ctx);
    else if (command == "evaluate") code = cmd_evaluate(ctx);
    else if (command == "stats") code = cmd_stats(ctx);
    else if (command == "predict") code = cmd_predict(ctx, input, output);
    ctx.log(command, "done");
    return code;
  } catch (const Error &e) {
    switch (e.kind()) {
      case ErrorKind::kUsage:
        return report_error(err, "usage", e.what(), kUsage);
      case ErrorKind::kData:
        return report_error(err, "data", e.what(), kData);
      case ErrorKind::kBackend:
        return report_error(err, "io", e.what(), kBackend);
    }
  } catch (const json::exception &e) {
    return report_error(err, "usage", std::string("config: ") + e.what(), kUsage);
  } catch (const fs::filesystem_error &e) {
    return report_error(err, "io", e.what(), kBackend);
  } catch (const std::exception &e) {
    return report_error(err, "io", e.what(), kBackend);
  }
  return kBackend;
}

}  // namespace nluforge::cli
