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

#include <bit>
#include <cstring>
#include <filesystem>

#include "json.hpp"
#include "nluforge/error.h"
#include "nluforge/io.h"
#include "nluforge/neural.h"

namespace nluforge {

using nlohmann::json;

namespace {

constexpr const char *kFormat = "nluforge-neural/1";

uint64_t to_little(uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
}

std::string encode_f64(const std::vector<double> &values) {
  std::string out(values.size() * 8, '\0');
  for (size_t i = 0; i < values.size(); ++i) {
    const uint64_t bits = to_little(std::bit_cast<uint64_t>(values[i]));
    std::memcpy(out.data() + i * 8, &bits, 8);
  }
  return out;
}

std::vector<double> decode_f64(const std::string &bytes) {
  if (bytes.size() % 8 != 0) throw DataError("parameter file size is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (size_t i = 0; i < out.size(); ++i) {
    uint64_t bits;
    std::memcpy(&bits, bytes.data() + i * 8, 8);
    out[i] = std::bit_cast<double>(to_little(bits));
  }
  return out;
}

json slots_json(const ParamStore &p) {
  json slots = json::array();
  for (const auto &s : p.slots) {
    slots.push_back({{"name", s.name}, {"shape", s.shape}, {"offset", s.offset}});
  }
  return slots;
}

void save_manifest(json manifest, const ParamStore &params, const std::string &path) {
  const std::string bin = path + ".bin";
  manifest["format"] = kFormat;
  manifest["parameters"] = {{"file", std::filesystem::path(bin).filename().string()},
                            {"dtype", "f64"},
                            {"byte_order", "little"},
                            {"count", params.size()},
                            {"checksum", checksum_hex(encode_f64(params.values))},
                            {"slots", slots_json(params)}};
  write_file_atomic(bin, encode_f64(params.values));
  write_file_atomic(path, manifest.dump(2) + "\n");
}

json read_manifest(const std::string &path, const std::string &kind) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception &e) {
    throw DataError(path + ": malformed model manifest: " + e.what());
  }
  if (j.value("format", "") != kFormat || j.value("kind", "") != kind) {
    throw DataError(path + ": not a " + kind + " model manifest");
  }
  return j;
}

// Checks the rebuilt layout against the manifest and fills in the values.
void load_params(const json &manifest, const std::string &path, ParamStore &params) {
  const auto &p = manifest.at("parameters");
  const auto &slots = p.at("slots");
  if (slots.size() != params.slots.size()) throw DataError(path + ": parameter layout mismatch");
  for (size_t i = 0; i < slots.size(); ++i) {
    const auto &s = params.slots[i];
    if (slots[i].at("name").get<std::string>() != s.name ||
        slots[i].at("shape").get<std::vector<int>>() != s.shape ||
        slots[i].at("offset").get<size_t>() != s.offset) {
      throw DataError(path + ": parameter '" + s.name + "' does not match the configuration");
    }
  }
  const auto bin = (std::filesystem::path(path).parent_path() / p.at("file").get<std::string>());
  const std::string bytes = read_file(bin.string());
  if (p.contains("checksum") && p["checksum"].get<std::string>() != checksum_hex(bytes)) {
    throw DataError(bin.string() + ": checksum mismatch");
  }
  auto values = decode_f64(bytes);
  if (values.size() != params.size() || p.at("count").get<size_t>() != values.size()) {
    throw DataError(bin.string() + ": expected " + std::to_string(params.size()) +
                    " parameters, found " + std::to_string(values.size()));
  }
  params.values = std::move(values);
}

}  // namespace

void save_tagger(const BiLstmTagger &m, const std::string &path) {
  const auto &c = m.config;
  json j;
  j["kind"] = "bilstm";
  j["config"] = {{"embed_dim", c.embed_dim},
                 {"hidden", c.hidden},
                 {"layers", c.layers},
                 {"dropout", c.dropout},
                 {"output", c.output == OutputLayer::kCrf ? "crf" : "softmax"},
                 {"freeze_embeddings", c.freeze_embeddings},
                 {"epochs", c.epochs},
                 {"batch_size", c.batch_size},
                 {"lr", c.lr},
                 {"seed", c.seed}};
  j["labels"] = m.labels;
  j["vocab"] = m.vocab.words();
  j["schema_checksum"] = m.schema_checksum;
  save_manifest(j, m.params, path);
}

BiLstmTagger load_tagger(const std::string &path) {
  const json j = read_manifest(path, "bilstm");
  try {
    const auto &jc = j.at("config");
    TaggerConfig c;
    c.embed_dim = jc.at("embed_dim");
    c.hidden = jc.at("hidden");
    c.layers = jc.at("layers");
    c.dropout = jc.at("dropout");
    c.output = jc.at("output").get<std::string>() == "crf" ? OutputLayer::kCrf : OutputLayer::kSoftmax;
    c.freeze_embeddings = jc.at("freeze_embeddings");
    c.epochs = jc.at("epochs");
    c.batch_size = jc.at("batch_size");
    c.lr = jc.at("lr");
    c.seed = jc.at("seed");
    BiLstmTagger m = make_tagger(j.at("labels").get<std::vector<std::string>>(),
                                 TokenVocab(j.at("vocab").get<std::vector<std::string>>()), c);
    m.schema_checksum = j.value("schema_checksum", "");
    load_params(j, path, m.params);
    return m;
  } catch (const json::exception &e) {
    throw DataError(path + ": malformed tagger manifest: " + e.what());
  }
}

void save_intents(const CnnIntentClassifier &m, const std::string &path) {
  const auto &c = m.config;
  json j;
  j["kind"] = "cnn-intent";
  j["config"] = {{"embed_dim", c.embed_dim},
                 {"kernel", c.kernel},
                 {"filters", c.filters},
                 {"dropout", c.dropout},
                 {"separate_encoders", c.separate_encoders},
                 {"freeze_embeddings", c.freeze_embeddings},
                 {"epochs", c.epochs},
                 {"batch_size", c.batch_size},
                 {"lr", c.lr},
                 {"seed", c.seed}};
  json axes = json::array();
  for (const auto &a : m.axes) axes.push_back({{"name", a.name}, {"categories", a.categories}});
  j["axes"] = axes;
  j["vocab"] = m.vocab.words();
  j["schema_checksum"] = m.schema_checksum;
  save_manifest(j, m.params, path);
}

CnnIntentClassifier load_intents(const std::string &path) {
  const json j = read_manifest(path, "cnn-intent");
  try {
    const auto &jc = j.at("config");
    IntentConfig c;
    c.embed_dim = jc.at("embed_dim");
    c.kernel = jc.at("kernel");
    c.filters = jc.at("filters");
    c.dropout = jc.at("dropout");
    c.separate_encoders = jc.at("separate_encoders");
    c.freeze_embeddings = jc.at("freeze_embeddings");
    c.epochs = jc.at("epochs");
    c.batch_size = jc.at("batch_size");
    c.lr = jc.at("lr");
    c.seed = jc.at("seed");
    std::vector<IntentAxis> axes;
    for (const auto &a : j.at("axes")) {
      axes.push_back({a.at("name").get<std::string>(),
                      a.at("categories").get<std::vector<std::string>>()});
    }
    CnnIntentClassifier m = make_intent_classifier(
        std::move(axes), TokenVocab(j.at("vocab").get<std::vector<std::string>>()), c);
    m.schema_checksum = j.value("schema_checksum", "");
    load_params(j, path, m.params);
    return m;
  } catch (const json::exception &e) {
    throw DataError(path + ": malformed intent manifest: " + e.what());
  }
}

std::string model_kind(const std::string &path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception &e) {
    throw DataError(path + ": not a model file: " + e.what());
  }
  const std::string format = j.is_object() ? j.value("format", "") : "";
  if (format == "nluforge-crf/1") return "crf";
  if (format == kFormat) return j.value("kind", "");
  throw DataError(path + ": unrecognized model format");
}

}  // namespace nluforge
