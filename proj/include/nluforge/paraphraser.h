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

#ifndef NLUFORGE_PARAPHRASER_H_
#define NLUFORGE_PARAPHRASER_H_

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "nluforge/generator.h"

namespace nluforge {

class TranslationBackend {
 public:
  virtual ~TranslationBackend() = default;

  // Throws an Error (kind kBackend) on failure.
  virtual std::string translate(const std::string &text, const std::string &source,
                                const std::string &target) = 0;

  // True when translate() may be called from several threads at once.
  virtual bool concurrent_safe() const { return false; }
};

class IdentityBackend : public TranslationBackend {
 public:
  std::string translate(const std::string &text, const std::string &,
                        const std::string &) override {
    return text;
  }
  bool concurrent_safe() const override { return true; }
};

// Offline stand-in for a translation service. The outbound leg is the
// identity; the return leg (target == home language) rewrites the text with
// a phrase table, scanning left to right and taking the longest phrase that
// matches at each position. Replaced text is not rescanned.
//
// Config JSON is either a flat {"phrase": "replacement"} table or
// {"default": {...}, "pivots": {"de": {...}}, "fail": ["xx"]} where pivot
// tables take precedence and "fail" lists pivots whose calls throw.
class MockBackend : public TranslationBackend {
 public:
  explicit MockBackend(std::map<std::string, std::string> table,
                       std::string home_lang = "fr");
  static MockBackend from_json(std::string_view json_text, std::string home_lang = "fr");

  void set_pivot_table(const std::string &pivot, std::map<std::string, std::string> table);
  void set_failing(const std::string &pivot) { failing_.insert(pivot); }

  std::string translate(const std::string &text, const std::string &source,
                        const std::string &target) override;
  bool concurrent_safe() const override { return true; }

 private:
  static std::string rewrite(const std::string &text,
                             const std::map<std::string, std::string> &table);

  std::map<std::string, std::string> default_table_;
  std::map<std::string, std::map<std::string, std::string>> pivot_tables_;
  std::set<std::string> failing_;
  std::string home_lang_;
};

struct HttpBackendConfig {
  std::string url;      // e.g. "http://localhost:5000/translate"
  std::string api_key;  // sent as "api_key" when non-empty
  int timeout_ms = 10000;

  // Reads NLU_FORGE_TRANSLATE_URL and NLU_FORGE_TRANSLATE_KEY.
  static HttpBackendConfig from_env();
};

// POST {"q", "source", "target"[, "api_key"]} -> {"translatedText"}.
// Any non-2xx status or malformed reply is a backend failure.
class HttpBackend : public TranslationBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  std::string translate(const std::string &text, const std::string &source,
                        const std::string &target) override;
  bool concurrent_safe() const override { return true; }

 private:
  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

struct MaskedText {
  std::string text;
  std::map<std::string, std::string> mask_map;  // sentinel -> placeholder
};

// "<...>" segments become XSLOT0, XSLOT1, ... in order of appearance.
MaskedText protect_slots(const std::string &template_text);
std::string unprotect_slots(const std::string &masked,
                            const std::map<std::string, std::string> &mask_map);

// Occurrences of `sentinel` not followed by another digit.
size_t count_sentinel(const std::string &text, const std::string &sentinel);

// Round trip source -> pivot -> source. Failures are rethrown as backend
// errors that name the pivot.
std::string pivot_translate(const std::string &text, const std::string &pivot_lang,
                            TranslationBackend &backend,
                            const std::string &source_lang = "fr");

// 60 language codes used as the default pivot pool.
const std::vector<std::string> &default_language_pool();

struct PivotConfig {
  size_t n_languages = 10;
  std::vector<std::string> language_pool = default_language_pool();
  uint64_t seed = 0;
  std::string source_lang = "fr";
  // Upper bound on concurrent backend calls (1 = sequential).
  size_t max_in_flight = 1;
};

struct ParaphraseReport {
  size_t calls = 0;
  size_t failures = 0;
  size_t rejected_sentinel = 0;
  size_t duplicates = 0;
  size_t added_cores = 0;
  size_t added_modifiers = 0;
  std::vector<std::string> warnings;
};

// Appends unique, placeholder-preserving paraphrases of every core and
// modifier. New templates inherit intents/time_constraint and record their
// pivot language and source id. Originals are kept in place.
TemplatePack paraphrase_pack(const TemplatePack &pack, const PivotConfig &config,
                             TranslationBackend &backend,
                             ParaphraseReport *report = nullptr);

}  // namespace nluforge

#endif  // NLUFORGE_PARAPHRASER_H_
