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

#include "nluforge/paraphraser.h"

#include <algorithm>
#include <atomic>
#include <optional>
#include <thread>

#include "json.hpp"
#include "nluforge/error.h"

namespace nluforge {

using nlohmann::json;

MockBackend::MockBackend(std::map<std::string, std::string> table, std::string home_lang)
    : default_table_(std::move(table)), home_lang_(std::move(home_lang)) {}

MockBackend MockBackend::from_json(std::string_view json_text, std::string home_lang) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception &e) {
    throw DataError(std::string("mock translation table: ") + e.what());
  }
  const bool structured = j.contains("default") || j.contains("pivots") || j.contains("fail");
  if (!structured) {
    return MockBackend(j.get<std::map<std::string, std::string>>(), std::move(home_lang));
  }
  MockBackend backend(j.value("default", json::object()).get<std::map<std::string, std::string>>(),
                      std::move(home_lang));
  if (j.contains("pivots")) {
    for (const auto &[lang, table] : j.at("pivots").items()) {
      backend.set_pivot_table(lang, table.get<std::map<std::string, std::string>>());
    }
  }
  if (j.contains("fail")) {
    for (const auto &lang : j.at("fail")) backend.set_failing(lang.get<std::string>());
  }
  return backend;
}

void MockBackend::set_pivot_table(const std::string &pivot,
                                  std::map<std::string, std::string> table) {
  pivot_tables_[pivot] = std::move(table);
}

std::string MockBackend::rewrite(const std::string &text,
                                 const std::map<std::string, std::string> &table) {
  if (table.empty()) return text;
  std::string out;
  size_t pos = 0;
  while (pos < text.size()) {
    const std::string *best_from = nullptr;
    const std::string *best_to = nullptr;
    for (const auto &[from, to] : table) {
      if (from.empty() || text.compare(pos, from.size(), from) != 0) continue;
      if (best_from == nullptr || from.size() > best_from->size()) {
        best_from = &from;
        best_to = &to;
      }
    }
    if (best_from != nullptr) {
      out += *best_to;
      pos += best_from->size();
    } else {
      out += text[pos++];
    }
  }
  return out;
}

std::string MockBackend::translate(const std::string &text, const std::string &source,
                                   const std::string &target) {
  const std::string &pivot = target == home_lang_ ? source : target;
  if (failing_.count(pivot)) {
    throw BackendError("mock backend: pivot '" + pivot + "' unavailable");
  }
  if (target != home_lang_) return text;
  auto it = pivot_tables_.find(source);
  return rewrite(text, it != pivot_tables_.end() ? it->second : default_table_);
}

MaskedText protect_slots(const std::string &template_text) {
  MaskedText out;
  size_t k = 0;
  size_t pos = 0;
  while (pos < template_text.size()) {
    const char c = template_text[pos];
    if (c == '>') {
      throw DataError("unbalanced '>' in template '" + template_text + "'");
    }
    if (c != '<') {
      out.text += c;
      ++pos;
      continue;
    }
    const size_t close = template_text.find('>', pos + 1);
    const size_t nested = template_text.find('<', pos + 1);
    if (close == std::string::npos) {
      throw DataError("unterminated placeholder in template '" + template_text + "'");
    }
    if (nested != std::string::npos && nested < close) {
      throw DataError("nested '<' in template '" + template_text + "'");
    }
    const std::string sentinel = "XSLOT" + std::to_string(k++);
    out.mask_map[sentinel] = template_text.substr(pos, close - pos + 1);
    out.text += sentinel;
    pos = close + 1;
  }
  return out;
}

size_t count_sentinel(const std::string &text, const std::string &sentinel) {
  size_t n = 0;
  size_t pos = 0;
  while ((pos = text.find(sentinel, pos)) != std::string::npos) {
    const size_t after = pos + sentinel.size();
    if (after >= text.size() || !std::isdigit(static_cast<unsigned char>(text[after]))) ++n;
    pos = after;
  }
  return n;
}

std::string unprotect_slots(const std::string &masked,
                            const std::map<std::string, std::string> &mask_map) {
  std::string out = masked;
  // Longest sentinels first so XSLOT1 does not clobber XSLOT10.
  std::vector<std::pair<std::string, std::string>> entries(mask_map.begin(), mask_map.end());
  std::sort(entries.begin(), entries.end(), [](const auto &a, const auto &b) {
    return a.first.size() > b.first.size();
  });
  for (const auto &[sentinel, original] : entries) {
    size_t pos = 0;
    while ((pos = out.find(sentinel, pos)) != std::string::npos) {
      out.replace(pos, sentinel.size(), original);
      pos += original.size();
    }
  }
  return out;
}

std::string pivot_translate(const std::string &text, const std::string &pivot_lang,
                            TranslationBackend &backend, const std::string &source_lang) {
  try {
    const std::string there = backend.translate(text, source_lang, pivot_lang);
    return backend.translate(there, pivot_lang, source_lang);
  } catch (const std::exception &e) {
    throw BackendError("pivot '" + pivot_lang + "': " + e.what());
  }
}

const std::vector<std::string> &default_language_pool() {
  static const std::vector<std::string> kPool = {
      "af", "ar", "az", "be", "bg", "bn", "bs", "ca", "cs", "cy", "da", "de",
      "el", "en", "eo", "es", "et", "eu", "fa", "fi", "ga", "gl", "gu", "he",
      "hi", "hr", "ht", "hu", "hy", "id", "is", "it", "ja", "ka", "kn", "ko",
      "la", "lt", "lv", "mk", "ms", "mt", "nl", "no", "pl", "pt", "ro", "ru",
      "sk", "sl", "sq", "sr", "sv", "sw", "ta", "th", "tr", "uk", "vi", "zh"};
  return kPool;
}

namespace {

struct Job {
  size_t source = 0;  // template ordinal: cores first, then modifiers
  std::string lang;
  std::string masked;
  std::optional<std::string> result;
  std::string failure;
};

void run_jobs(std::vector<Job> &jobs, TranslationBackend &backend, const PivotConfig &config) {
  auto run_one = [&](Job &job) {
    try {
      job.result = pivot_translate(job.masked, job.lang, backend, config.source_lang);
    } catch (const std::exception &e) {
      job.failure = e.what();
    }
  };
  const size_t workers = std::min(config.max_in_flight, jobs.size());
  if (workers <= 1 || !backend.concurrent_safe()) {
    for (auto &job : jobs) run_one(job);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (size_t i = next++; i < jobs.size(); i = next++) run_one(jobs[i]);
    });
  }
  for (auto &t : pool) t.join();
}

std::string normalized(const std::string &text) { return join(tokenize(text)); }

}  // namespace

TemplatePack paraphrase_pack(const TemplatePack &pack, const PivotConfig &config,
                             TranslationBackend &backend, ParaphraseReport *report) {
  if (config.n_languages > config.language_pool.size()) {
    throw UsageError("paraphrase: n_languages exceeds the language pool size");
  }
  ParaphraseReport local;
  ParaphraseReport &rep = report != nullptr ? *report : local;

  const size_t n_cores = pack.cores.size();
  const size_t n_templates = n_cores + pack.modifiers.size();
  auto text_of = [&](size_t t) -> const std::string & {
    return t < n_cores ? pack.cores[t].text : pack.modifiers[t - n_cores].text;
  };
  auto id_of = [&](size_t t) -> const std::string & {
    return t < n_cores ? pack.cores[t].id : pack.modifiers[t - n_cores].id;
  };

  Rng rng(config.seed);
  std::vector<Job> jobs;
  std::vector<MaskedText> masks(n_templates);
  for (size_t t = 0; t < n_templates; ++t) {
    masks[t] = protect_slots(text_of(t));
    // Partial Fisher-Yates: the first n_languages entries are the sample.
    std::vector<std::string> pool = config.language_pool;
    for (size_t i = 0; i < config.n_languages; ++i) {
      std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
      jobs.push_back({t, pool[i], masks[t].text, std::nullopt, ""});
    }
  }
  run_jobs(jobs, backend, config);
  rep.calls += jobs.size();

  TemplatePack out = pack;
  std::set<std::string> seen_cores, seen_mods;
  for (const auto &c : pack.cores) seen_cores.insert(normalized(c.text));
  for (const auto &m : pack.modifiers) seen_mods.insert(normalized(m.text));

  size_t job_index = 0;
  for (size_t t = 0; t < n_templates; ++t) {
    struct Candidate {
      std::string norm;
      std::string lang;
      std::string text;
    };
    std::vector<Candidate> candidates;
    size_t failed = 0;
    for (size_t j = 0; j < config.n_languages; ++j, ++job_index) {
      const Job &job = jobs[job_index];
      if (!job.result) {
        ++failed;
        ++rep.failures;
        continue;
      }
      bool intact = true;
      for (const auto &[sentinel, original] : masks[t].mask_map) {
        if (count_sentinel(*job.result, sentinel) != 1) intact = false;
      }
      if (!intact) {
        ++rep.rejected_sentinel;
        continue;
      }
      const std::string text = unprotect_slots(*job.result, masks[t].mask_map);
      candidates.push_back({normalized(text), job.lang, text});
    }
    if (config.n_languages > 0 && failed == config.n_languages) {
      const std::string msg = "paraphrase: every pivot failed for template '" +
                              id_of(t) + "'; kept unchanged";
      rep.warnings.push_back(msg);
      warn(msg);
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto &a, const auto &b) {
      return std::tie(a.norm, a.lang) < std::tie(b.norm, b.lang);
    });
    std::set<std::string> &seen = t < n_cores ? seen_cores : seen_mods;
    for (auto &cand : candidates) {
      if (!seen.insert(cand.norm).second) {
        ++rep.duplicates;
        continue;
      }
      const std::string new_id = id_of(t) + "~" + cand.lang;
      if (t < n_cores) {
        CoreTemplate core = pack.cores[t];
        core.id = new_id;
        core.text = cand.text;
        core.paraphrase_lang = cand.lang;
        core.source_id = pack.cores[t].source_id.value_or(pack.cores[t].id);
        out.cores.push_back(std::move(core));
        ++rep.added_cores;
      } else {
        ModifierTemplate mod = pack.modifiers[t - n_cores];
        mod.id = new_id;
        mod.text = cand.text;
        mod.paraphrase_lang = cand.lang;
        mod.source_id = mod.source_id.value_or(pack.modifiers[t - n_cores].id);
        out.modifiers.push_back(std::move(mod));
        ++rep.added_modifiers;
      }
    }
  }
  out.validate();
  return out;
}

}  // namespace nluforge
