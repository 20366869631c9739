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

#include "nluforge/generator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "nluforge/error.h"
#include "nluforge/io.h"

namespace nluforge {

using nlohmann::json;

namespace {

struct Placeholder {
  size_t begin = 0;  // index of '<'
  size_t end = 0;    // one past '>'
  std::string body;
};

std::vector<Placeholder> find_placeholders(const std::string &text) {
  std::vector<Placeholder> out;
  size_t pos = 0;
  while ((pos = text.find('<', pos)) != std::string::npos) {
    const size_t close = text.find('>', pos);
    if (close == std::string::npos) break;
    out.push_back({pos, close + 1, text.substr(pos + 1, close - pos - 1)});
    pos = close + 1;
  }
  return out;
}

std::vector<DateKind> modifier_kinds(const ModifierTemplate &m) {
  const auto holes = find_placeholders(m.text);
  if (holes.size() != 1) {
    throw DataError("modifier '" + m.id +
                    "' must contain exactly one temporal placeholder");
  }
  std::vector<DateKind> kinds;
  const std::string &body = holes[0].body;
  size_t start = 0;
  while (start <= body.size()) {
    size_t bar = body.find('|', start);
    if (bar == std::string::npos) bar = body.size();
    const std::string name = body.substr(start, bar - start);
    const auto kind = date_kind_from_name(name);
    if (!kind) {
      throw DataError("modifier '" + m.id + "': unknown placeholder kind '" +
                      name + "'");
    }
    kinds.push_back(*kind);
    start = bar + 1;
  }
  return kinds;
}

bool is_punct_token(const std::string &tok) {
  return tok.size() == 1 && !std::isalnum(static_cast<unsigned char>(tok[0]));
}

int days_in_month(int year, int month) {
  static const int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2) {
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return leap ? 29 : 28;
  }
  return kDays[month - 1];
}

std::string format_date(int y, int m, int d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d/%02d/%04d", d, m, y);
  return buf;
}

std::tuple<int, int, int> random_date(Rng &rng) {
  const int y = 2005 + static_cast<int>(rng.index(21));
  const int m = 1 + static_cast<int>(rng.index(12));
  const int d = 1 + static_cast<int>(rng.index(days_in_month(y, m)));
  return {y, m, d};
}

json optional_string(const std::optional<std::string> &v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<std::string> read_optional(const json &j, const char *key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

std::optional<DateKind> date_kind_from_name(std::string_view name) {
  if (name == "date") return DateKind::kAbsolute;
  if (name == "duration") return DateKind::kRelative;
  if (name == "range") return DateKind::kRange;
  if (name == "event") return DateKind::kEvent;
  return std::nullopt;
}

void TemplatePack::validate() const {
  std::set<std::string> ids;
  for (const auto &core : cores) {
    if (!ids.insert(core.id).second) {
      throw DataError("duplicate template id '" + core.id + "'");
    }
    const auto holes = find_placeholders(core.text);
    if (holes.size() != 1 || holes[0].body != "lab") {
      throw DataError("core template '" + core.id +
                      "' must contain exactly one <lab> placeholder");
    }
    for (const auto &[axis, category] : core.intents) {
      if (axis == kAxisTimeConstraint) {
        throw DataError("core template '" + core.id +
                        "': time_constraint comes from the modifier");
      }
      if (!schema.has_axis(axis)) {
        throw DataError("core template '" + core.id + "': unknown intent axis '" +
                        axis + "'");
      }
      if (schema.axis(axis).index_of(category) < 0) {
        throw DataError("core template '" + core.id + "': unknown category '" +
                        category + "' for axis '" + axis + "'");
      }
    }
    for (const char *axis : {kAxisResultType, kAxisInterpretation, kAxisTime}) {
      if (!core.intents.count(axis)) {
        throw DataError("core template '" + core.id + "': missing intent axis '" +
                        axis + "'");
      }
    }
  }
  const IntentAxis &tc = schema.axis(kAxisTimeConstraint);
  for (const auto &mod : modifiers) {
    if (!ids.insert(mod.id).second) {
      throw DataError("duplicate template id '" + mod.id + "'");
    }
    modifier_kinds(mod);
    if (tc.index_of(mod.time_constraint) < 0) {
      throw DataError("modifier '" + mod.id + "': unknown time_constraint '" +
                      mod.time_constraint + "'");
    }
  }
  std::set<std::vector<std::string>> mentions;
  for (const auto &mention : lab_lexicon) {
    const auto toks = tokenize(mention);
    if (toks.empty()) throw DataError("lab mention '" + mention + "' has no tokens");
    if (!mentions.insert(toks).second) {
      throw DataError("duplicate lab mention '" + mention + "'");
    }
  }
}

TemplatePack parse_pack(std::string_view json_text, const LabelSchema &schema) {
  TemplatePack pack;
  pack.schema = schema;
  try {
    const json j = json::parse(json_text);
    for (const auto &c : j.at("cores")) {
      CoreTemplate core;
      core.id = c.at("id").get<std::string>();
      core.text = c.at("text").get<std::string>();
      core.intents = c.at("intents").get<std::map<std::string, std::string>>();
      core.paraphrase_lang = read_optional(c, "paraphrase_lang");
      core.source_id = read_optional(c, "source_id");
      pack.cores.push_back(std::move(core));
    }
    if (j.contains("modifiers")) {
      for (const auto &m : j.at("modifiers")) {
        ModifierTemplate mod;
        mod.id = m.at("id").get<std::string>();
        mod.text = m.at("text").get<std::string>();
        mod.time_constraint = m.at("time_constraint").get<std::string>();
        mod.paraphrase_lang = read_optional(m, "paraphrase_lang");
        mod.source_id = read_optional(m, "source_id");
        pack.modifiers.push_back(std::move(mod));
      }
    }
    pack.lab_lexicon = j.at("lab_lexicon").get<std::vector<std::string>>();
    if (j.contains("event_lexicon")) {
      pack.event_lexicon = j.at("event_lexicon").get<std::vector<std::string>>();
    }
  } catch (const json::exception &e) {
    throw DataError(std::string("template pack: ") + e.what());
  }
  pack.validate();
  return pack;
}

TemplatePack read_pack(const std::string &path, const LabelSchema &schema) {
  return parse_pack(read_file(path), schema);
}

std::string pack_to_json(const TemplatePack &pack) {
  json cores = json::array();
  for (const auto &c : pack.cores) {
    json jc = {{"id", c.id}, {"text", c.text}, {"intents", c.intents}};
    if (c.paraphrase_lang) jc["paraphrase_lang"] = optional_string(c.paraphrase_lang);
    if (c.source_id) jc["source_id"] = optional_string(c.source_id);
    cores.push_back(std::move(jc));
  }
  json mods = json::array();
  for (const auto &m : pack.modifiers) {
    json jm = {{"id", m.id}, {"text", m.text}, {"time_constraint", m.time_constraint}};
    if (m.paraphrase_lang) jm["paraphrase_lang"] = optional_string(m.paraphrase_lang);
    if (m.source_id) jm["source_id"] = optional_string(m.source_id);
    mods.push_back(std::move(jm));
  }
  json j = {{"cores", cores}, {"modifiers", mods}, {"lab_lexicon", pack.lab_lexicon}};
  if (!pack.event_lexicon.empty()) j["event_lexicon"] = pack.event_lexicon;
  return j.dump(2) + "\n";
}

std::optional<std::tuple<int, int, int>> parse_date(std::string_view token) {
  if (token.size() != 10 || token[2] != '/' || token[5] != '/') return std::nullopt;
  auto num = [&](size_t pos, size_t len) -> int {
    int v = 0;
    for (size_t i = pos; i < pos + len; ++i) {
      if (token[i] < '0' || token[i] > '9') return -1;
      v = v * 10 + (token[i] - '0');
    }
    return v;
  };
  const int d = num(0, 2), m = num(3, 2), y = num(6, 4);
  if (d < 1 || m < 1 || m > 12 || y < 0) return std::nullopt;
  if (d > days_in_month(y, m)) return std::nullopt;
  return std::make_tuple(y, m, d);
}

DateExpr synth_date(DateKind kind, Rng &rng) {
  DateExpr expr;
  expr.kind = kind;
  switch (kind) {
    case DateKind::kAbsolute: {
      const auto [y, m, d] = random_date(rng);
      expr.tokens = {format_date(y, m, d)};
      break;
    }
    case DateKind::kRelative: {
      static const char *kUnits[] = {"jours", "mois", "ans"};
      static const int kMax[] = {30, 12, 10};
      const size_t unit = rng.index(3);
      const int n = 2 + static_cast<int>(rng.index(kMax[unit] - 1));
      expr.tokens = {"depuis", std::to_string(n), kUnits[unit]};
      break;
    }
    case DateKind::kRange: {
      auto a = random_date(rng);
      auto b = random_date(rng);
      if (b < a) std::swap(a, b);
      expr.tokens = {"entre", format_date(std::get<0>(a), std::get<1>(a), std::get<2>(a)),
                     "et", format_date(std::get<0>(b), std::get<1>(b), std::get<2>(b))};
      break;
    }
    case DateKind::kEvent:
      break;
  }
  return expr;
}

Utterance instantiate(const TemplatePack &pack, const CoreTemplate &core,
                      const ModifierTemplate *modifier, size_t mention_index,
                      Rng &rng) {
  if (mention_index >= pack.lab_lexicon.size()) {
    throw DataError("mention index out of range");
  }
  const std::string &mention = pack.lab_lexicon[mention_index];
  const auto mention_tokens = tokenize(mention);
  if (mention_tokens.empty()) {
    throw DataError("lab mention '" + mention + "' has no tokens");
  }
  const auto holes = find_placeholders(core.text);
  if (holes.size() != 1 || holes[0].body != "lab") {
    throw DataError("core template '" + core.id + "' lacks a <lab> placeholder");
  }

  Utterance utt;
  auto append = [&](const std::vector<std::string> &toks, const char *first,
                    const char *rest) {
    for (size_t i = 0; i < toks.size(); ++i) {
      utt.tokens.push_back(toks[i]);
      utt.slot_tags.push_back(i == 0 ? first : rest);
    }
  };

  const auto prefix = tokenize(core.text.substr(0, holes[0].begin));
  auto suffix = tokenize(core.text.substr(holes[0].end));
  // Trailing punctuation ("?") stays at the end, after the modifier.
  std::vector<std::string> trailing;
  while (!suffix.empty() && is_punct_token(suffix.back())) {
    trailing.insert(trailing.begin(), suffix.back());
    suffix.pop_back();
  }

  append(prefix, "O", "O");
  append(mention_tokens, "B-LAB", "I-LAB");
  append(suffix, "O", "O");

  utt.intents = core.intents;
  utt.intents[kAxisTimeConstraint] = "none";
  utt.provenance.template_id = core.id;
  utt.provenance.mention_id = std::to_string(mention_index);
  utt.provenance.paraphrase_lang = core.paraphrase_lang;

  if (modifier != nullptr) {
    const auto kinds = modifier_kinds(*modifier);
    const DateKind kind = kinds[rng.index(kinds.size())];
    DateExpr expr = synth_date(kind, rng);
    if (kind == DateKind::kEvent && !pack.event_lexicon.empty()) {
      expr.tokens = tokenize(pack.event_lexicon[rng.index(pack.event_lexicon.size())]);
    }
    const auto mholes = find_placeholders(modifier->text);
    auto mod_tokens = tokenize(modifier->text.substr(0, mholes[0].begin));
    size_t skip = 0;
    if (!mod_tokens.empty() && !expr.tokens.empty() &&
        mod_tokens.back() == expr.tokens.front()) {
      skip = 1;
    }
    mod_tokens.insert(mod_tokens.end(), expr.tokens.begin() + skip, expr.tokens.end());
    const auto tail = tokenize(modifier->text.substr(mholes[0].end));
    mod_tokens.insert(mod_tokens.end(), tail.begin(), tail.end());
    append(mod_tokens, "B-DATE", "I-DATE");
    utt.intents[kAxisTimeConstraint] = modifier->time_constraint;
    utt.provenance.modifier_id = modifier->id;
    if (!utt.provenance.paraphrase_lang) {
      utt.provenance.paraphrase_lang = modifier->paraphrase_lang;
    }
  }
  append(trailing, "O", "O");
  return utt;
}

Corpus generate(const TemplatePack &pack, size_t count, uint64_t seed,
                const GenerateOptions &opts) {
  if (count == 0) throw UsageError("generate: count must be >= 1");
  if (pack.cores.empty() || pack.lab_lexicon.empty()) {
    throw DataError("generate: template pack has no cores or no mentions");
  }
  const bool use_modifiers = !pack.modifiers.empty() && opts.modifier_prob > 0.0;
  const size_t combos = pack.cores.size() * pack.lab_lexicon.size();
  if (!use_modifiers && count > combos) {
    throw DataError("generate: cannot produce " + std::to_string(count) +
                    " unique utterances; achievable maximum is " +
                    std::to_string(combos));
  }

  Rng rng(seed);
  Corpus corpus;
  corpus.schema = pack.schema;
  corpus.utterances.reserve(count);
  std::set<std::vector<std::string>> seen;
  size_t collisions = 0;
  while (corpus.utterances.size() < count) {
    const CoreTemplate &core = pack.cores[rng.index(pack.cores.size())];
    const size_t mention = rng.index(pack.lab_lexicon.size());
    const ModifierTemplate *modifier = nullptr;
    if (use_modifiers && rng.bernoulli(opts.modifier_prob)) {
      modifier = &pack.modifiers[rng.index(pack.modifiers.size())];
    }
    Utterance utt = instantiate(pack, core, modifier, mention, rng);
    if (!seen.insert(utt.tokens).second) {
      if (++collisions > opts.max_consecutive_collisions) {
        throw DataError("generate: cannot produce " + std::to_string(count) +
                        " unique utterances; achievable maximum is about " +
                        std::to_string(corpus.utterances.size()));
      }
      continue;
    }
    collisions = 0;
    char id[48];
    std::snprintf(id, sizeof(id), "%s-%06zu", opts.id_prefix.c_str(),
                  corpus.utterances.size() + 1);
    utt.id = id;
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

std::pair<TemplatePack, TemplatePack> split_pack(const TemplatePack &pack,
                                                 double template_ratio,
                                                 double mention_ratio,
                                                 uint64_t seed) {
  if (!(template_ratio > 0.0 && template_ratio < 1.0) ||
      !(mention_ratio > 0.0 && mention_ratio < 1.0)) {
    throw UsageError("split_pack: ratios must lie in (0, 1)");
  }
  Rng rng(seed);

  // Paraphrases travel with their source template so that no surface
  // variant of a template lands on both sides.
  std::vector<std::string> groups;
  std::map<std::string, std::vector<size_t>> members;
  for (size_t i = 0; i < pack.cores.size(); ++i) {
    const std::string key = pack.cores[i].source_id.value_or(pack.cores[i].id);
    if (!members.count(key)) groups.push_back(key);
    members[key].push_back(i);
  }

  auto partition = [&](size_t n, double ratio, const char *what) {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    const auto first = static_cast<size_t>(std::llround(static_cast<double>(n) * ratio));
    if (first == 0 || first >= n) {
      throw DataError(std::string("split_pack: a half would have no ") + what);
    }
    std::vector<bool> in_first(n, false);
    for (size_t i = 0; i < first; ++i) in_first[order[i]] = true;
    return in_first;
  };

  const auto core_side = partition(groups.size(), template_ratio, "templates");
  const auto mention_side = partition(pack.lab_lexicon.size(), mention_ratio, "mentions");

  TemplatePack a, b;
  for (TemplatePack *half : {&a, &b}) {
    half->modifiers = pack.modifiers;
    half->event_lexicon = pack.event_lexicon;
    half->schema = pack.schema;
  }
  std::set<size_t> first_cores;
  for (size_t g = 0; g < groups.size(); ++g) {
    if (core_side[g]) {
      for (size_t i : members[groups[g]]) first_cores.insert(i);
    }
  }
  for (size_t i = 0; i < pack.cores.size(); ++i) {
    (first_cores.count(i) ? a : b).cores.push_back(pack.cores[i]);
  }
  for (size_t i = 0; i < pack.lab_lexicon.size(); ++i) {
    (mention_side[i] ? a : b).lab_lexicon.push_back(pack.lab_lexicon[i]);
  }
  return {std::move(a), std::move(b)};
}

}  // namespace nluforge
