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

#include "nluforge/dataset.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nluforge/error.h"
#include "nluforge/io.h"

namespace nluforge {

using nlohmann::json;

namespace {

// Decodes one code point at `pos`; returns {code point, byte length}.
// Malformed sequences decode as a single byte.
std::pair<char32_t, size_t> decode_utf8(std::string_view s, size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) |
                                    (c2 << 6) | c3),
              4};
    }
  }
  return {b0, 1};
}

void encode_utf8(char32_t cp, std::string &out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp == 0x152) return 0x153;  // Œ
  if (cp == 0x178) return 0xFF;   // Ÿ
  return cp;
}

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' ||
         cp == '\v' || cp == 0xA0 || cp == 0x202F || cp == 0x2009;
}

bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019; }

bool is_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

bool is_alnum(char32_t cp) {
  if (cp < 0x80) {
    return is_digit(cp) || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  switch (cp) {
    case 0xA0: case 0xAB: case 0xBB: case 0xB0: case 0xA7: case 0xB7:
    case 0x2013: case 0x2014: case 0x2019: case 0x201C: case 0x201D:
    case 0x2026: case 0x202F: case 0x2009: case 0x20AC:
      return false;
    default:
      return true;
  }
}

bool is_letter(char32_t cp) { return is_alnum(cp) && !is_digit(cp); }

bool is_digit_joiner(char32_t cp) {
  return cp == '/' || cp == '.' || cp == ',' || cp == ':';
}

std::string schema_axis_error(const IntentAxis &axis, size_t expected) {
  std::ostringstream os;
  os << "intent axis '" << axis.name << "' has " << axis.categories.size()
     << " categories, expected " << expected;
  return os.str();
}

}  // namespace

int IntentAxis::index_of(std::string_view category) const {
  for (size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == category) return static_cast<int>(i);
  }
  return -1;
}

LabelSchema LabelSchema::default_schema() {
  LabelSchema s;
  s.slot_labels = {"O", "B-LAB", "I-LAB", "B-DATE", "I-DATE"};
  s.intent_axes = {
      {kAxisResultType, {"value", "evolution", "date", "count", "reference"}},
      {kAxisInterpretation, {"normality", "value", "low", "high", "presence"}},
      {kAxisTime, {"first", "last", "all"}},
      {kAxisTimeConstraint, {"none", "range", "date", "number"}},
  };
  return s;
}

void LabelSchema::validate() const {
  if (slot_labels.empty() || slot_labels[0] != "O") {
    throw DataError("schema: slot_labels must start with \"O\"");
  }
  std::set<std::string> seen;
  for (const auto &tag : slot_labels) {
    if (!seen.insert(tag).second) {
      throw DataError("schema: duplicate slot label '" + tag + "'");
    }
    if (tag == "O") continue;
    if (tag.size() < 3 || (tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') {
      throw DataError("schema: slot label '" + tag + "' is not O, B-X or I-X");
    }
  }
  for (const auto &tag : slot_labels) {
    if (tag == "O") continue;
    const std::string kind = tag.substr(2);
    if (!seen.count("B-" + kind) || !seen.count("I-" + kind)) {
      throw DataError("schema: slot kind '" + kind + "' needs both B- and I- tags");
    }
  }
  static const std::pair<const char *, size_t> kExpected[] = {
      {kAxisResultType, 5},
      {kAxisInterpretation, 5},
      {kAxisTime, 3},
      {kAxisTimeConstraint, 4},
  };
  if (intent_axes.size() != 4) {
    throw DataError("schema: expected 4 intent axes");
  }
  for (size_t i = 0; i < 4; ++i) {
    const auto &axis = intent_axes[i];
    if (axis.name != kExpected[i].first) {
      throw DataError("schema: intent axis " + std::to_string(i) + " must be '" +
                      kExpected[i].first + "', got '" + axis.name + "'");
    }
    if (axis.categories.empty()) {
      throw DataError("schema: intent axis '" + axis.name + "' is empty");
    }
    if (!allow_custom_counts && axis.categories.size() != kExpected[i].second) {
      throw DataError("schema: " + schema_axis_error(axis, kExpected[i].second));
    }
    std::set<std::string> cats(axis.categories.begin(), axis.categories.end());
    if (cats.size() != axis.categories.size()) {
      throw DataError("schema: duplicate category in axis '" + axis.name + "'");
    }
  }
}

int LabelSchema::slot_index(std::string_view tag) const {
  for (size_t i = 0; i < slot_labels.size(); ++i) {
    if (slot_labels[i] == tag) return static_cast<int>(i);
  }
  return -1;
}

const IntentAxis &LabelSchema::axis(std::string_view name) const {
  for (const auto &a : intent_axes) {
    if (a.name == name) return a;
  }
  throw DataError("unknown intent axis '" + std::string(name) + "'");
}

bool LabelSchema::has_axis(std::string_view name) const {
  return std::any_of(intent_axes.begin(), intent_axes.end(),
                     [&](const IntentAxis &a) { return a.name == name; });
}

std::vector<std::string> LabelSchema::slot_kinds() const {
  std::vector<std::string> kinds;
  for (const auto &tag : slot_labels) {
    if (tag.size() > 2 && tag[0] == 'B') kinds.push_back(tag.substr(2));
  }
  return kinds;
}

std::string LabelSchema::checksum() const {
  return checksum_hex(schema_to_json(*this));
}

LabelSchema parse_schema(std::string_view json_text) {
  LabelSchema schema;
  try {
    const json j = json::parse(json_text);
    schema.slot_labels = j.at("slot_labels").get<std::vector<std::string>>();
    const json &axes = j.at("intent_axes");
    for (const char *name : {kAxisResultType, kAxisInterpretation, kAxisTime,
                             kAxisTimeConstraint}) {
      if (!axes.contains(name)) {
        throw DataError(std::string("schema: missing intent axis '") + name + "'");
      }
      schema.intent_axes.push_back(
          {name, axes.at(name).get<std::vector<std::string>>()});
    }
    if (axes.size() != 4) throw DataError("schema: unexpected extra intent axes");
    schema.allow_custom_counts = j.value("allow_custom_counts", false);
  } catch (const json::exception &e) {
    throw DataError(std::string("schema: ") + e.what());
  }
  schema.validate();
  return schema;
}

LabelSchema read_schema(const std::string &path) {
  return parse_schema(read_file(path));
}

std::string schema_to_json(const LabelSchema &schema) {
  json j;
  j["slot_labels"] = schema.slot_labels;
  json axes = json::object();
  for (const auto &axis : schema.intent_axes) axes[axis.name] = axis.categories;
  j["intent_axes"] = axes;
  if (schema.allow_custom_counts) j["allow_custom_counts"] = true;
  return j.dump(2) + "\n";
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos < text.size()) {
    const auto [cp, len] = decode_utf8(text, pos);
    out.emplace_back(text.substr(pos, len));
    pos += len;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<char32_t> cps;
  cps.reserve(text.size());
  for (size_t pos = 0; pos < text.size();) {
    const auto [cp, len] = decode_utf8(text, pos);
    cps.push_back(to_lower(cp));
    pos += len;
  }

  std::vector<std::string> tokens;
  const size_t n = cps.size();
  size_t i = 0;
  while (i < n) {
    const char32_t cp = cps[i];
    if (is_space(cp)) {
      ++i;
      continue;
    }
    std::string tok;
    if (!is_alnum(cp)) {
      encode_utf8(is_apostrophe(cp) ? U'\'' : cp, tok);
      tokens.push_back(std::move(tok));
      ++i;
      continue;
    }
    size_t j = i;
    while (j < n) {
      const char32_t c = cps[j];
      if (is_alnum(c)) {
        encode_utf8(c, tok);
        ++j;
      } else if (c == '-' && j > i && j + 1 < n && is_alnum(cps[j + 1])) {
        tok.push_back('-');
        ++j;
      } else if (is_digit_joiner(c) && j > i && is_digit(cps[j - 1]) &&
                 j + 1 < n && is_digit(cps[j + 1])) {
        encode_utf8(c, tok);
        ++j;
      } else if (is_apostrophe(c) && j > i && is_letter(cps[j - 1])) {
        // Elision: the apostrophe closes the token ("l'", "qu'").
        tok.push_back('\'');
        ++j;
        break;
      } else {
        break;
      }
    }
    tokens.push_back(std::move(tok));
    i = j;
  }
  return tokens;
}

std::string join(const std::vector<std::string> &tokens, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(tokens[i]);
  }
  return out;
}

std::vector<SlotSpan> spans_from_bio(const std::vector<std::string> &tags,
                                     const LabelSchema &schema) {
  std::vector<SlotSpan> spans;
  bool open = false;
  SlotSpan current;
  auto close = [&](int end) {
    if (open) {
      current.end = end;
      spans.push_back(current);
      open = false;
    }
  };
  for (size_t t = 0; t < tags.size(); ++t) {
    const std::string &tag = tags[t];
    if (schema.slot_index(tag) < 0) {
      throw DataError("unknown slot tag '" + tag + "'");
    }
    const int pos = static_cast<int>(t);
    if (tag == "O") {
      close(pos);
      continue;
    }
    const std::string kind = tag.substr(2);
    if (tag[0] == 'I' && open && current.kind == kind) continue;
    close(pos);
    current = SlotSpan{pos, pos, kind};
    open = true;
  }
  close(static_cast<int>(tags.size()));
  return spans;
}

std::vector<SlotSpan> spans_from_bio(const std::vector<std::string> &tags) {
  static const LabelSchema kDefault = LabelSchema::default_schema();
  return spans_from_bio(tags, kDefault);
}

bool is_bio_valid(const std::vector<std::string> &tags) {
  std::string prev = "O";
  for (const auto &tag : tags) {
    if (tag.size() > 2 && tag[0] == 'I') {
      if (prev == "O" || prev.substr(2) != tag.substr(2)) return false;
    }
    prev = tag;
  }
  return true;
}

void validate_utterance(const Utterance &utt, const LabelSchema &schema) {
  const std::string where = "utterance '" + utt.id + "': ";
  if (utt.slot_tags.size() != utt.tokens.size()) {
    throw DataError(where + "slot_tags length " +
                    std::to_string(utt.slot_tags.size()) + " != tokens length " +
                    std::to_string(utt.tokens.size()));
  }
  if (!utt.lemmas.empty() && utt.lemmas.size() != utt.tokens.size()) {
    throw DataError(where + "lemmas length differs from tokens");
  }
  if (!utt.pos.empty() && utt.pos.size() != utt.tokens.size()) {
    throw DataError(where + "pos length differs from tokens");
  }
  for (const auto &tag : utt.slot_tags) {
    if (schema.slot_index(tag) < 0) {
      throw DataError(where + "unknown slot tag '" + tag + "'");
    }
  }
  if (!is_bio_valid(utt.slot_tags)) {
    throw DataError(where + "slot tags are not BIO-valid");
  }
  for (const auto &axis : schema.intent_axes) {
    auto it = utt.intents.find(axis.name);
    if (it == utt.intents.end()) {
      throw DataError(where + "missing intent axis '" + axis.name + "'");
    }
    if (axis.index_of(it->second) < 0) {
      throw DataError(where + "unknown category '" + it->second +
                      "' for axis '" + axis.name + "'");
    }
  }
  if (utt.intents.size() != schema.intent_axes.size()) {
    throw DataError(where + "intents contain an axis outside the schema");
  }
}

void validate_corpus(const Corpus &corpus) {
  std::set<std::string> ids;
  for (const auto &utt : corpus.utterances) {
    if (!ids.insert(utt.id).second) {
      throw DataError("duplicate utterance id '" + utt.id + "'");
    }
    validate_utterance(utt, corpus.schema);
  }
}

std::string utterance_to_json(const Utterance &utt) {
  json j;
  j["id"] = utt.id;
  j["tokens"] = utt.tokens;
  j["slot_tags"] = utt.slot_tags;
  j["intents"] = utt.intents;
  json prov;
  prov["template_id"] = utt.provenance.template_id;
  prov["mention_id"] = utt.provenance.mention_id;
  if (utt.provenance.modifier_id.empty()) {
    prov["modifier_id"] = nullptr;
  } else {
    prov["modifier_id"] = utt.provenance.modifier_id;
  }
  if (utt.provenance.paraphrase_lang) {
    prov["paraphrase_lang"] = *utt.provenance.paraphrase_lang;
  }
  j["provenance"] = prov;
  if (!utt.lemmas.empty()) j["lemmas"] = utt.lemmas;
  if (!utt.pos.empty()) j["pos"] = utt.pos;
  return j.dump();
}

Utterance utterance_from_json(std::string_view line) {
  const json j = json::parse(line);
  Utterance utt;
  utt.id = j.at("id").get<std::string>();
  utt.tokens = j.at("tokens").get<std::vector<std::string>>();
  utt.slot_tags = j.at("slot_tags").get<std::vector<std::string>>();
  utt.intents = j.at("intents").get<std::map<std::string, std::string>>();
  if (j.contains("provenance")) {
    const json &p = j.at("provenance");
    auto str = [&](const char *key) -> std::string {
      if (!p.contains(key) || p.at(key).is_null()) return "";
      return p.at(key).get<std::string>();
    };
    utt.provenance.template_id = str("template_id");
    utt.provenance.modifier_id = str("modifier_id");
    utt.provenance.mention_id = str("mention_id");
    if (p.contains("paraphrase_lang") && !p.at("paraphrase_lang").is_null()) {
      utt.provenance.paraphrase_lang = p.at("paraphrase_lang").get<std::string>();
    }
  }
  if (j.contains("lemmas")) utt.lemmas = j.at("lemmas").get<std::vector<std::string>>();
  if (j.contains("pos")) utt.pos = j.at("pos").get<std::vector<std::string>>();
  return utt;
}

std::string serialize_corpus(const Corpus &corpus) {
  std::string out;
  for (const auto &utt : corpus.utterances) {
    out += utterance_to_json(utt);
    out += '\n';
  }
  return out;
}

Corpus parse_corpus(std::string_view text, const LabelSchema &schema) {
  Corpus corpus;
  corpus.schema = schema;
  std::set<std::string> ids;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    Utterance utt;
    try {
      utt = utterance_from_json(line);
    } catch (const json::exception &e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      validate_utterance(utt, schema);
    } catch (const Error &e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(utt.id).second) {
      throw DataError("line " + std::to_string(line_no) +
                      ": duplicate utterance id '" + utt.id + "'");
    }
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

Corpus read_corpus(const std::string &path, const LabelSchema &schema) {
  try {
    return parse_corpus(read_file(path), schema);
  } catch (const Error &e) {
    if (e.kind() != ErrorKind::kData) throw;
    throw DataError(path + ": " + e.what());
  }
}

void write_corpus(const Corpus &corpus, const std::string &path) {
  write_file_atomic(path, serialize_corpus(corpus));
}

std::string to_conll(const Corpus &corpus) {
  std::string out;
  for (const auto &utt : corpus.utterances) {
    const bool extra = !utt.lemmas.empty() || !utt.pos.empty();
    for (size_t t = 0; t < utt.tokens.size(); ++t) {
      out += utt.tokens[t];
      out += '\t';
      if (extra) {
        out += utt.lemmas.empty() ? "_" : utt.lemmas[t];
        out += '\t';
        out += utt.pos.empty() ? "_" : utt.pos[t];
        out += '\t';
      }
      out += utt.slot_tags[t];
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

std::vector<Utterance> parse_conll(std::string_view text) {
  std::vector<Utterance> out;
  Utterance current;
  auto flush = [&]() {
    if (current.tokens.empty()) return;
    char id[32];
    std::snprintf(id, sizeof(id), "conll-%06zu", out.size() + 1);
    current.id = id;
    out.push_back(std::move(current));
    current = Utterance{};
  };
  size_t pos = 0;
  size_t line_no = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) {
      flush();
      if (eol == text.size()) break;
      continue;
    }
    std::vector<std::string> cols;
    size_t c = 0;
    while (true) {
      const size_t tab = line.find('\t', c);
      cols.emplace_back(line.substr(c, tab == std::string_view::npos ? tab : tab - c));
      if (tab == std::string_view::npos) break;
      c = tab + 1;
    }
    if (cols.size() == 2) {
      current.tokens.push_back(cols[0]);
      current.slot_tags.push_back(cols[1]);
    } else if (cols.size() == 4) {
      current.tokens.push_back(cols[0]);
      current.lemmas.push_back(cols[1]);
      current.pos.push_back(cols[2]);
      current.slot_tags.push_back(cols[3]);
    } else {
      throw DataError("conll line " + std::to_string(line_no) + ": expected 2 or 4 columns");
    }
  }
  flush();
  return out;
}

}  // namespace nluforge
