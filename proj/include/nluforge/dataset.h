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

#ifndef NLUFORGE_DATASET_H_
#define NLUFORGE_DATASET_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nluforge {

// Intent axes, in canonical order.
inline constexpr const char *kAxisResultType = "result_type";
inline constexpr const char *kAxisInterpretation = "interpretation";
inline constexpr const char *kAxisTime = "time";
inline constexpr const char *kAxisTimeConstraint = "time_constraint";

struct IntentAxis {
  std::string name;
  std::vector<std::string> categories;

  // Index of `category`, or -1.
  int index_of(std::string_view category) const;
};

// Slot tags and intent categories. The default schema uses the BIO tag set
// {O, B-LAB, I-LAB, B-DATE, I-DATE} and the four axes with 5/5/3/4 members.
// "count" and "reference" in result_type are placeholder names; a schema file
// may rename them.
struct LabelSchema {
  std::vector<std::string> slot_labels;
  std::vector<IntentAxis> intent_axes;
  // Permits axis cardinalities other than 5/5/3/4.
  bool allow_custom_counts = false;

  static LabelSchema default_schema();

  // Throws DataError describing the first violated invariant.
  void validate() const;

  int slot_index(std::string_view tag) const;
  const IntentAxis &axis(std::string_view name) const;
  bool has_axis(std::string_view name) const;
  // Slot kinds ("LAB", "DATE") in order of first B- tag.
  std::vector<std::string> slot_kinds() const;
  std::string checksum() const;
};

LabelSchema parse_schema(std::string_view json_text);
LabelSchema read_schema(const std::string &path);
std::string schema_to_json(const LabelSchema &schema);

struct Provenance {
  std::string template_id;
  std::string modifier_id;  // empty when no modifier was attached
  std::string mention_id;
  std::optional<std::string> paraphrase_lang;

  bool operator==(const Provenance &) const = default;
};

struct Utterance {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> slot_tags;
  std::map<std::string, std::string> intents;
  Provenance provenance;
  // Optional externally supplied columns; empty or same length as tokens.
  std::vector<std::string> lemmas;
  std::vector<std::string> pos;

  bool operator==(const Utterance &) const = default;
};

struct SlotSpan {
  int start = 0;  // inclusive
  int end = 0;    // exclusive
  std::string kind;

  bool operator==(const SlotSpan &) const = default;
  auto operator<=>(const SlotSpan &) const = default;
};

struct Corpus {
  LabelSchema schema = LabelSchema::default_schema();
  std::vector<Utterance> utterances;
};

// Lowercasing tokenizer. Splits on whitespace and punctuation, keeps elided
// articles with their apostrophe ("l'"), and keeps digit runs joined by '/',
// '.', ',' or ':' atomic ("27/03/2015", "1,5").
std::vector<std::string> tokenize(std::string_view text);

// Splits UTF-8 into code points, each as its own string. Invalid bytes are
// passed through one at a time.
std::vector<std::string> utf8_chars(std::string_view text);

std::string join(const std::vector<std::string> &tokens, std::string_view sep = " ");

// BIO tags to maximal spans. An I-X that does not continue an X span opens
// a new one. Throws DataError on tags outside the schema.
std::vector<SlotSpan> spans_from_bio(const std::vector<std::string> &tags,
                                     const LabelSchema &schema);
std::vector<SlotSpan> spans_from_bio(const std::vector<std::string> &tags);

bool is_bio_valid(const std::vector<std::string> &tags);

// Throws DataError (mentioning the utterance id) on any invariant violation.
void validate_utterance(const Utterance &utt, const LabelSchema &schema);
void validate_corpus(const Corpus &corpus);

// Canonical single-line JSON for an utterance (sorted keys, no whitespace).
std::string utterance_to_json(const Utterance &utt);
Utterance utterance_from_json(std::string_view line);

std::string serialize_corpus(const Corpus &corpus);
Corpus parse_corpus(std::string_view text, const LabelSchema &schema);
Corpus read_corpus(const std::string &path,
                   const LabelSchema &schema = LabelSchema::default_schema());
void write_corpus(const Corpus &corpus, const std::string &path);

// TOKEN<TAB>TAG, or TOKEN<TAB>LEMMA<TAB>POS<TAB>TAG when either optional
// column is present ("_" fills a missing one). Blank line after each
// utterance.
std::string to_conll(const Corpus &corpus);
// Inverse of to_conll for tokens, tags and optional columns. Ids are
// synthesized ("conll-000001"); intents are left empty.
std::vector<Utterance> parse_conll(std::string_view text);

}  // namespace nluforge

#endif  // NLUFORGE_DATASET_H_
