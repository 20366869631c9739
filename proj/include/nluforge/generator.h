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

#ifndef NLUFORGE_GENERATOR_H_
#define NLUFORGE_GENERATOR_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nluforge/dataset.h"
#include "nluforge/rng.h"

namespace nluforge {

struct CoreTemplate {
  std::string id;
  std::string text;  // exactly one "<lab>"
  std::map<std::string, std::string> intents;
  // Set on templates produced by the paraphraser.
  std::optional<std::string> paraphrase_lang;
  std::optional<std::string> source_id;
};

// A temporal modifier appended after the core question. Its placeholder
// lists the admissible expression kinds, e.g. "<date|duration|event>".
struct ModifierTemplate {
  std::string id;
  std::string text;
  std::string time_constraint;
  std::optional<std::string> paraphrase_lang;
  std::optional<std::string> source_id;
};

struct TemplatePack {
  std::vector<CoreTemplate> cores;
  std::vector<ModifierTemplate> modifiers;
  std::vector<std::string> lab_lexicon;
  // Fillers for "<event>" placeholders ("l'hospitalisation", ...). Optional.
  std::vector<std::string> event_lexicon;
  LabelSchema schema = LabelSchema::default_schema();

  // Throws DataError naming the offending template.
  void validate() const;
};

enum class DateKind { kAbsolute, kRelative, kRange, kEvent };

struct DateExpr {
  std::vector<std::string> tokens;
  DateKind kind = DateKind::kAbsolute;
};

// Placeholder vocabulary: date -> absolute, duration -> relative,
// range -> range, event -> event.
std::optional<DateKind> date_kind_from_name(std::string_view name);

TemplatePack parse_pack(std::string_view json_text,
                        const LabelSchema &schema = LabelSchema::default_schema());
TemplatePack read_pack(const std::string &path,
                       const LabelSchema &schema = LabelSchema::default_schema());
std::string pack_to_json(const TemplatePack &pack);

// absolute: ["dd/mm/yyyy"]; relative: ["depuis", N, unit];
// range: ["entre", d1, "et", d2] with d1 <= d2; event: no tokens.
DateExpr synth_date(DateKind kind, Rng &rng);

// Parses "dd/mm/yyyy" into (y, m, d); nullopt when malformed or not a
// calendar date.
std::optional<std::tuple<int, int, int>> parse_date(std::string_view token);

// Renders one utterance. The LAB span covers exactly the mention tokens; the
// DATE span covers every token of the rendered modifier, head word included.
// When the modifier's last literal word equals the first word of the
// generated expression ("depuis" + "depuis 3 jours") it is emitted once.
Utterance instantiate(const TemplatePack &pack, const CoreTemplate &core,
                      const ModifierTemplate *modifier, size_t mention_index,
                      Rng &rng);

struct GenerateOptions {
  double modifier_prob = 0.5;
  std::string id_prefix = "u";
  // Consecutive duplicate draws tolerated before giving up.
  size_t max_consecutive_collisions = 2000;
};

// Exactly `count` utterances, unique on token sequence.
Corpus generate(const TemplatePack &pack, size_t count, uint64_t seed,
                const GenerateOptions &opts = {});

// Disjoint partition of cores and mentions. Each half receives
// round(n * ratio) items for the first half; modifiers and the event lexicon
// are shared by both halves.
std::pair<TemplatePack, TemplatePack> split_pack(const TemplatePack &pack,
                                                 double template_ratio,
                                                 double mention_ratio,
                                                 uint64_t seed);

}  // namespace nluforge

#endif  // NLUFORGE_GENERATOR_H_
