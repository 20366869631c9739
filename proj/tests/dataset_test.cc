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

#include <filesystem>

#include "doctest.h"
#include "nluforge/dataset.h"
#include "nluforge/error.h"
#include "nluforge/io.h"
#include "nluforge/rng.h"

using namespace nluforge;

namespace {

using Tokens = std::vector<std::string>;

Utterance sample_utterance(const std::string &id) {
  Utterance u;
  u.id = id;
  u.tokens = {"quel", "est", "le", "dernier", "créatinine", "depuis", "3", "jours", "?"};
  u.slot_tags = {"O", "O", "O", "O", "B-LAB", "B-DATE", "I-DATE", "I-DATE", "O"};
  u.intents = {{"result_type", "value"},
               {"interpretation", "value"},
               {"time", "last"},
               {"time_constraint", "number"}};
  u.provenance = {"c01", "m02", "0", std::nullopt};
  return u;
}

}  // namespace

TEST_CASE("tokenize basics") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("quel est le résultat") == Tokens{"quel", "est", "le", "résultat"});
  CHECK(tokenize("créatinine du 27/03/2015 ?") == Tokens{"créatinine", "du", "27/03/2015", "?"});
  CHECK(tokenize("l'hémoglobine") == Tokens{"l'", "hémoglobine"});
  CHECK(tokenize("L’Hémoglobine") == Tokens{"l'", "hémoglobine"});
  CHECK(tokenize("Protéine C Réactive") == Tokens{"protéine", "c", "réactive"});
  CHECK(tokenize("a-t-il") == Tokens{"a-t-il"});
  CHECK(tokenize("CRP, LDH.") == Tokens{"crp", ",", "ldh", "."});
  CHECK(tokenize("3,5 mmol") == Tokens{"3,5", "mmol"});
  CHECK(tokenize("  \t\n ") == Tokens{});
}

TEST_CASE("tokenize is idempotent on its joined output") {
  const std::vector<std::string> texts = {
      "Quel est le résultat du dernier NT-proBNP depuis l'hospitalisation ?",
      "entre 01/02/2010 et 03/04/2011, la CRP était-elle élevée ?",
      "ŒSTRADIOL : 120 pg/mL (normes 30-400)",
      "donne-moi tous les résultats de d-dimères",
      "t4 libre... puis «TSH» !"};
  for (const auto &t : texts) {
    const auto once = tokenize(t);
    CHECK(tokenize(join(once)) == once);
  }
  Rng rng(3);
  const std::string alphabet = "abcé' -/0123456789?.,XYZ’";
  const auto chars = utf8_chars(alphabet);
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    const size_t n = rng.index(30);
    for (size_t i = 0; i < n; ++i) s += chars[rng.index(chars.size())];
    const auto once = tokenize(s);
    CHECK(tokenize(join(once)) == once);
  }
}

TEST_CASE("spans_from_bio") {
  CHECK(spans_from_bio({"O", "O", "O"}).empty());
  CHECK(spans_from_bio({"B-LAB", "I-LAB", "O", "B-DATE"}) ==
        std::vector<SlotSpan>{{0, 2, "LAB"}, {3, 4, "DATE"}});
  CHECK(spans_from_bio({"O", "I-LAB", "I-LAB"}) == std::vector<SlotSpan>{{1, 3, "LAB"}});
  CHECK(spans_from_bio({"B-LAB", "I-DATE"}) ==
        std::vector<SlotSpan>{{0, 1, "LAB"}, {1, 2, "DATE"}});
  CHECK(spans_from_bio({"B-LAB", "B-LAB"}) ==
        std::vector<SlotSpan>{{0, 1, "LAB"}, {1, 2, "LAB"}});
  const auto schema = LabelSchema::default_schema();
  try {
    spans_from_bio({"O", "B-DRUG"}, schema);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kData);
    CHECK(std::string(e.what()).find("B-DRUG") != std::string::npos);
  }
  CHECK(is_bio_valid({"B-LAB", "I-LAB", "O"}));
  CHECK_FALSE(is_bio_valid({"O", "I-LAB"}));
  CHECK_FALSE(is_bio_valid({"B-LAB", "I-DATE"}));
}

TEST_CASE("default schema") {
  const auto s = LabelSchema::default_schema();
  CHECK_NOTHROW(s.validate());
  CHECK(s.axis("result_type").categories.size() == 5);
  CHECK(s.axis("interpretation").categories.size() == 5);
  CHECK(s.axis("time").categories.size() == 3);
  CHECK(s.axis("time_constraint").categories.size() == 4);
  CHECK(s.slot_kinds() == Tokens{"LAB", "DATE"});
  CHECK(parse_schema(schema_to_json(s)).checksum() == s.checksum());
}

TEST_CASE("schema validation") {
  auto s = LabelSchema::default_schema();
  s.slot_labels = {"O", "B-LAB", "I-LAB", "I-DATE"};
  CHECK_THROWS_AS(s.validate(), Error);
  s = LabelSchema::default_schema();
  s.intent_axes[2].categories.push_back("middle");
  CHECK_THROWS_AS(s.validate(), Error);
  s.allow_custom_counts = true;
  CHECK_NOTHROW(s.validate());
  s = LabelSchema::default_schema();
  s.intent_axes[0].categories[3] = "numeric_count";
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("corpus round trip") {
  Corpus c;
  c.utterances = {sample_utterance("u-1"), sample_utterance("u-2")};
  c.utterances[1].provenance.paraphrase_lang = "de";
  c.utterances[1].lemmas = Tokens(9, "_");
  c.utterances[1].pos = Tokens(9, "NOUN");
  const std::string text = serialize_corpus(c);
  const Corpus back = parse_corpus(text, c.schema);
  CHECK(back.utterances == c.utterances);
  CHECK(serialize_corpus(back) == text);

  const auto dir = std::filesystem::temp_directory_path() / "nluforge_dataset_test";
  std::filesystem::remove_all(dir);
  const std::string path = (dir / "c.jsonl").string();
  write_corpus(c, path);
  CHECK(read_file(path) == text);
  CHECK(read_corpus(path).utterances == c.utterances);
  write_file_atomic(path, "");
  CHECK(read_corpus(path).utterances.empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("corpus parse errors carry line numbers and ids") {
  Corpus c;
  c.utterances = {sample_utterance("u-1")};
  std::string good = serialize_corpus(c);
  Utterance bad = sample_utterance("u-2");
  bad.slot_tags.pop_back();
  const std::string text = good + utterance_to_json(bad) + "\n";
  try {
    parse_corpus(text, c.schema);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kData);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_corpus("{not json\n", c.schema), Error);
  CHECK_THROWS_AS(parse_corpus(good + good, c.schema), Error);  // duplicate id

  Utterance wrong = sample_utterance("u-3");
  wrong.intents["time"] = "sometimes";
  try {
    validate_utterance(wrong, c.schema);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("u-3") != std::string::npos);
  }
  wrong = sample_utterance("u-4");
  wrong.slot_tags[5] = "I-DATE";
  wrong.slot_tags[4] = "O";
  CHECK_THROWS_AS(validate_utterance(wrong, c.schema), Error);
}

TEST_CASE("conll export") {
  Corpus empty;
  CHECK(to_conll(empty).empty());
  Corpus c;
  Utterance u = sample_utterance("u-1");
  u.tokens = {"créatinine", "?"};
  u.slot_tags = {"B-LAB", "O"};
  c.utterances = {u};
  CHECK(to_conll(c) == "créatinine\tB-LAB\n?\tO\n\n");
  c.utterances[0].lemmas = {"créatinine", "?"};
  c.utterances[0].pos = {"NOUN", "PUNCT"};
  CHECK(to_conll(c) == "créatinine\tcréatinine\tNOUN\tB-LAB\n?\t?\tPUNCT\tO\n\n");
  c.utterances.push_back(sample_utterance("u-2"));
  const auto back = parse_conll(to_conll(c));
  REQUIRE(back.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(back[i].tokens == c.utterances[i].tokens);
    CHECK(back[i].slot_tags == c.utterances[i].slot_tags);
  }
}
