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

#include <chrono>
#include <mutex>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "nluforge/error.h"
#include "nluforge/paraphraser.h"

using namespace nluforge;
using nlohmann::json;

namespace {

std::vector<std::string> g_warnings;
void capture(const std::string &m) { g_warnings.push_back(m); }

struct WarningCapture {
  WarningCapture() {
    g_warnings.clear();
    set_warning_sink(&capture);
  }
  ~WarningCapture() { set_warning_sink(nullptr); }
};

TemplatePack one_core_pack() {
  return parse_pack(R"({
    "cores": [{"id": "c1", "text": "quel est le dernier <lab> ?",
               "intents": {"result_type": "value", "interpretation": "value", "time": "last"}}],
    "modifiers": [{"id": "m1", "text": "depuis <date|event>", "time_constraint": "date"}],
    "lab_lexicon": ["créatinine"]
  })");
}

PivotConfig pivots(size_t n, std::vector<std::string> pool, uint64_t seed = 1) {
  PivotConfig c;
  c.n_languages = n;
  c.language_pool = std::move(pool);
  c.seed = seed;
  return c;
}

// Counts calls and forwards to a mock; optionally garbles sentinels.
class CountingBackend : public TranslationBackend {
 public:
  explicit CountingBackend(TranslationBackend &inner) : inner_(inner) {}
  std::string translate(const std::string &text, const std::string &s,
                        const std::string &t) override {
    ++calls;
    return inner_.translate(text, s, t);
  }
  int calls = 0;

 private:
  TranslationBackend &inner_;
};

}  // namespace

TEST_CASE("protect and unprotect slots") {
  const auto m = protect_slots("le <lab> depuis <date|event>");
  CHECK(m.text == "le XSLOT0 depuis XSLOT1");
  CHECK(m.mask_map.at("XSLOT0") == "<lab>");
  CHECK(m.mask_map.at("XSLOT1") == "<date|event>");
  CHECK(unprotect_slots(m.text, m.mask_map) == "le <lab> depuis <date|event>");
  CHECK_THROWS_AS(protect_slots("le <lab"), Error);
  CHECK_THROWS_AS(protect_slots("le lab>"), Error);
  CHECK_THROWS_AS(protect_slots("le <l<ab>"), Error);

  std::map<std::string, std::string> many;
  std::string masked;
  for (int i = 0; i < 12; ++i) {
    many["XSLOT" + std::to_string(i)] = "<p" + std::to_string(i) + ">";
    masked += "XSLOT" + std::to_string(i) + " ";
  }
  CHECK(unprotect_slots(masked, many).find("<p10> <p11>") != std::string::npos);
}

TEST_CASE("count_sentinel ignores longer sentinels") {
  CHECK(count_sentinel("a XSLOT1 b", "XSLOT1") == 1);
  CHECK(count_sentinel("a XSLOT10 b", "XSLOT1") == 0);
  CHECK(count_sentinel("XSLOT0 XSLOT0", "XSLOT0") == 2);
  CHECK(count_sentinel("", "XSLOT0") == 0);
}

TEST_CASE("mock backend rewrites on the return leg with longest match") {
  MockBackend mock({{"quel est", "quelle est"}, {"quel est le dernier", "donne-moi le dernier"},
                    {"dernier", "plus récent"}});
  CHECK(mock.translate("quel est le dernier XSLOT0", "fr", "de") ==
        "quel est le dernier XSLOT0");
  CHECK(mock.translate("quel est le dernier XSLOT0", "de", "fr") ==
        "donne-moi le dernier XSLOT0");
  CHECK(mock.translate("quel est ton dernier", "de", "fr") == "quelle est ton plus récent");
  CHECK(pivot_translate("le dernier", "de", mock) == "le plus récent");

  auto cfg = MockBackend::from_json(
      R"({"default": {"a": "b"}, "pivots": {"de": {"a": "c"}}, "fail": ["xx"]})");
  CHECK(cfg.translate("a", "de", "fr") == "c");
  CHECK(cfg.translate("a", "en", "fr") == "b");
  try {
    pivot_translate("a", "xx", cfg);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kBackend);
    CHECK(std::string(e.what()).find("xx") != std::string::npos);
  }
  CHECK(MockBackend::from_json(R"({"a": "z"})").translate("a", "en", "fr") == "z");
}

TEST_CASE("paraphrase_pack adds unique paraphrases that keep placeholders") {
  MockBackend mock({});
  mock.set_pivot_table("de", {{"quel est", "quelle est"}});
  mock.set_pivot_table("en", {{"quel est le dernier", "donne le dernier"}});
  mock.set_pivot_table("es", {{"quel est", "quelle est"}});  // same as de
  mock.set_pivot_table("it", {{"XSLOT0", "le test"}});      // drops the placeholder
  mock.set_pivot_table("pt", {{"depuis", "à partir de"}});
  ParaphraseReport rep;
  const auto pack = one_core_pack();
  const auto out = paraphrase_pack(pack, pivots(5, {"de", "en", "es", "it", "pt"}), mock, &rep);
  CHECK(rep.calls == 10);
  CHECK(rep.failures == 0);
  CHECK(rep.rejected_sentinel == 2);  // "it" on the core and on the modifier
  CHECK(out.cores.size() == 3);
  CHECK(out.cores[0].id == "c1");
  CHECK(out.modifiers.size() == 2);
  std::set<std::string> texts;
  for (const auto &c : out.cores) {
    texts.insert(c.text);
    CHECK(c.text.find("<lab>") != std::string::npos);
    CHECK(c.intents == pack.cores[0].intents);
  }
  CHECK(texts.count("quelle est le dernier <lab> ?"));
  CHECK(texts.count("donne le dernier <lab> ?"));
  const auto &para = out.cores[1];
  REQUIRE(para.paraphrase_lang);
  CHECK(para.source_id == std::optional<std::string>("c1"));
  CHECK(para.id == "c1~" + *para.paraphrase_lang);
  CHECK(out.modifiers[1].text == "à partir de <date|event>");
  CHECK(out.modifiers[1].time_constraint == "date");
  CHECK_NOTHROW(out.validate());

  // Same seed, same result.
  const auto again = paraphrase_pack(pack, pivots(5, {"de", "en", "es", "it", "pt"}), mock);
  CHECK(pack_to_json(again) == pack_to_json(out));
}

TEST_CASE("identity backend adds nothing") {
  IdentityBackend id;
  ParaphraseReport rep;
  const auto out = paraphrase_pack(one_core_pack(), pivots(3, {"de", "en", "es"}), id, &rep);
  CHECK(out.cores.size() == 1);
  CHECK(rep.duplicates == 6);
  CHECK(rep.added_cores == 0);
}

TEST_CASE("pivot sampling draws without replacement from the pool") {
  MockBackend mock({});
  CountingBackend counting(mock);
  const auto pool = default_language_pool();
  CHECK(pool.size() == 60);
  CHECK(std::set<std::string>(pool.begin(), pool.end()).size() == 60);
  // A distinct table per pivot makes every paraphrase unique, so the added
  // ids reveal the sampled languages.
  for (const auto &l : pool) mock.set_pivot_table(l, {{"quel", "quel-" + l}});
  const auto out = paraphrase_pack(one_core_pack(), pivots(10, pool, 4), counting);
  CHECK(counting.calls == 40);
  std::set<std::string> langs;
  for (const auto &c : out.cores) {
    if (c.paraphrase_lang) langs.insert(*c.paraphrase_lang);
  }
  CHECK(langs.size() == 10);
  CHECK_THROWS_AS(paraphrase_pack(one_core_pack(), pivots(4, {"de", "en"}), mock), Error);
}

TEST_CASE("failing pivots are counted and an all-failed template warns") {
  WarningCapture wc;
  MockBackend mock(std::map<std::string, std::string>{{"quel", "lequel"}});
  mock.set_failing("de");
  ParaphraseReport rep;
  auto out = paraphrase_pack(one_core_pack(), pivots(2, {"de", "en"}), mock, &rep);
  CHECK(rep.failures == 2);
  CHECK(out.cores.size() == 2);
  CHECK(g_warnings.empty());

  mock.set_failing("en");
  ParaphraseReport rep2;
  out = paraphrase_pack(one_core_pack(), pivots(2, {"de", "en"}), mock, &rep2);
  CHECK(rep2.failures == 4);
  CHECK(out.cores.size() == 1);
  REQUIRE(g_warnings.size() == 2);
  CHECK(g_warnings[0].find("c1") != std::string::npos);
}

TEST_CASE("concurrent calls give the same pack as sequential calls") {
  MockBackend mock({});
  for (const auto &l : default_language_pool()) mock.set_pivot_table(l, {{"est", "est-" + l}});
  auto seq = pivots(10, default_language_pool(), 8);
  auto par = seq;
  par.max_in_flight = 4;
  CHECK(pack_to_json(paraphrase_pack(one_core_pack(), seq, mock)) ==
        pack_to_json(paraphrase_pack(one_core_pack(), par, mock)));
}

TEST_CASE("http backend against a local stub server") {
  httplib::Server server;
  std::mutex mu;
  std::vector<json> requests;
  server.Post("/translate", [&](const httplib::Request &req, httplib::Response &res) {
    const auto body = json::parse(req.body);
    {
      std::lock_guard<std::mutex> lock(mu);
      requests.push_back(body);
    }
    const std::string q = body.at("q");
    if (q == "boom") {
      res.status = 503;
      return;
    }
    if (q == "garbage") {
      res.set_content("not json", "text/plain");
      return;
    }
    std::string out = q;
    if (body.at("target") == "fr") out = "[" + q + "]";
    res.set_content(json{{"translatedText", out}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&]() { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackendConfig cfg;
  cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/translate";
  cfg.api_key = "k";
  cfg.timeout_ms = 5000;
  HttpBackend http(cfg);
  CHECK(pivot_translate("le XSLOT0", "de", http) == "[le XSLOT0]");
  {
    std::lock_guard<std::mutex> lock(mu);
    REQUIRE(requests.size() == 2);
    CHECK(requests[0].at("source") == "fr");
    CHECK(requests[0].at("target") == "de");
    CHECK(requests[0].at("api_key") == "k");
    CHECK(requests[1].at("source") == "de");
    CHECK(requests[1].at("target") == "fr");
  }
  try {
    http.translate("boom", "fr", "de");
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kBackend);
    CHECK(std::string(e.what()).find("503") != std::string::npos);
  }
  CHECK_THROWS_AS(http.translate("garbage", "fr", "de"), Error);

  // Through the paraphraser with several calls in flight.
  auto pc = pivots(3, {"de", "en", "es"});
  pc.max_in_flight = 3;
  ParaphraseReport rep;
  const auto out = paraphrase_pack(one_core_pack(), pc, http, &rep);
  CHECK(rep.calls == 6);
  CHECK(rep.failures == 0);
  CHECK(out.cores.size() == 2);  // "[...]" differs from the original once
  CHECK(out.cores[1].text == "[quel est le dernier <lab> ?]");

  server.stop();
  th.join();

  HttpBackend closed(cfg);
  CHECK_THROWS_AS(closed.translate("x", "fr", "de"), Error);
  cfg.url = "ftp://example";
  CHECK_THROWS_AS(HttpBackend{cfg}, Error);
  cfg.url = "";
  CHECK_THROWS_AS(HttpBackend{cfg}, Error);
}
