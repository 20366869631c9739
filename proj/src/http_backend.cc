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

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"
#include "nluforge/error.h"
#include "nluforge/paraphraser.h"

namespace nluforge {

HttpBackendConfig HttpBackendConfig::from_env() {
  HttpBackendConfig config;
  if (const char *url = std::getenv("NLU_FORGE_TRANSLATE_URL")) config.url = url;
  if (const char *key = std::getenv("NLU_FORGE_TRANSLATE_KEY")) config.api_key = key;
  return config;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  const std::string &url = config_.url;
  const size_t scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos) {
    throw UsageError("translation endpoint must be an absolute http(s) URL, got '" +
                     url + "'");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw UsageError("unsupported translation endpoint scheme '" + scheme + "'");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") {
    throw UsageError("https endpoints need a build with OpenSSL support");
  }
#endif
  const size_t path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpBackend::translate(const std::string &text, const std::string &source,
                                   const std::string &target) {
  httplib::Client client(scheme_host_port_);
  const auto sec = config_.timeout_ms / 1000;
  const auto usec = (config_.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  nlohmann::json body = {{"q", text}, {"source", source}, {"target", target}};
  if (!config_.api_key.empty()) body["api_key"] = config_.api_key;
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw BackendError("translation request failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError("translation endpoint returned HTTP " + std::to_string(res->status));
  }
  try {
    const auto reply = nlohmann::json::parse(res->body);
    return reply.at("translatedText").get<std::string>();
  } catch (const nlohmann::json::exception &e) {
    throw BackendError(std::string("malformed translation reply: ") + e.what());
  }
}

}  // namespace nluforge
