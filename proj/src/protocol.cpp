// Copyright 2026 The descbench Authors.
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

#include "descbench/protocol.hpp"

#include "descbench/error.hpp"
#include "descbench/transport.hpp"

namespace descbench {

using nlohmann::json;
using nlohmann::ordered_json;

std::string serialize(const Handshake& hello) {
  ordered_json j;
  j["type"] = "hello";
  j["protocol"] = hello.protocol;
  j["metric_id"] = hello.metric_id;
  j["family"] = hello.family;
  return j.dump();
}

Handshake parse_handshake(std::string_view line) {
  const json j = parse_message(line, "hello");
  try {
    return {j.at("protocol").get<int>(), j.value("metric_id", std::string()),
            j.at("family").get<std::string>()};
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed hello: ") + e.what());
  }
}

Handshake perform_handshake(LineTransport& transport, const Handshake& ours) {
  const Handshake theirs = parse_handshake(transport.round_trip(serialize(ours)));
  if (theirs.protocol != ours.protocol) {
    throw ProtocolError("adapter speaks protocol " + std::to_string(theirs.protocol) +
                        ", expected " + std::to_string(ours.protocol));
  }
  if (theirs.family != ours.family) {
    throw ProtocolError("adapter advertises family '" + theirs.family +
                        "', expected '" + ours.family + "'");
  }
  return theirs;
}

json parse_message(std::string_view line, std::string_view expected_type) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed protocol line: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw ProtocolError("protocol message lacks a 'type'");
  }
  raise_if_error(j);
  if (j["type"].get<std::string>() != expected_type) {
    throw ProtocolError("expected '" + std::string(expected_type) +
                        "' message, got '" + j["type"].get<std::string>() + "'");
  }
  return j;
}

void raise_if_error(const json& message) {
  if (message.value("type", std::string()) != "error") return;
  throw RemoteError("adapter error for request '" +
                         message.value("request_id", std::string()) +
                         "': " + message.value("message", std::string("unknown")),
                     message.value("retryable", false));
}

std::string error_message(std::string_view request_id, std::string_view what,
                          bool retryable) {
  ordered_json j;
  j["type"] = "error";
  j["request_id"] = request_id;
  j["message"] = what;
  j["retryable"] = retryable;
  return j.dump();
}

}  // namespace descbench
