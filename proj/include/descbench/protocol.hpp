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

#ifndef DESCBENCH_PROTOCOL_HPP_
#define DESCBENCH_PROTOCOL_HPP_

// Wire protocol v1 shared by scorer and generation adapters. Every message is
// one JSON object on one line with a "type" member:
//
//   hello     {type, protocol, metric_id, family}       both directions
//   score     ScoreRequest                              harness -> adapter
//   generate  GenerationRequest                         harness -> adapter
//   result    ScoreResponse / GenerationResponse        adapter -> harness
//   error     {type, request_id, message, retryable}    adapter -> harness
//
// The harness sends hello first; the adapter answers with its own hello and
// must advertise the same protocol and family. Responses are never
// reordered.

#include <string>
#include <string_view>

#include "json.hpp"

namespace descbench {

class LineTransport;

inline constexpr int kProtocolVersion = 1;

struct Handshake {
  int protocol = kProtocolVersion;
  std::string metric_id;
  std::string family;  // similarity, likelihood or generation

  bool operator==(const Handshake&) const = default;
};

std::string serialize(const Handshake& hello);
Handshake parse_handshake(std::string_view line);

/// Sends `ours` and validates the peer's reply. Throws ProtocolError on a
/// version or family mismatch.
Handshake perform_handshake(LineTransport& transport, const Handshake& ours);

/// Parses one protocol line; throws ProtocolError on malformed JSON or a
/// missing/unexpected "type".
nlohmann::json parse_message(std::string_view line, std::string_view expected_type);

/// Throws AdapterError when `message` is an error message.
void raise_if_error(const nlohmann::json& message);

std::string error_message(std::string_view request_id, std::string_view what,
                          bool retryable);

}  // namespace descbench

#endif  // DESCBENCH_PROTOCOL_HPP_
