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


// Reference adapter for wire protocol v1 backed by the built-in mock
// scorers and the stub generation provider. Speaks over stdin/stdout, or
// over HTTP with --http.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "descbench/error.hpp"
#include "descbench/generation.hpp"
#include "descbench/protocol.hpp"
#include "descbench/scoring.hpp"
#include "httplib.h"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace descbench;
using nlohmann::json;

namespace {

struct Options {
  std::string scorer = "mock_bagofwords";  // or "generation"
  std::string image_root;
  std::size_t crash_after = 0;  // 0: never
  std::string crash_marker;     // crash only while this file is absent
  std::set<std::string> fail_ids;
  std::string family_override;
};

class Adapter {
 public:
  explicit Adapter(Options opts) : opts_(std::move(opts)) {}

  // Returns the reply line for one request line.
  std::string handle(const std::string& line) {
    std::lock_guard lock(mu_);
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::parse_error& e) {
      return error_message("", std::string("malformed JSON: ") + e.what(), false);
    }
    const std::string type = msg.value("type", "");
    const std::string id = msg.value("request_id", "");
    try {
      if (type == "hello") return hello(msg);
      if (type == "score") return score(line);
      if (type == "generate") return generate(msg);
      return error_message(id, "unexpected message type '" + type + "'", false);
    } catch (const std::exception& e) {
      return error_message(id, e.what(), false);
    }
  }

 private:
  std::string hello(const json& msg) {
    Handshake ours;
    ours.metric_id = msg.value("metric_id", "");
    if (!opts_.family_override.empty()) {
      ours.family = opts_.family_override;
    } else if (opts_.scorer == "generation") {
      ours.family = "generation";
    } else {
      ours.family = BuiltinScorer(ours.metric_id, opts_.scorer).handshake().family;
    }
    return serialize(ours);
  }

  std::string score(const std::string& line) {
    if (opts_.crash_after > 0 && served_ >= opts_.crash_after) crash();
    ScoreRequest req = parse_score_request(line);
    if (opts_.fail_ids.count(req.request_id) > 0) {
      return error_message(req.request_id, "refusing " + req.request_id, false);
    }
    // Builtin scoring keys the image by its path relative to the image root.
    if (req.image.path && !opts_.image_root.empty()) {
      req.image.path = fs::path(*req.image.path)
                           .lexically_relative(fs::absolute(opts_.image_root))
                           .generic_string();
    }
    ++served_;
    return serialize(BuiltinScorer("", opts_.scorer).score(req));
  }

  void crash() {
    if (!opts_.crash_marker.empty()) {
      if (fs::exists(opts_.crash_marker)) return;
      std::ofstream(opts_.crash_marker) << "crashed\n";
    }
    std::_Exit(70);
  }

  std::string generate(const json& msg) {
    const GenerationRequest req = generation_request_from_json(msg);
    json out = to_json(stub_.generate(req));
    out["type"] = "result";
    return out.dump();
  }

  Options opts_;
  StubGenerationProvider stub_;
  std::mutex mu_;
  std::size_t served_ = 0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Protocol v1 mock adapter"};
  Options opts;
  int http_port = -1;
  std::string fail_ids;
  app.add_option("--scorer", opts.scorer, "mock_bagofwords, mock_lengthprior or generation")
      ->check(CLI::IsMember({"mock_bagofwords", "mock_lengthprior", "generation"}))
      ->capture_default_str();
  app.add_option("--image-root", opts.image_root, "make absolute image paths relative to this");
  app.add_option("--crash-after", opts.crash_after, "exit after this many scored requests");
  app.add_option("--crash-marker", opts.crash_marker,
                 "with --crash-after: create this file and crash only if it is absent");
  app.add_option("--fail-ids", fail_ids, "comma separated request ids answered with an error");
  app.add_option("--family", opts.family_override, "advertise this family in the handshake");
  app.add_option("--http", http_port, "serve POST /rpc on this port (0 picks one)");
  CLI11_PARSE(app, argc, argv);
  for (std::size_t start = 0; start < fail_ids.size();) {
    const auto comma = fail_ids.find(',', start);
    const auto end = comma == std::string::npos ? fail_ids.size() : comma;
    if (end > start) opts.fail_ids.insert(fail_ids.substr(start, end - start));
    start = end + 1;
  }

  Adapter adapter(opts);
  if (http_port >= 0) {
    httplib::Server server;
    server.Post("/rpc", [&](const httplib::Request& req, httplib::Response& res) {
      std::string line = req.body;
      while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
      res.set_content(adapter.handle(line) + "\n", "application/x-ndjson");
    });
    int port = http_port;
    if (port == 0) {
      port = server.bind_to_any_port("127.0.0.1");
    } else if (!server.bind_to_port("127.0.0.1", port)) {
      port = -1;
    }
    if (port < 0) {
      std::cerr << "cannot bind port\n";
      return 2;
    }
    std::cout << port << std::endl;
    server.listen_after_bind();
    return 0;
  }

  std::ios::sync_with_stdio(false);
  for (std::string line; std::getline(std::cin, line);) {
    if (line.empty()) continue;
    std::cout << adapter.handle(line) << '\n' << std::flush;
  }
  return 0;
}
