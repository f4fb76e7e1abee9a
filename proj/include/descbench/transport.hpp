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

#ifndef DESCBENCH_TRANSPORT_HPP_
#define DESCBENCH_TRANSPORT_HPP_

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace descbench {

/// One request line in, one response line out. Implementations throw
/// AdapterError when the peer is unreachable or hangs up.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual std::string round_trip(std::string_view line) = 0;
  virtual std::string describe() const = 0;
};

/// Child process speaking line-delimited messages on stdin/stdout. stderr is
/// inherited.
class SubprocessTransport final : public LineTransport {
 public:
  explicit SubprocessTransport(std::vector<std::string> argv);
  ~SubprocessTransport() override;

  SubprocessTransport(const SubprocessTransport&) = delete;
  SubprocessTransport& operator=(const SubprocessTransport&) = delete;

  std::string round_trip(std::string_view line) override;
  std::string describe() const override;

  void send_line(std::string_view line);
  std::optional<std::string> receive_line();  // nullopt on EOF

 private:
  void shutdown();

  std::vector<std::string> argv_;
  int pid_ = -1;
  int to_child_ = -1;
  std::FILE* from_child_ = nullptr;
};

/// POSTs each line to `endpoint` (http://host:port[/path], default path
/// /rpc) and returns the response body without its trailing newline.
class HttpTransport final : public LineTransport {
 public:
  explicit HttpTransport(std::string endpoint);
  ~HttpTransport() override;

  std::string round_trip(std::string_view line) override;
  std::string describe() const override { return endpoint_; }

 private:
  struct Impl;
  std::string endpoint_;
  std::unique_ptr<Impl> impl_;
};

/// Splits a command line on whitespace; single and double quotes group.
std::vector<std::string> split_command(std::string_view command);

/// Transport for an endpoint string: "http://..." or "exec:<command>".
std::unique_ptr<LineTransport> make_transport(std::string_view endpoint);

}  // namespace descbench

#endif  // DESCBENCH_TRANSPORT_HPP_
