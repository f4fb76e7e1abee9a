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

#include "descbench/transport.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include "descbench/error.hpp"
#include "httplib.h"

namespace descbench {
namespace {

void ignore_sigpipe() {
  static const bool once = [] {
    struct sigaction sa {};
    sa.sa_handler = SIG_IGN;
    sigemptyset(&sa.sa_mask);
    sigaction(SIGPIPE, &sa, nullptr);
    return true;
  }();
  (void)once;
}

}  // namespace

SubprocessTransport::SubprocessTransport(std::vector<std::string> argv)
    : argv_(std::move(argv)) {
  if (argv_.empty()) throw ValidationError("empty adapter command");
  ignore_sigpipe();

  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw AdapterError("pipe() failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw AdapterError("pipe() failed");
  }

  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);

  pid_ = fork();
  if (pid_ < 0) throw AdapterError("fork() failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = fdopen(out_pipe[0], "r");
}

SubprocessTransport::~SubprocessTransport() { shutdown(); }

void SubprocessTransport::shutdown() {
  if (to_child_ >= 0) {
    close(to_child_);
    to_child_ = -1;
  }
  if (from_child_ != nullptr) {
    std::fclose(from_child_);
    from_child_ = nullptr;
  }
  if (pid_ > 0) {
    // Adapters exit on EOF; give them a moment before killing.
    int status = 0;
    for (int i = 0; i < 200; ++i) {
      if (waitpid(pid_, &status, WNOHANG) != 0) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

void SubprocessTransport::send_line(std::string_view line) {
  std::string buf(line);
  buf.push_back('\n');
  std::size_t off = 0;
  while (off < buf.size()) {
    const ssize_t n = write(to_child_, buf.data() + off, buf.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw AdapterError("adapter '" + argv_[0] + "' closed its input: " +
                         std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> SubprocessTransport::receive_line() {
  std::string line;
  int c;
  while ((c = std::fgetc(from_child_)) != EOF) {
    if (c == '\n') return line;
    line.push_back(static_cast<char>(c));
  }
  if (!line.empty()) return line;
  return std::nullopt;
}

std::string SubprocessTransport::round_trip(std::string_view line) {
  send_line(line);
  auto response = receive_line();
  if (!response) {
    throw AdapterError("adapter '" + argv_[0] + "' exited before responding");
  }
  return *response;
}

std::string SubprocessTransport::describe() const {
  std::string out = "exec:";
  for (std::size_t i = 0; i < argv_.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += argv_[i];
  }
  return out;
}

struct HttpTransport::Impl {
  std::unique_ptr<httplib::Client> client;
  std::string path;
};

HttpTransport::HttpTransport(std::string endpoint)
    : endpoint_(std::move(endpoint)), impl_(std::make_unique<Impl>()) {
  constexpr std::string_view kScheme = "http://";
  if (endpoint_.rfind(kScheme, 0) != 0) {
    throw ValidationError("HTTP endpoint must start with http://: " + endpoint_);
  }
  const std::string rest = endpoint_.substr(kScheme.size());
  const auto slash = rest.find('/');
  const std::string host_port = rest.substr(0, slash);
  impl_->path = slash == std::string::npos ? "/rpc" : rest.substr(slash);
  impl_->client = std::make_unique<httplib::Client>("http://" + host_port);
  impl_->client->set_connection_timeout(5, 0);
  impl_->client->set_read_timeout(300, 0);
}

HttpTransport::~HttpTransport() = default;

std::string HttpTransport::round_trip(std::string_view line) {
  auto res = impl_->client->Post(impl_->path, std::string(line) + "\n",
                                 "application/x-ndjson");
  if (!res) {
    throw AdapterError("HTTP adapter unreachable at " + endpoint_ + ": " +
                       httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw AdapterError("HTTP adapter at " + endpoint_ + " returned status " +
                       std::to_string(res->status));
  }
  std::string body = res->body;
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) {
    body.pop_back();
  }
  return body;
}

std::vector<std::string> split_command(std::string_view command) {
  std::vector<std::string> out;
  std::string cur;
  bool in_token = false;
  char quote = 0;
  for (char c : command) {
    if (quote != 0) {
      if (c == quote) {
        quote = 0;
      } else {
        cur.push_back(c);
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_token = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_token) out.push_back(std::move(cur));
      cur.clear();
      in_token = false;
    } else {
      cur.push_back(c);
      in_token = true;
    }
  }
  if (quote != 0) throw ValidationError("unterminated quote in command");
  if (in_token) out.push_back(std::move(cur));
  return out;
}

std::unique_ptr<LineTransport> make_transport(std::string_view endpoint) {
  if (endpoint.rfind("http://", 0) == 0) {
    return std::make_unique<HttpTransport>(std::string(endpoint));
  }
  if (endpoint.rfind("exec:", 0) == 0) {
    return std::make_unique<SubprocessTransport>(
        split_command(endpoint.substr(5)));
  }
  throw ValidationError("unrecognized adapter endpoint '" + std::string(endpoint) +
                        "' (expected http://... or exec:<command>)");
}

}  // namespace descbench
