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

#include "descbench/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace descbench {

namespace {

std::atomic<LogLevel> g_level{LogLevel::kInfo};
std::mutex g_mu;

constexpr std::string_view kLevelNames[] = {"debug", "info", "warn", "error"};

}  // namespace

void set_log_level(LogLevel level) { g_level.store(level); }

void log_event(LogLevel level, std::string_view event, const nlohmann::ordered_json& fields) {
  if (level < g_level.load()) return;
  nlohmann::ordered_json line;
  line["level"] = kLevelNames[static_cast<int>(level)];
  line["event"] = event;
  for (const auto& [k, v] : fields.items()) line[k] = v;
  const std::string text = line.dump();
  std::lock_guard<std::mutex> lock(g_mu);
  std::cerr << text << '\n';
}

}  // namespace descbench
