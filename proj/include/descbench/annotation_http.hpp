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

#ifndef DESCBENCH_ANNOTATION_HTTP_HPP_
#define DESCBENCH_ANNOTATION_HTTP_HPP_

#include <memory>
#include <string>

#include "descbench/annotation.hpp"

namespace descbench {

/// HTTP front end of an AnnotationService.
///
///   POST /session                      {"participant_id": ...}
///   GET  /session/{id}
///   GET  /session/{id}/item/{k}
///   POST /session/{id}/item/{k}/pre    {"answers": {...}}
///   POST /session/{id}/item/{k}/reveal
///   POST /session/{id}/item/{k}/post   {"answers": {...}, "wrong_info_flag": b, "comment": s}
///   GET  /questions
///   GET  /admin/coverage | /admin/exclusions | /admin/ratings (line-delimited)
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationService& service);
  ~AnnotationServer();

  /// Returns the bound port, or -1.
  int bind_to_any_port(const std::string& host);
  bool bind(const std::string& host, int port);
  /// Serves until stop(); returns false on a socket error.
  bool listen_after_bind();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace descbench

#endif  // DESCBENCH_ANNOTATION_HTTP_HPP_
