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

#ifndef DESCBENCH_ERROR_HPP_
#define DESCBENCH_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace descbench {

enum class ErrorCode {
  kValidation,    // bad input data or arguments
  kAdapter,       // external scorer / provider failure
  kProtocol,      // wire protocol violation
  kPrerequisite,  // upstream pipeline stage missing
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorCode::kValidation, what) {}
};

class AdapterError : public Error {
 public:
  explicit AdapterError(const std::string& what, bool retryable = true)
      : Error(ErrorCode::kAdapter, what), retryable_(retryable) {}

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

/// The adapter answered a single request with an error message; the
/// connection itself is healthy.
class RemoteError : public AdapterError {
 public:
  RemoteError(const std::string& what, bool retryable)
      : AdapterError(what, retryable) {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what)
      : Error(ErrorCode::kProtocol, what) {}
};

class PrerequisiteError : public Error {
 public:
  explicit PrerequisiteError(const std::string& what)
      : Error(ErrorCode::kPrerequisite, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

// Process exit status for the CLI: 2 validation, 3 adapter/protocol,
// 4 prerequisite missing.
inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
    case ErrorCode::kIo:
      return 2;
    case ErrorCode::kAdapter:
    case ErrorCode::kProtocol:
      return 3;
    case ErrorCode::kPrerequisite:
      return 4;
  }
  return 1;
}

}  // namespace descbench

#endif  // DESCBENCH_ERROR_HPP_
