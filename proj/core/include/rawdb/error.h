// Copyright 2026 The rawdb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rawdb {

enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kAlreadyExists,
  kNotHere,
  kCorruption,
  kDecode,
  kSyntax,
  kUnsupported,
  kPlan,
  kIncompleteResult,
  kUnavailable,
  kStorageFull,
  kMetadataInconsistency,
  kPrecondition,
  kIo,
  kInternal,
};

std::string_view error_code_name(ErrorCode code);
ErrorCode error_code_from_name(std::string_view name);

// Base error type. Every failure surfaced by the library is an Error (or a
// subclass) carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the binary metadata decoders; names the byte offset at which the
// input stopped making sense.
class DecodeError : public Error {
 public:
  DecodeError(std::size_t offset, const std::string& what);

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// SQL error with a 1-based source position: kSyntax for malformed text,
// kUnsupported for constructs outside the supported subset.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& what,
              ErrorCode code = ErrorCode::kSyntax);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

[[noreturn]] void throw_error(ErrorCode code, const std::string& message);

}  // namespace rawdb
