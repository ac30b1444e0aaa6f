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

#include "rawdb/error.h"

#include <array>
#include <utility>

#include <fmt/format.h>

namespace rawdb {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 16> kNames = {{
    {ErrorCode::kInvalidArgument, "invalid_argument"},
    {ErrorCode::kNotFound, "not_found"},
    {ErrorCode::kAlreadyExists, "already_exists"},
    {ErrorCode::kNotHere, "not_here"},
    {ErrorCode::kCorruption, "corruption"},
    {ErrorCode::kDecode, "decode"},
    {ErrorCode::kSyntax, "syntax"},
    {ErrorCode::kUnsupported, "unsupported"},
    {ErrorCode::kPlan, "plan"},
    {ErrorCode::kIncompleteResult, "incomplete_result"},
    {ErrorCode::kUnavailable, "unavailable"},
    {ErrorCode::kStorageFull, "storage_full"},
    {ErrorCode::kMetadataInconsistency, "metadata_inconsistency"},
    {ErrorCode::kPrecondition, "precondition"},
    {ErrorCode::kIo, "io"},
    {ErrorCode::kInternal, "internal"},
}};

}  // namespace

std::string_view error_code_name(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "internal";
}

ErrorCode error_code_from_name(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return ErrorCode::kInternal;
}

DecodeError::DecodeError(std::size_t offset, const std::string& what)
    : Error(ErrorCode::kDecode, fmt::format("decode error at byte {}: {}", offset, what)),
      offset_(offset) {}

SyntaxError::SyntaxError(std::size_t line, std::size_t column, const std::string& what,
                         ErrorCode code)
    : Error(code, fmt::format("{} at line {}, column {}: {}",
                              code == ErrorCode::kUnsupported ? "unsupported construct"
                                                              : "syntax error",
                              line, column, what)),
      line_(line),
      column_(column) {}

void throw_error(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace rawdb
