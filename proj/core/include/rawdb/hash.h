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

#include <cstdint>
#include <string_view>

namespace rawdb {

// XXH64 (Yann Collet's xxHash, 64-bit variant). Used for block checksums and
// HyperLogLog hashing, so statistics files are bit-exact across builds.
std::uint64_t xxh64(std::string_view bytes, std::uint64_t seed = 0);

}  // namespace rawdb
