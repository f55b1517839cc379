// Copyright 2026 The OctoANN Authors.
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace octoann {

using RecordId = std::uint32_t;
inline constexpr RecordId kInvalidId = 0xffffffffu;

enum class ElemKind : std::uint8_t { f32 = 0, u8 = 1, i8 = 2 };
enum class Metric : std::uint8_t { l2 = 0, cosine = 1 };

inline std::size_t elem_size(ElemKind k) {
  return k == ElemKind::f32 ? 4 : 1;
}

const char* elem_name(ElemKind k);
const char* metric_name(Metric m);
ElemKind elem_from_name(const std::string& s);
Metric metric_from_name(const std::string& s);

/// Error type thrown by all octoann operations on contract violations,
/// malformed files, and unsatisfiable configurations.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void raise(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) raise(msg);
}

}  // namespace octoann
