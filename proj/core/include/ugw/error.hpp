// Copyright 2026 The ugw-local Authors
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

#ifndef UGW_ERROR_HPP_
#define UGW_ERROR_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ugw {

enum class ErrorKind {
  kInvalidArgument,
  kInvalidLaw,
  kRetryExhausted,
  kDiverged,
  kInsufficientEnsemble,
  kInsufficientData,
  kSingularDiffusion,
  kInvalidTestFunction,
  kInvalidComparison,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> step = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  // Grid step at which a time-marching routine failed, when applicable.
  std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> step_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace ugw

#endif  // UGW_ERROR_HPP_
