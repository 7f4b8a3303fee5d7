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

#include "ugw/error.hpp"

namespace ugw {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kInvalidLaw: return "invalid-law";
    case ErrorKind::kRetryExhausted: return "retry-exhausted";
    case ErrorKind::kDiverged: return "diverged";
    case ErrorKind::kInsufficientEnsemble: return "insufficient-ensemble";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kSingularDiffusion: return "singular-diffusion";
    case ErrorKind::kInvalidTestFunction: return "invalid-test-function";
    case ErrorKind::kInvalidComparison: return "invalid-comparison";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> step)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), step_(step) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace ugw
