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


#ifndef UGW_CLI_RUNNER_HPP_
#define UGW_CLI_RUNNER_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ugw/cli/config.hpp"

namespace ugw::cli {

inline constexpr const char* kToolVersion = "0.3.0";

struct OutputFile {
  std::string name;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string kind;
  std::string check;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::string config_digest;  // SHA-256 of the canonical config text
  std::vector<std::string> warnings;
  std::string started_at, finished_at;  // UTC, ISO 8601
  std::vector<OutputFile> outputs;
  std::string status;  // complete | pass | fail | inconclusive | error
  std::string error;

  // 0 on complete or pass, 1 on a failed or inconclusive check, 2 on error.
  int exit_code() const;
};

struct RunOptions {
  std::filesystem::path out_dir;
  std::size_t threads = 0;  // 0: UGW_THREADS or all cores
};

// Runs the pipeline, writes the data files and manifest.json into
// out_dir and returns the manifest. Runtime errors are caught and recorded
// in the manifest with status "error"; only a lock conflict or an unusable
// output directory throws.
RunManifest run(const RunConfig& config, const RunOptions& options);

std::string manifest_json(const RunManifest& manifest);
std::string sha256_hex(std::string_view data);
// Table of registered coefficient builders and verification checks.
std::string list_builders();

}  // namespace ugw::cli

#endif  // UGW_CLI_RUNNER_HPP_
