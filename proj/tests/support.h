// Copyright 2026 The hypex Authors
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

// Shared fixtures for the unit and property tests.

#ifndef HYPEX_TESTS_SUPPORT_H_
#define HYPEX_TESTS_SUPPORT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hypex/dataset.h"
#include "hypex/design_types.h"
#include "hypex/lock.h"

namespace hypex::testing {

// Children aged 3-19 with height growing in age, smoking parents far more
// common among older children, and log FEV linear in height with a small
// negative exposure effect. Synthetic; shaped like the public study file
// but not a copy of it.
struct SyntheticOptions {
  int n = 654;
  std::uint64_t seed = 1;
  double effect = -0.1;
  double noise = 0.15;
};
std::vector<std::string> synthetic_fev_rows(const SyntheticOptions& o = {});
std::string synthetic_fev_csv(const SyntheticOptions& o = {});
BlindedDataset synthetic_fev(const SyntheticOptions& o = {});

// Small dataset from parallel vectors; ids are 1..n.
BlindedDataset make_dataset(const std::vector<int>& treatment, const std::vector<double>& outcome,
                            const std::vector<int>& age = {}, const std::vector<double>& height = {},
                            const std::vector<int>& sex = {});

// freeze + unseal with an empty protocol.
AnalysisDataset unsealed(const BlindedDataset& ds, const DesignResult& design);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& text);

struct CommandResult {
  int exit_code = -1;
  std::string out;  // stdout and stderr
};
// Runs the hypex binary with `args` (already shell-quoted where needed).
CommandResult run_hypex(const std::string& args, const std::string& env = "");

}  // namespace hypex::testing

#endif  // HYPEX_TESTS_SUPPORT_H_
