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

// Stage orchestration: design -> balance -> lock -> analysis. Every stage
// before the lock sees a BlindedDataset only.

#ifndef HYPEX_RUNNER_H_
#define HYPEX_RUNNER_H_

#include <filesystem>
#include <string>
#include <vector>

#include "hypex/balance.h"
#include "hypex/dataset.h"
#include "hypex/design_types.h"
#include "hypex/lock.h"
#include "hypex/protocol.h"

namespace hypex {

inline constexpr const char* kVersion = "0.1.0";

struct DrawSeries {
  std::string name;  // file stem, e.g. "fisher_welch_t_D.1"
  std::string column;
  std::vector<double> values;
};

struct ReportBundle {
  Json design_summary;  // covariate summary per retained sample
  Json balance;         // balance report with verdict
  Json inference;       // one entry per analysis
  Json provenance;      // config copy, lock hash, seed, version
  std::vector<DrawSeries> draws;
};

BlindedDataset load_input(const ProtocolConfig& cfg);

DesignResult build_design(const ProtocolConfig& cfg, const BlindedDataset& ds);

// Covariate summaries of the full data and of the design's retained units.
Json design_summary(const DesignResult& design, const BlindedDataset& ds);

BalanceReport run_balance(const ProtocolConfig& cfg, const DesignResult& design,
                          const BlindedDataset& ds);

DesignLock lock_design(const ProtocolConfig& cfg, const DesignResult& design);

// Throws BlindingViolationError unless `lock` matches both the design and
// the protocol.
void verify_lock(const ProtocolConfig& cfg, const DesignResult& design, const DesignLock& lock);

// Runs every listed analysis on the unsealed data.
Json run_analyses(const ProtocolConfig& cfg, const AnalysisDataset& ad,
                  std::vector<DrawSeries>* draws);

// Full pipeline; writes the bundle under cfg.out_dir.
ReportBundle run_protocol(const ProtocolConfig& cfg);

// Artifact I/O. JSON files are canonical (sorted keys) plus a newline.
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);
void write_design_artifacts(const std::filesystem::path& dir, const DesignResult& design,
                            const BlindedDataset& ds);
void write_balance_artifacts(const std::filesystem::path& dir, const BalanceReport& report);
void write_inference_artifacts(const std::filesystem::path& dir, const Json& inference,
                               const std::vector<DrawSeries>& draws);
void write_summary_csv(const std::filesystem::path& path, const Json& summary);

}  // namespace hypex

#endif  // HYPEX_RUNNER_H_
