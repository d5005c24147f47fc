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

// hypex: protocol-driven design and analysis of hypothetical experiments.
//
// Exit codes: 0 success, 2 usage or config, 3 data, 4 numeric,
// 5 blinding violation.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hypex/balance.h"
#include "hypex/dataset.h"
#include "hypex/design.h"
#include "hypex/design_types.h"
#include "hypex/error.h"
#include "hypex/lock.h"
#include "hypex/protocol.h"
#include "hypex/runner.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitBlinding = 5;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> draws;
  std::optional<int> threads;
  std::string out;
  std::string input;  // summarize only
};

int exit_code(hypex::ErrorKind k) {
  switch (k) {
    case hypex::ErrorKind::kUsage: return kExitUsage;
    case hypex::ErrorKind::kData: return kExitData;
    case hypex::ErrorKind::kNumeric: return kExitNumeric;
    case hypex::ErrorKind::kBlinding: return kExitBlinding;
  }
  return kExitNumeric;
}

hypex::ProtocolConfig load_config(const Flags& f) {
  hypex::ProtocolOverrides o;
  o.seed = f.seed;
  o.draws = f.draws;
  o.threads = f.threads;
  if (!f.out.empty()) o.out_dir = f.out;
  hypex::ProtocolConfig cfg = hypex::ProtocolConfig::Load(f.config, o);
  if (cfg.out_dir.empty()) {
    const char* env = std::getenv("HYPEX_OUT_DIR");
    cfg.out_dir = env != nullptr && *env != '\0' ? fs::path(env) : fs::path("hypex-out");
  }
  return cfg;
}

hypex::DesignResult read_design(const hypex::ProtocolConfig& cfg) {
  const fs::path path = cfg.out_dir / "design.json";
  if (!fs::exists(path)) {
    throw hypex::ConfigurationError("no design artifact at " + path.string() +
                                    "; run the design stage first");
  }
  try {
    return hypex::design_from_json(hypex::read_json(path));
  } catch (const hypex::Error& e) {
    throw hypex::BlindingViolationError("design artifact " + path.string() +
                                        " is not a valid design: " + e.what());
  }
}

void add_common(CLI::App* sub, Flags& f, bool with_config = true) {
  if (with_config) sub->add_option("--config", f.config, "Protocol YAML file")->required();
  sub->add_option("--seed", f.seed, "Override the protocol seed");
  sub->add_option("--draws", f.draws, "Override the Monte Carlo draw count");
  sub->add_option("--out", f.out, "Output directory (default $HYPEX_OUT_DIR or ./hypex-out)");
  sub->add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber);
}

int cmd_summarize(const Flags& f) {
  hypex::BlindedDataset ds = [&] {
    if (!f.input.empty()) return hypex::load_csv(f.input);
    const auto cfg = load_config(f);
    return hypex::load_input(cfg);
  }();
  const hypex::Json summary = hypex::design_summary(hypex::design_none(ds), ds);
  std::cout << summary.dump(2) << '\n';
  if (!f.out.empty()) hypex::write_summary_csv(fs::path(f.out) / "table1.csv", summary);
  return 0;
}

int cmd_design(const Flags& f) {
  const auto cfg = load_config(f);
  const auto ds = hypex::load_input(cfg);
  const auto design = hypex::build_design(cfg, ds);
  hypex::write_design_artifacts(cfg.out_dir, design, ds);
  std::cout << "design " << hypex::to_string(design.method) << ": " << design.retained_ids.size()
            << " units retained -> " << (cfg.out_dir / "design.json").string() << '\n';
  return 0;
}

int cmd_balance(const Flags& f) {
  const auto cfg = load_config(f);
  const auto ds = hypex::load_input(cfg);
  const auto design = read_design(cfg);
  design.validate(ds);
  const auto report = hypex::run_balance(cfg, design, ds);
  hypex::write_balance_artifacts(cfg.out_dir, report);
  std::cout << "balance: design " << (report.verdict.plausible ? "plausible" : "implausible")
            << " at alpha " << report.verdict.alpha << '\n';
  return 0;
}

int cmd_lock(const Flags& f) {
  const auto cfg = load_config(f);
  const auto ds = hypex::load_input(cfg);
  const auto design = read_design(cfg);
  design.validate(ds);
  const auto lock = hypex::lock_design(cfg, design);
  hypex::write_json(cfg.out_dir / "lock.json", lock.to_json());
  std::cout << "locked " << lock.design_id() << '\n';
  return 0;
}

int cmd_analyze(const Flags& f) {
  const auto cfg = load_config(f);
  const auto ds = hypex::load_input(cfg);
  const auto design = read_design(cfg);
  const fs::path lock_path = cfg.out_dir / "lock.json";
  if (!fs::exists(lock_path)) {
    throw hypex::BlindingViolationError("no lock at " + lock_path.string() +
                                        "; outcomes stay sealed until the design is locked");
  }
  const auto lock = hypex::DesignLock::FromJson(hypex::read_json(lock_path));
  hypex::verify_lock(cfg, design, lock);
  const auto ad = hypex::unseal_outcomes(ds, lock, design);
  std::vector<hypex::DrawSeries> draws;
  const hypex::Json inference = hypex::run_analyses(cfg, ad, &draws);
  hypex::write_inference_artifacts(cfg.out_dir, inference, draws);
  std::cout << "analyzed " << cfg.analyses.size() << " analyses under lock " << lock.design_id()
            << '\n';
  return 0;
}

int cmd_run(const Flags& f) {
  const auto cfg = load_config(f);
  const auto bundle = hypex::run_protocol(cfg);
  std::cout << "run complete: lock " << bundle.provenance.at("design_id").get<std::string>()
            << ", report " << (cfg.out_dir / "report.json").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypex: design-before-analysis for observational studies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hypex::kVersion));
  Flags f;

  auto* summarize = app.add_subcommand("summarize", "Covariate summary of a dataset");
  summarize->add_option("--input", f.input, "Dataset CSV with the default schema");
  summarize->add_option("--config", f.config, "Protocol YAML file (input and schema)");
  summarize->add_option("--out", f.out, "Write table1.csv here");
  auto* design = app.add_subcommand("design", "Build the design; writes design.json");
  add_common(design, f);
  auto* balance = app.add_subcommand("balance", "Balance diagnostics for design.json");
  add_common(balance, f);
  auto* lock = app.add_subcommand("lock", "Freeze design.json and the protocol into lock.json");
  add_common(lock, f);
  auto* analyze = app.add_subcommand("analyze", "Unseal outcomes under lock.json and analyze");
  add_common(analyze, f);
  auto* run = app.add_subcommand("run", "Full pipeline: design, balance, lock, analyze");
  add_common(run, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*summarize) {
      if (f.input.empty() == f.config.empty()) {
        throw hypex::ConfigurationError("summarize needs exactly one of --input or --config");
      }
      return cmd_summarize(f);
    }
    if (*design) return cmd_design(f);
    if (*balance) return cmd_balance(f);
    if (*lock) return cmd_lock(f);
    if (*analyze) return cmd_analyze(f);
    if (*run) return cmd_run(f);
  } catch (const hypex::Error& e) {
    std::cerr << "hypex: error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "hypex: error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "hypex: error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}
