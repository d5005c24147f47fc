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

#include "support.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#ifndef HYPEX_BIN
#error "HYPEX_BIN must point at the hypex executable"
#endif

namespace hypex::testing {

std::vector<std::string> synthetic_fev_rows(const SyntheticOptions& o) {
  std::mt19937_64 gen(o.seed);
  std::uniform_int_distribution<int> age_dist(3, 19);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::string> rows;
  for (int i = 0; i < o.n; ++i) {
    const int age = age_dist(gen);
    const int sex = coin(gen) ? 1 : 0;
    double ht = 46.0 + 1.6 * (age - 3) + (sex == 1 && age > 12 ? 2.0 : 0.0) + 2.5 * z(gen);
    ht = std::round(ht * 2.0) / 2.0;
    const double p = 1.0 / (1.0 + std::exp(-(-9.0 + 0.5 * age)));
    const int smoke = u(gen) < p ? 1 : 0;
    double fev = std::exp(-2.2 + 0.042 * ht + o.noise * z(gen)) + o.effect * smoke;
    fev = std::max(0.3, std::round(fev * 1000.0) / 1000.0);
    std::ostringstream row;
    row << age << ',' << fev << ',' << ht << ',' << sex << ',' << smoke;
    rows.push_back(row.str());
  }
  return rows;
}

std::string synthetic_fev_csv(const SyntheticOptions& o) {
  std::string out = "age,fev,ht,sex,smoke\n";
  for (const auto& r : synthetic_fev_rows(o)) out += r + "\n";
  return out;
}

BlindedDataset synthetic_fev(const SyntheticOptions& o) {
  std::istringstream in(synthetic_fev_csv(o));
  return parse_csv(in);
}

BlindedDataset make_dataset(const std::vector<int>& treatment, const std::vector<double>& outcome,
                            const std::vector<int>& age, const std::vector<double>& height,
                            const std::vector<int>& sex) {
  std::vector<UnitRecord> units;
  for (std::size_t i = 0; i < treatment.size(); ++i) {
    UnitRecord u;
    u.id = static_cast<int>(i) + 1;
    u.treatment = treatment[i];
    u.age = age.empty() ? 10 + static_cast<int>(i % 7) : age[i];
    u.height = height.empty() ? 55.0 + static_cast<double>((i * 7) % 11) : height[i];
    u.sex = sex.empty() ? static_cast<int>(i % 2) : sex[i];
    units.push_back(u);
  }
  return BlindedDataset::FromUnits(std::move(units), outcome);
}

AnalysisDataset unsealed(const BlindedDataset& ds, const DesignResult& design) {
  return unseal_outcomes(ds, freeze(design, Json::object()), design);
}

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "hypex-test-XXXXXX").string();
  if (mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

CommandResult run_hypex(const std::string& args, const std::string& env) {
  const std::string cmd = env + (env.empty() ? "" : " ") + HYPEX_BIN + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed");
  CommandResult r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace hypex::testing
