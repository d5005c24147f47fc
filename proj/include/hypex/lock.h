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

// The design lock and the only path from sealed to readable outcomes.

#ifndef HYPEX_LOCK_H_
#define HYPEX_LOCK_H_

#include <span>
#include <string>

#include "hypex/dataset.h"
#include "hypex/design_types.h"

namespace hypex {

// SHA-256 (hex) of canonical_dump({"design": design, "protocol": protocol}).
std::string content_hash(const DesignResult& design, const Json& protocol);

class DesignLock {
 public:
  const std::string& design_id() const { return design_id_; }
  const std::string& hash() const { return hash_; }
  const Json& protocol() const { return protocol_; }
  // Creation time, informational only; not part of the hash.
  const std::string& timestamp() const { return timestamp_; }

  bool verifies(const DesignResult& design) const;

  Json to_json() const;
  // Throws ParseError on a malformed document.
  static DesignLock FromJson(const Json& j);

 private:
  friend DesignLock freeze(const DesignResult&, const Json&, std::string);
  DesignLock() = default;

  std::string design_id_;
  std::string hash_;
  Json protocol_;
  std::string timestamp_;
};

// Validates the design, then hashes it together with the protocol. An empty
// `timestamp` is replaced by the current UTC time.
DesignLock freeze(const DesignResult& design, const Json& protocol, std::string timestamp = "");

// Units of a locked design with their outcomes readable.
class AnalysisDataset {
 public:
  std::span<const UnitRecord> units() const { return units_; }
  std::span<const double> outcomes() const { return outcomes_; }
  std::size_t size() const { return units_.size(); }
  std::size_t position(int id) const;
  double outcome(int id) const { return outcomes_[position(id)]; }
  const UnitRecord& unit(int id) const { return units_[position(id)]; }
  const DesignResult& design() const { return design_; }
  const DesignLock& lock() const { return lock_; }

 private:
  friend AnalysisDataset unseal_outcomes(const BlindedDataset&, const DesignLock&,
                                         const DesignResult&);
  AnalysisDataset(DesignLock lock) : lock_(std::move(lock)) {}

  std::vector<UnitRecord> units_;  // in design.retained_ids order
  std::vector<double> outcomes_;
  std::unordered_map<int, std::size_t> index_;
  DesignResult design_;
  DesignLock lock_;
};

// Throws TamperError when the lock's hash does not match `design` and
// ConsistencyError when a retained id is not in `ds`.
AnalysisDataset unseal_outcomes(const BlindedDataset& ds, const DesignLock& lock,
                                const DesignResult& design);

}  // namespace hypex

#endif  // HYPEX_LOCK_H_
